//! C interface: opaque environment and policy handles, status codes and a
//! per-thread last-error message.
//!
//! Every function returns a [`PiStatus`]. On failure the message is
//! available from [`pi_last_error`] until the next failing call on the same
//! thread. Handles must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use peg_insert::action::{ActionSpace, ParameterizedAction, PrimitiveKind};
use peg_insert::agent::Learner;
use peg_insert::harness::{run_training, Agent, RunConfig};
use peg_insert::sim::{task_by_name, Observation, PegInHoleEnv, StopReason, OBS_DIM};
use peg_insert::Error;

/// Length of an observation vector.
pub const PI_OBS_DIM: usize = 18;
/// Longest parameter slice of any primitive type.
pub const PI_MAX_PARAMS: usize = 4;

const _: () = assert!(PI_OBS_DIM == OBS_DIM);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    UnknownTask = 4,
    Config = 5,
    Checkpoint = 6,
    Io = 7,
    NonFinite = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiPrimitive {
    Translation = 0,
    Rotation = 1,
    Insertion = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiStopReason {
    ForceLimit = 0,
    DistanceThreshold = 1,
    Success = 2,
    Clamp = 3,
}

/// Result of one primitive.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PiStep {
    pub obs: [f64; PI_OBS_DIM],
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub stop_reason: PiStopReason,
    pub substeps: usize,
}

/// A policy's chosen primitive; `params[..num_params]` are meaningful.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PiAction {
    pub kind: PiPrimitive,
    pub num_params: usize,
    pub params: [f64; PI_MAX_PARAMS],
}

/// Opaque simulator handle.
pub struct PiEnv(PegInHoleEnv);

/// Opaque trained-policy handle.
pub struct PiPolicy(Agent);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PiStatus {
    match e {
        Error::Domain(_) | Error::Shape { .. } => PiStatus::InvalidArgument,
        Error::NonFinite(_) => PiStatus::NonFinite,
        Error::UnknownTask(_) => PiStatus::UnknownTask,
        Error::Config(_) => PiStatus::Config,
        Error::Checkpoint(_) | Error::Json(_) => PiStatus::Checkpoint,
        Error::Io(_) | Error::Csv(_) => PiStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status and a message.
fn guard<F: FnOnce() -> Result<(), (PiStatus, String)>>(f: F) -> PiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PiStatus::Panic
        }
    }
}

fn lib<T>(r: peg_insert::Result<T>) -> Result<T, (PiStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), (PiStatus, String)> {
    if p.is_null() {
        Err((PiStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str(p: *const c_char, what: &str) -> Result<String, (PiStatus, String)> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (PiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn stop_reason(r: StopReason) -> PiStopReason {
    match r {
        StopReason::ForceLimit => PiStopReason::ForceLimit,
        StopReason::DistanceThreshold => PiStopReason::DistanceThreshold,
        StopReason::Success => PiStopReason::Success,
        StopReason::Clamp => PiStopReason::Clamp,
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn pi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a simulator for a task preset ("square", "triangle", ...).
///
/// # Safety
/// `task` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pi_env_new(task: *const c_char, out: *mut *mut PiEnv) -> PiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let name = read_str(task, "task")?;
        let env = PegInHoleEnv::with_defaults(lib(task_by_name(&name))?);
        *out = Box::into_raw(Box::new(PiEnv(env)));
        Ok(())
    })
}

/// Releases a simulator; null is ignored.
///
/// # Safety
/// `env` must come from [`pi_env_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pi_env_free(env: *mut PiEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts an episode from `seed` and writes the first observation.
///
/// # Safety
/// `env` must be a live handle and `obs` point to `PI_OBS_DIM` doubles.
#[no_mangle]
pub unsafe extern "C" fn pi_env_reset(env: *mut PiEnv, seed: u64, obs: *mut f64) -> PiStatus {
    guard(|| {
        non_null(env, "env")?;
        non_null(obs, "obs")?;
        let o = (*env).0.reset(seed);
        ptr::copy_nonoverlapping(o.0.as_ptr(), obs, PI_OBS_DIM);
        Ok(())
    })
}

/// Executes one primitive. `params` holds the type's slice: four values for
/// translation and rotation (velocity, then force limit), one for insertion.
///
/// # Safety
/// `env` must be a live handle, `params` point to `num_params` doubles and
/// `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pi_env_step(
    env: *mut PiEnv,
    kind: PiPrimitive,
    params: *const f64,
    num_params: usize,
    out: *mut PiStep,
) -> PiStatus {
    guard(|| {
        non_null(env, "env")?;
        non_null(params, "params")?;
        non_null(out, "out")?;
        let kind = lib(PrimitiveKind::from_index(kind as usize))?;
        let slice = std::slice::from_raw_parts(params, num_params).to_vec();
        let env = &mut (*env).0;
        let action = lib(ParameterizedAction::new(kind, slice, &ActionSpace::default()))?;
        let r = lib(env.execute_primitive(&action))?;
        *out = PiStep {
            obs: r.next_obs.0,
            reward: r.reward,
            done: r.done,
            success: env.is_success(),
            stop_reason: stop_reason(r.stop_reason),
            substeps: r.substeps,
        };
        Ok(())
    })
}

/// Loads a policy from a checkpoint of any of the three learners.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pi_policy_load(path: *const c_char, out: *mut *mut PiPolicy) -> PiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(read_str(path, "path")?);
        let agent = lib(Agent::load(&path))?;
        *out = Box::into_raw(Box::new(PiPolicy(agent)));
        Ok(())
    })
}

/// Releases a policy; null is ignored.
///
/// # Safety
/// `policy` must come from [`pi_policy_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pi_policy_free(policy: *mut PiPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Greedy primitive for an observation.
///
/// # Safety
/// `policy` must be a live handle, `obs` point to `PI_OBS_DIM` doubles and
/// `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pi_policy_act(policy: *const PiPolicy, obs: *const f64, out: *mut PiAction) -> PiStatus {
    guard(|| {
        non_null(policy, "policy")?;
        non_null(obs, "obs")?;
        non_null(out, "out")?;
        let mut o = [0.0; PI_OBS_DIM];
        ptr::copy_nonoverlapping(obs, o.as_mut_ptr(), PI_OBS_DIM);
        let a = lib((*policy).0.greedy_action(&Observation(o)))?;
        let mut params = [0.0; PI_MAX_PARAMS];
        params[..a.params.len()].copy_from_slice(&a.params);
        let kind = match a.kind {
            PrimitiveKind::Translation => PiPrimitive::Translation,
            PrimitiveKind::Rotation => PiPrimitive::Rotation,
            PrimitiveKind::Insertion => PiPrimitive::Insertion,
        };
        *out = PiAction { kind, num_params: a.params.len(), params };
        Ok(())
    })
}

/// Trains per a TOML run configuration, writing artifacts to its `out`
/// directory. Writes the final evaluation success rate.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `success_rate` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pi_train(config_path: *const c_char, success_rate: *mut f64) -> PiStatus {
    guard(|| {
        non_null(success_rate, "success_rate")?;
        let path = PathBuf::from(read_str(config_path, "config_path")?);
        let cfg = lib(RunConfig::load(&path))?;
        let summary = lib(run_training(&cfg))?;
        *success_rate = summary.final_eval.success_rate;
        Ok(())
    })
}
