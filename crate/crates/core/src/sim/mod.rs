//! Deterministic quasi-static peg-in-hole simulator.

pub mod contact;
pub mod env;
pub mod geometry;
pub mod pose;

pub use contact::{contact_wrench, contact_wrench_in, max_penetration, ContactMode, Resolver, K_EFF};
pub use env::{
    check_success, goal_error, reward, sample_setup, EpisodeSetup, Observation, PegInHoleEnv, PrimitiveOutcome,
    RewardSpec, SimConfig, StopReason, Uncertainty, OBS_DIM,
};
pub use geometry::{make_task, task_by_name, Penetration, Polygon, Shape, TaskGeometry, TaskPreset};
pub use pose::{HoleFrame, PegPose, Wrench};
