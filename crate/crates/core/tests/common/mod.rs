#![allow(dead_code)]

use std::path::Path;

use rand::Rng;

use peg_insert::action::{ActionSpace, ParameterizedAction, PrimitiveKind, NUM_KINDS, PARAM_DIM};
use peg_insert::agent::TrainConfig;
use peg_insert::harness::{Algo, RunConfig};
use peg_insert::nn::Mlp;
use peg_insert::sim::{EpisodeSetup, HoleFrame, Observation, PegPose, TaskGeometry, OBS_DIM};

/// Parameter slots owned by each primitive type, written out independently
/// of the library's layout.
pub const SLOTS: [std::ops::Range<usize>; NUM_KINDS] = [0..4, 4..8, 8..9];

/// Rx, then Ry, then Rz applied to a body-frame point.
pub fn rotate(r: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    let (sr, cr) = r[0].sin_cos();
    let (sp, cp) = r[1].sin_cos();
    let (sy, cy) = r[2].sin_cos();
    let (x1, y1, z1) = (q[0], cr * q[1] - sr * q[2], sr * q[1] + cr * q[2]);
    let (x2, y2, z2) = (cp * x1 + sp * z1, y1, -sp * x1 + cp * z1);
    [cy * x2 - sy * y2, sy * x2 + cy * y2, z2]
}

fn inside_convex(poly: &[[f64; 2]], q: [f64; 2]) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
    })
}

fn segment_distance(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (px, py) = (a[0] + t * dx - q[0], a[1] + t * dy - q[1]);
    (px * px + py * py).sqrt()
}

/// Distance from a hole-frame point to the outside of the solid block: the
/// half-space below the top face minus the bottomless prism over the hole.
pub fn solid_depth(geom: &TaskGeometry, p: [f64; 3]) -> f64 {
    if p[2] >= 0.0 {
        return 0.0;
    }
    let poly = &geom.hole_polygon.vertices;
    let xy = [p[0], p[1]];
    if inside_convex(poly, xy) {
        return 0.0;
    }
    let lateral = (0..poly.len()).map(|i| segment_distance(poly[i], poly[(i + 1) % poly.len()], xy)).fold(f64::INFINITY, f64::min);
    lateral.min(-p[2])
}

/// Deepest sample point of the peg inside the block.
pub fn peg_depth(geom: &TaskGeometry, pose: &PegPose, hole: &HoleFrame) -> f64 {
    geom.sample_points
        .iter()
        .map(|q| {
            let d = rotate(pose.r, *q);
            let w = [pose.p[0] + d[0], pose.p[1] + d[1], pose.p[2] + d[2]];
            let (s, c) = hole.yaw.sin_cos();
            let (dx, dy) = (w[0] - hole.x, w[1] - hole.y);
            solid_depth(geom, [c * dx + s * dy, -s * dx + c * dy, w[2]])
        })
        .fold(0.0, f64::max)
}

/// Forward pass written directly from the flat layout: per layer the
/// `out x in` weights row by row, then the biases; ReLU between layers.
pub fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let sizes = net.sizes();
    let p = net.params();
    let mut a = x.to_vec();
    let mut off = 0;
    for l in 0..sizes.len() - 1 {
        let (fi, fo) = (sizes[l], sizes[l + 1]);
        let w = &p[off..off + fi * fo];
        let b = &p[off + fi * fo..off + fi * fo + fo];
        off += fi * fo + fo;
        let mut z: Vec<f64> = (0..fo).map(|o| b[o] + (0..fi).map(|i| w[o * fi + i] * a[i]).sum::<f64>()).collect();
        if l + 2 < sizes.len() {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        a = z;
    }
    a
}

/// Q value of type `k` from one pass with every other type's slots zeroed.
pub fn masked_q(net: &Mlp, feats: &[f64; OBS_DIM], xnorm: &[f64; PARAM_DIM], k: usize) -> f64 {
    let mut input = feats.to_vec();
    input.extend((0..PARAM_DIM).map(|j| if SLOTS[k].contains(&j) { xnorm[j] } else { 0.0 }));
    naive_forward(net, &input)[k]
}

pub fn random_obs<R: Rng + ?Sized>(rng: &mut R) -> Observation {
    let mut o = [0.0; OBS_DIM];
    for v in o.iter_mut() {
        *v = rng.random_range(-3.0..3.0);
    }
    Observation(o)
}

/// Net with random biases so that hidden units are not all silent.
pub fn random_net<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Mlp {
    let mut net = Mlp::new(sizes, rng).unwrap();
    for l in 0..net.num_layers() {
        for v in net.bias_mut(l) {
            *v = rng.random_range(-0.3..0.3);
        }
    }
    net
}

pub fn random_action<R: Rng + ?Sized>(rng: &mut R, space: &ActionSpace) -> ParameterizedAction {
    let kind = PrimitiveKind::from_index(rng.random_range(0..NUM_KINDS)).unwrap();
    let params = SLOTS[kind.index()].clone().map(|i| rng.random_range(space.low[i]..=space.high[i])).collect();
    ParameterizedAction::new(kind, params, space).unwrap()
}

pub fn setup(start: PegPose, hole: PegPose) -> EpisodeSetup {
    EpisodeSetup { nominal_hole: PegPose::default(), true_hole: hole, initial_peg: start, seed: 0 }
}

/// Short run with small networks.
pub fn tiny_config(algo: Algo, out: &Path) -> RunConfig {
    RunConfig {
        algo,
        episodes: 6,
        horizon: 8,
        out: out.to_path_buf(),
        eval_every: 3,
        eval_trials: 4,
        checkpoint_every: 2,
        phase1_episodes: 2,
        phase2_episodes: 2,
        train: TrainConfig { hidden: 16, batch_size: 8, warmup: 16, replay_capacity: 200, ..TrainConfig::default() },
        ..RunConfig::default()
    }
}

/// Every file of a run directory with its bytes, sorted by name.
pub fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}
