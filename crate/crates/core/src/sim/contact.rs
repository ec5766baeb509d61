//! Penalty contact wrench and quasi-static penetration resolution.

use super::geometry::TaskGeometry;
use super::pose::{add, cross, dot, scale, sub, HoleFrame, PegPose, Vec3, Wrench};

/// Stiffness of a full-face flat contact, N/mm.
pub const K_EFF: f64 = 10.0;

/// A penetrating sample point in world coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ContactPoint {
    pub world: Vec3,
    pub depth: f64,
    pub normal: Vec3,
}

/// Which escape directions a contact may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactMode {
    /// Per-point minimum escape, top face or wall.
    Surface,
    /// The peg bottom is inside the hole; the cavity band only has walls.
    Inserted,
}

impl ContactMode {
    /// `Inserted` once the bottom centre of a (valid) peg pose sits below the
    /// rim and inside the hole outline.
    pub fn of(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame) -> Self {
        let c = hole.to_local(pose.p);
        if c[2] < 0.0 && geom.hole_polygon.contains([c[0], c[1]]) {
            ContactMode::Inserted
        } else {
            ContactMode::Surface
        }
    }
}

/// All penetrating sample points of `pose` against the hole at `hole`.
pub fn contact_points(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame) -> Vec<ContactPoint> {
    contact_points_in(pose, geom, hole, ContactMode::Surface)
}

pub fn contact_points_in(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame, mode: ContactMode) -> Vec<ContactPoint> {
    let mut out = Vec::new();
    for local in &geom.sample_points {
        let world = pose.transform(*local);
        let q = hole.to_local(world);
        let pen = match mode {
            ContactMode::Surface => geom.point_penetration(q),
            ContactMode::Inserted => geom.wall_penetration(q),
        };
        if let Some(pen) = pen {
            if pen.depth > 0.0 {
                out.push(ContactPoint { world, depth: pen.depth, normal: hole.dir_to_world(pen.normal) });
            }
        }
    }
    out
}

/// Largest sample-point penetration, mm (0 when free).
pub fn max_penetration(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame) -> f64 {
    contact_points(pose, geom, hole).iter().map(|c| c.depth).fold(0.0, f64::max)
}

/// Penalty wrench on the peg: per-point force `k_p * depth * normal` with
/// `k_p = K_EFF / n_bottom`, torque about the TCP in N*cm.
pub fn contact_wrench(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame) -> Wrench {
    contact_wrench_in(pose, geom, hole, ContactMode::Surface)
}

pub fn contact_wrench_in(pose: &PegPose, geom: &TaskGeometry, hole: &HoleFrame, mode: ContactMode) -> Wrench {
    let k_p = K_EFF / geom.n_bottom as f64;
    let mut w = Wrench::default();
    for c in contact_points_in(pose, geom, hole, mode) {
        let f = scale(c.normal, k_p * c.depth);
        let r = scale(sub(c.world, pose.p), 0.1);
        w.f = add(w.f, f);
        w.tau = add(w.tau, cross(r, f));
    }
    w
}

/// Projects a penetrating pose back out of the solid.
#[derive(Clone, Debug)]
pub struct Resolver {
    /// Outer re-linearisation iterations.
    pub max_iters: usize,
    /// Accepted residual penetration, mm.
    pub tolerance: f64,
    /// Let wall contacts turn the peg about the vertical axis.
    pub yaw_compliance: bool,
}

impl Default for Resolver {
    fn default() -> Self {
        Self { max_iters: 10, tolerance: 0.01, yaw_compliance: true }
    }
}

const MARGIN: f64 = 1e-3;
const SWEEPS: usize = 200;

impl Resolver {
    /// Moves `pose` by the smallest (translation, yaw) correction that
    /// clears every linearised contact constraint, re-linearising up to
    /// `max_iters` times. Returns `None` when the residual stays above the
    /// tolerance; otherwise the resolved pose and its residual penetration.
    pub fn resolve(&self, pose: PegPose, geom: &TaskGeometry, hole: &HoleFrame) -> Option<(PegPose, f64)> {
        self.resolve_in(pose, geom, hole, ContactMode::Surface)
    }

    pub fn resolve_in(
        &self,
        mut pose: PegPose,
        geom: &TaskGeometry,
        hole: &HoleFrame,
        mode: ContactMode,
    ) -> Option<(PegPose, f64)> {
        // rotations cost as much as moving the rim by the same arc
        let lever = geom.peg_polygon.circumradius().max(1.0);
        let inv_w = [1.0, 1.0, 1.0, if self.yaw_compliance { 1.0 / (lever * lever) } else { 0.0 }];
        for _ in 0..self.max_iters {
            let contacts = contact_points_in(&pose, geom, hole, mode);
            let worst = contacts.iter().map(|c| c.depth).fold(0.0, f64::max);
            if worst <= 0.5 * self.tolerance {
                return Some((pose, worst));
            }
            let rows: Vec<([f64; 4], f64)> = contacts
                .iter()
                .map(|c| {
                    let r = sub(c.world, pose.p);
                    let about_z = [-r[1], r[0], 0.0];
                    ([c.normal[0], c.normal[1], c.normal[2], dot(c.normal, about_z)], c.depth + MARGIN)
                })
                .collect();
            let u = min_norm_correction(&rows, inv_w);
            if u.iter().any(|v| !v.is_finite()) {
                return None;
            }
            pose.p = add(pose.p, [u[0], u[1], u[2]]);
            pose.r[2] += u[3];
        }
        let residual = contact_points_in(&pose, geom, hole, mode).iter().map(|c| c.depth).fold(0.0, f64::max);
        (residual <= self.tolerance).then_some((pose, residual))
    }
}

/// Hildreth's dual coordinate ascent for
/// `min 1/2 u' W u  s.t.  a_i . u >= b_i`, with `W^-1 = diag(inv_w)`.
fn min_norm_correction(rows: &[([f64; 4], f64)], inv_w: [f64; 4]) -> [f64; 4] {
    let mut lambda = vec![0.0; rows.len()];
    let mut u = [0.0; 4];
    let denom: Vec<f64> = rows
        .iter()
        .map(|(a, _)| (0..4).map(|j| a[j] * a[j] * inv_w[j]).sum::<f64>())
        .collect();
    for _ in 0..SWEEPS {
        let mut change = 0.0f64;
        for (i, (a, b)) in rows.iter().enumerate() {
            if denom[i] <= 0.0 {
                continue;
            }
            let slack = b - (0..4).map(|j| a[j] * u[j]).sum::<f64>();
            let new = (lambda[i] + slack / denom[i]).max(0.0);
            let delta = new - lambda[i];
            if delta != 0.0 {
                lambda[i] = new;
                for j in 0..4 {
                    u[j] += delta * inv_w[j] * a[j];
                }
                change = change.max(delta.abs());
            }
        }
        if change < 1e-12 {
            break;
        }
    }
    u
}
