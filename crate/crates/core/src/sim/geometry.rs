//! Peg and hole cross-sections, contact sample points and the point-wise
//! penetration oracle.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pose::Vec3;
use crate::error::{Error, Result};

/// Hole depth used by every preset, mm.
pub const HOLE_DEPTH_MM: f64 = 25.0;
/// Peg height, mm.
pub const PEG_HEIGHT_MM: f64 = 60.0;
/// Maximum spacing of bottom-edge sample points, mm.
pub const EDGE_SAMPLE_SPACING_MM: f64 = 5.0;
/// Heights of the vertical-edge sample points above the bottom face, mm.
pub const VERTICAL_SAMPLE_HEIGHTS_MM: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
/// Number of vertices used for the round hole.
pub const ROUND_SEGMENTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Triangle,
    Pentagon,
    Round,
}

impl Shape {
    fn sides(self) -> usize {
        match self {
            Shape::Square => 4,
            Shape::Triangle => 3,
            Shape::Pentagon => 5,
            Shape::Round => ROUND_SEGMENTS,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Square => "square",
            Shape::Triangle => "triangle",
            Shape::Pentagon => "pentagon",
            Shape::Round => "round",
        })
    }
}

/// Convex CCW polygon in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    /// Regular `n`-gon with the given circumradius, centred at the origin,
    /// with one edge parallel to the x axis.
    pub fn regular(n: usize, circumradius: f64) -> Self {
        let start = -PI / 2.0 + PI / n as f64;
        let vertices = (0..n)
            .map(|i| {
                let a = start + 2.0 * PI * i as f64 / n as f64;
                [circumradius * a.cos(), circumradius * a.sin()]
            })
            .collect();
        Self { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Closed containment test.
    pub fn contains(&self, q: [f64; 2]) -> bool {
        self.edges().all(|(a, b)| {
            let cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
            cross >= 0.0
        })
    }

    /// Distance from `q` to the boundary and the closest boundary point.
    pub fn closest_boundary_point(&self, q: [f64; 2]) -> (f64, [f64; 2]) {
        let mut best = (f64::INFINITY, q);
        for (a, b) in self.edges() {
            let ab = [b[0] - a[0], b[1] - a[1]];
            let aq = [q[0] - a[0], q[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0);
            let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2)).sqrt();
            if d < best.0 {
                best = (d, c);
            }
        }
        best
    }

    pub fn area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
            .sum::<f64>()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let a = self.area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let c = p[0] * q[1] - q[0] * p[1];
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    pub fn is_convex_ccw(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0.0
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { vertices: self.vertices.iter().map(|v| [v[0] * s, v[1] * s]).collect() }
    }

    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }
}

/// Escape of a single point out of the solid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    pub normal: Vec3,
}

/// Hole, peg and the contact sample points of one assembly task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGeometry {
    pub name: String,
    pub shape: Shape,
    pub hole_size: f64,
    pub clearance: f64,
    pub hole_depth: f64,
    pub peg_height: f64,
    pub hole_polygon: Polygon,
    pub peg_polygon: Polygon,
    /// Peg-frame sample points; the first `n_bottom` lie on the bottom face.
    pub sample_points: Vec<Vec3>,
    pub n_bottom: usize,
}

impl TaskGeometry {
    pub fn bottom_points(&self) -> &[Vec3] {
        &self.sample_points[..self.n_bottom]
    }

    /// Penetration of a hole-frame point into the solid surrounding the hole.
    ///
    /// The solid is the half-space `z <= 0` minus the prism over the hole
    /// polygon between `-hole_depth` and `0`; the prism is open below.
    /// Vertical escape wins ties.
    pub fn point_penetration(&self, p: Vec3) -> Option<Penetration> {
        if p[2] >= 0.0 {
            return None;
        }
        let xy = [p[0], p[1]];
        if self.hole_polygon.contains(xy) {
            return None;
        }
        let vertical = Penetration { depth: -p[2], normal: [0.0, 0.0, 1.0] };
        if p[2] >= -self.hole_depth {
            let (d, c) = self.hole_polygon.closest_boundary_point(xy);
            if d < vertical.depth && d > 0.0 {
                let n = [(c[0] - p[0]) / d, (c[1] - p[1]) / d, 0.0];
                return Some(Penetration { depth: d, normal: n });
            }
        }
        Some(vertical)
    }

    /// Like [`point_penetration`](Self::point_penetration) but inside the
    /// cavity band only the walls can push back. This is the right escape
    /// for a peg whose bottom is already in the hole: none of its points can
    /// have reached the top face without first passing through a wall.
    pub fn wall_penetration(&self, p: Vec3) -> Option<Penetration> {
        if p[2] >= 0.0 || p[2] < -self.hole_depth {
            return self.point_penetration(p);
        }
        let xy = [p[0], p[1]];
        if self.hole_polygon.contains(xy) {
            return None;
        }
        let (d, c) = self.hole_polygon.closest_boundary_point(xy);
        if d <= 0.0 {
            return None;
        }
        Some(Penetration { depth: d, normal: [(c[0] - p[0]) / d, (c[1] - p[1]) / d, 0.0] })
    }
}

/// Builds a task from a shape, its characteristic size (side length, or
/// diameter for round), the diametral clearance and the hole depth.
pub fn make_task(shape: Shape, hole_size: f64, clearance: f64, hole_depth: f64) -> Result<TaskGeometry> {
    if !(hole_size > 0.0 && clearance > 0.0 && hole_depth > 0.0) {
        return Err(Error::Domain("task dimensions must be positive".into()));
    }
    if hole_size <= clearance {
        return Err(Error::Domain("hole size must exceed clearance".into()));
    }
    let n = shape.sides();
    let circumradius = match shape {
        Shape::Round => hole_size / 2.0,
        _ => hole_size / (2.0 * (PI / n as f64).sin()),
    };
    let hole_polygon = Polygon::regular(n, circumradius);
    let peg_polygon = hole_polygon.scaled((hole_size - clearance) / hole_size);

    let mut bottom = Vec::new();
    for (a, b) in peg_polygon.edges() {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let segments = (len / EDGE_SAMPLE_SPACING_MM).ceil().max(1.0) as usize;
        for j in 0..segments {
            let t = j as f64 / segments as f64;
            bottom.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0]);
        }
    }
    let n_bottom = bottom.len();
    let mut sample_points = bottom;
    for v in &peg_polygon.vertices {
        for h in VERTICAL_SAMPLE_HEIGHTS_MM {
            sample_points.push([v[0], v[1], h]);
        }
    }

    Ok(TaskGeometry {
        name: shape.to_string(),
        shape,
        hole_size,
        clearance,
        hole_depth,
        peg_height: PEG_HEIGHT_MM,
        hole_polygon,
        peg_polygon,
        sample_points,
        n_bottom,
    })
}

/// Named task presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskPreset {
    Square,
    Triangle,
    Pentagon,
    SquareTight,
    Round,
}

impl TaskPreset {
    pub const ALL: [TaskPreset; 5] = [
        TaskPreset::Square,
        TaskPreset::Triangle,
        TaskPreset::Pentagon,
        TaskPreset::SquareTight,
        TaskPreset::Round,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskPreset::Square => "square",
            TaskPreset::Triangle => "triangle",
            TaskPreset::Pentagon => "pentagon",
            TaskPreset::SquareTight => "square-tight",
            TaskPreset::Round => "round",
        }
    }

    /// (shape, hole size mm, clearance mm)
    pub fn dimensions(self) -> (Shape, f64, f64) {
        match self {
            TaskPreset::Square => (Shape::Square, 51.42, 1.40),
            TaskPreset::Triangle => (Shape::Triangle, 54.50, 1.62),
            TaskPreset::Pentagon => (Shape::Pentagon, 57.81, 1.29),
            TaskPreset::SquareTight => (Shape::Square, 51.42, 0.50),
            // machined part has 0.05 mm; widened for the 0.01 mm contact tolerance
            TaskPreset::Round => (Shape::Round, 25.36, 0.30),
        }
    }

    pub fn geometry(self) -> TaskGeometry {
        let (shape, size, clearance) = self.dimensions();
        let mut g = make_task(shape, size, clearance, HOLE_DEPTH_MM).expect("preset dimensions are valid");
        g.name = self.name().to_string();
        g
    }
}

impl FromStr for TaskPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

impl fmt::Display for TaskPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Looks up a preset geometry by name.
pub fn task_by_name(name: &str) -> Result<TaskGeometry> {
    Ok(name.parse::<TaskPreset>()?.geometry())
}
