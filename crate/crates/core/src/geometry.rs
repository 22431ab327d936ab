//! Convex domains and the uniform node grids laid over them.
//!
//! Points are `[x, y]`; one-dimensional domains use `y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior nodes required along every coordinate direction.
pub const MIN_NODES_PER_DIRECTION: usize = 32;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// `[0, length]`.
    Interval { length: f64 },
    /// `[0, width] x [0, height]`.
    Rectangle { width: f64, height: f64 },
    /// Disk centered at the origin.
    Disk { radius: f64 },
    /// `x^2/semi_x^2 + y^2/semi_y^2 < 1`.
    Ellipse { semi_x: f64, semi_y: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let sizes: &[f64] = match self {
            DomainSpec::Interval { length } => &[*length],
            DomainSpec::Rectangle { width, height } => &[*width, *height],
            DomainSpec::Disk { radius } => &[*radius],
            DomainSpec::Ellipse { semi_x, semi_y } => &[*semi_x, *semi_y],
        };
        if sizes.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!("domain sizes must be positive: {self:?}")))
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Interval { length } => length,
            DomainSpec::Rectangle { width, height } => width.hypot(height),
            DomainSpec::Disk { radius } => 2.0 * radius,
            DomainSpec::Ellipse { semi_x, semi_y } => 2.0 * semi_x.max(semi_y),
        }
    }

    /// Whether the boundary is smooth and strictly convex.
    pub fn strictly_convex(&self) -> bool {
        matches!(self, DomainSpec::Disk { .. } | DomainSpec::Ellipse { .. })
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            DomainSpec::Interval { length } => p[0] > 0.0 && p[0] < length,
            DomainSpec::Rectangle { width, height } => p[0] > 0.0 && p[0] < width && p[1] > 0.0 && p[1] < height,
            DomainSpec::Disk { radius } => p[0].hypot(p[1]) < radius,
            DomainSpec::Ellipse { semi_x, semi_y } => (p[0] / semi_x).powi(2) + (p[1] / semi_y).powi(2) < 1.0,
        }
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match *self {
            DomainSpec::Interval { length } => p[0].min(length - p[0]),
            DomainSpec::Rectangle { width, height } => p[0].min(width - p[0]).min(p[1]).min(height - p[1]),
            DomainSpec::Disk { radius } => radius - p[0].hypot(p[1]),
            DomainSpec::Ellipse { semi_x, semi_y } => ellipse_distance(semi_x, semi_y, p),
        }
    }

    /// Bounding box `(lower, upper)`.
    pub fn bounds(&self) -> (Point, Point) {
        match *self {
            DomainSpec::Interval { length } => ([0.0, 0.0], [length, 0.0]),
            DomainSpec::Rectangle { width, height } => ([0.0, 0.0], [width, height]),
            DomainSpec::Disk { radius } => ([-radius, -radius], [radius, radius]),
            DomainSpec::Ellipse { semi_x, semi_y } => ([-semi_x, -semi_y], [semi_x, semi_y]),
        }
    }

    /// Distance from `p` to the boundary along direction `axis` (0 = x, 1 = y) with sign `dir`.
    fn axis_distance(&self, p: Point, axis: usize, dir: f64) -> f64 {
        match *self {
            DomainSpec::Interval { length } => {
                if dir > 0.0 {
                    length - p[0]
                } else {
                    p[0]
                }
            }
            DomainSpec::Rectangle { width, height } => {
                let top = if axis == 0 { width } else { height };
                if dir > 0.0 {
                    top - p[axis]
                } else {
                    p[axis]
                }
            }
            DomainSpec::Disk { radius } => {
                let other = p[1 - axis];
                let reach = (radius * radius - other * other).max(0.0).sqrt();
                reach - dir * p[axis]
            }
            DomainSpec::Ellipse { semi_x, semi_y } => {
                let (along, across) = if axis == 0 { (semi_x, semi_y) } else { (semi_y, semi_x) };
                let other = p[1 - axis];
                let reach = along * (1.0 - (other / across).powi(2)).max(0.0).sqrt();
                reach - dir * p[axis]
            }
        }
    }
}

/// Distance from a point to the ellipse. The foot point `(a cos t, b sin t)` makes the
/// squared distance stationary in `t`; by symmetry only `t` in `[0, pi/2]` is searched.
fn ellipse_distance(a: f64, b: f64, p: Point) -> f64 {
    let (x, y) = (p[0].abs(), p[1].abs());
    let g = |t: f64| (b * b - a * a) * t.cos() * t.sin() + a * x * t.sin() - b * y * t.cos();
    let distance = |t: f64| (a * t.cos() - x).hypot(b * t.sin() - y);
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut best = distance(0.0).min(distance(quarter));
    let pieces = 64;
    for k in 0..pieces {
        let (mut lo, mut hi) = (quarter * k as f64 / pieces as f64, quarter * (k + 1) as f64 / pieces as f64);
        let (g_lo, g_hi) = (g(lo), g(hi));
        if g_lo.signum() == g_hi.signum() && g_lo != 0.0 {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == g_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(distance(0.5 * (lo + hi)));
    }
    best
}

/// What lies one step along an axis from a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbor {
    /// Another interior node at the given distance.
    Node { index: usize, distance: f64 },
    /// The boundary, crossed at the given distance (no farther than the grid step).
    Boundary { distance: f64 },
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        match *self {
            Neighbor::Node { distance, .. } | Neighbor::Boundary { distance } => distance,
        }
    }
}

/// Interior nodes of a uniform tensor grid clipped to a domain.
#[derive(Debug, Clone)]
pub struct NodeGrid {
    pub domain: DomainSpec,
    /// Grid steps along x and y (y unused in 1D).
    pub spacing: [f64; 2],
    pub points: Vec<Point>,
    /// Per node: `[-x, +x, -y, +y]` neighbors; the y entries are absent in 1D.
    pub neighbors: Vec<[Option<Neighbor>; 4]>,
    /// Tensor index `(i, j)` of every node.
    pub lattice: Vec<(i64, i64)>,
    lookup: std::collections::HashMap<(i64, i64), usize>,
}

impl NodeGrid {
    /// Builds the grid with nominal step `h`. Rectangles and intervals round `h` so the
    /// sides fall on grid lines; disks and ellipses use lattice points `h*(i, j)`.
    pub fn new(domain: DomainSpec, h: f64) -> Result<NodeGrid> {
        domain.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidProblem(format!("grid step must be positive, got {h}")));
        }
        let (_, upper) = domain.bounds();
        let (spacing, origin, counts) = match domain {
            DomainSpec::Interval { length } => {
                let n = (length / h).round().max(1.0) as i64;
                ([length / n as f64, 1.0], [0.0, 0.0], (n, 0))
            }
            DomainSpec::Rectangle { width, height } => {
                let nx = (width / h).round().max(1.0) as i64;
                let ny = (height / h).round().max(1.0) as i64;
                ([width / nx as f64, height / ny as f64], [0.0, 0.0], (nx, ny))
            }
            _ => {
                let nx = (upper[0] / h).ceil() as i64;
                let ny = (upper[1] / h).ceil() as i64;
                ([h, h], [0.0, 0.0], (nx, ny))
            }
        };
        let (i_range, j_range) = match domain {
            DomainSpec::Interval { .. } => (1..counts.0, 0..1),
            DomainSpec::Rectangle { .. } => (1..counts.0, 1..counts.1),
            _ => (-counts.0..counts.0 + 1, -counts.1..counts.1 + 1),
        };

        let dimension = domain.dimension();
        let mut points = Vec::new();
        let mut lattice = Vec::new();
        let mut lookup = std::collections::HashMap::new();
        for j in j_range {
            for i in i_range.clone() {
                let p = [origin[0] + i as f64 * spacing[0], if dimension == 1 { 0.0 } else { origin[1] + j as f64 * spacing[1] }];
                if domain.contains(p) {
                    lookup.insert((i, j), points.len());
                    points.push(p);
                    lattice.push((i, j));
                }
            }
        }

        let per_direction = |axis: usize| -> usize {
            let mut lines = std::collections::HashMap::<i64, usize>::new();
            for &(i, j) in &lattice {
                *lines.entry(if axis == 0 { j } else { i }).or_default() += 1;
            }
            lines.values().copied().max().unwrap_or(0)
        };
        for axis in 0..dimension {
            let count = per_direction(axis);
            if count < MIN_NODES_PER_DIRECTION {
                return Err(Error::GridTooCoarse(format!(
                    "{count} interior nodes along axis {axis} (need at least {MIN_NODES_PER_DIRECTION}); reduce h = {h}"
                )));
            }
        }

        let mut neighbors = Vec::with_capacity(points.len());
        for (k, &(i, j)) in lattice.iter().enumerate() {
            let p = points[k];
            let mut entry = [None; 4];
            for axis in 0..dimension {
                for (slot, dir) in [(2 * axis, -1i64), (2 * axis + 1, 1i64)] {
                    let key = if axis == 0 { (i + dir, j) } else { (i, j + dir) };
                    entry[slot] = Some(match lookup.get(&key) {
                        Some(&index) => Neighbor::Node { index, distance: spacing[axis] },
                        None => {
                            let d = domain.axis_distance(p, axis, dir as f64).clamp(0.0, spacing[axis]);
                            Neighbor::Boundary { distance: d.max(1e-12 * spacing[axis]) }
                        }
                    });
                }
            }
            neighbors.push(entry);
        }
        Ok(NodeGrid { domain, spacing, points, neighbors, lattice, lookup })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Largest grid step.
    pub fn step(&self) -> f64 {
        if self.dimension() == 1 {
            self.spacing[0]
        } else {
            self.spacing[0].max(self.spacing[1])
        }
    }

    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        self.lookup.get(&(i, j)).copied()
    }

    /// Largest index distance between a node and any of its node neighbors.
    pub fn bandwidth(&self) -> usize {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(k, entry)| {
                entry.iter().flatten().filter_map(move |n| match n {
                    Neighbor::Node { index, .. } => Some(index.abs_diff(k)),
                    Neighbor::Boundary { .. } => None,
                })
            })
            .max()
            .unwrap_or(0)
    }

    /// Gradient of a nodal field (zero on the boundary) by second-order differences with
    /// unequal arms where a node touches the boundary.
    pub fn gradient(&self, values: &[f64], k: usize) -> [f64; 2] {
        let mut grad = [0.0; 2];
        for axis in 0..self.dimension() {
            let (left, right) = (self.neighbors[k][2 * axis].unwrap(), self.neighbors[k][2 * axis + 1].unwrap());
            let value = |n: Neighbor| match n {
                Neighbor::Node { index, .. } => values[index],
                Neighbor::Boundary { .. } => 0.0,
            };
            let (hl, hr) = (left.distance(), right.distance());
            let (ul, ur, uc) = (value(left), value(right), values[k]);
            grad[axis] = (hl * hl * ur - hr * hr * ul + (hr * hr - hl * hl) * uc) / (hl * hr * (hl + hr));
        }
        grad
    }

    /// Whether every neighbor of node `k` is another node (no boundary arm).
    pub fn is_regular(&self, k: usize) -> bool {
        self.neighbors[k].iter().flatten().all(|n| matches!(n, Neighbor::Node { .. }))
    }
}
