//! The operator `L u = Δu - B·∇u - c u` and the quantities derived from it: the curl
//! matrix `U`, the vector field `V`, the drift velocity `Y`, and the constants `κ`, `Λ`, `τ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ScalarFieldSpec, VectorFieldSpec};
use crate::geometry::{DomainSpec, NodeGrid, Point};
use crate::modulus::ModulusProfile;

/// Number of distance buckets for the convexity modulus of `V`.
pub const TAU_BUCKETS: usize = 64;
/// Smallest number of sampled pairs accepted by the pair-sampling estimators.
pub const MIN_PAIRS: usize = 10_000;
/// Relative deflation applied to sampled `τ` before it is used.
pub const TAU_DEFLATION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub domain: DomainSpec,
    #[serde(default = "zero_vector")]
    pub drift: VectorFieldSpec,
    #[serde(default = "zero_scalar")]
    pub potential: ScalarFieldSpec,
    /// Potential `phi` with `B = ∇phi`, when the drift is a gradient.
    #[serde(default)]
    pub phi: Option<ScalarFieldSpec>,
    /// Constant `K` in `|dβ(x)| ≤ K dist(x, ∂Ω)`, when known.
    #[serde(default)]
    pub k_bound: Option<f64>,
}

fn zero_vector() -> VectorFieldSpec {
    VectorFieldSpec::Zero
}

fn zero_scalar() -> ScalarFieldSpec {
    ScalarFieldSpec::Zero
}

impl OperatorSpec {
    pub fn new(domain: DomainSpec, drift: VectorFieldSpec, potential: ScalarFieldSpec) -> OperatorSpec {
        OperatorSpec { domain, drift, potential, phi: None, k_bound: None }
    }

    /// `Δu - ∇phi·∇u - c u`.
    pub fn weighted_laplacian(domain: DomainSpec, phi: ScalarFieldSpec, potential: ScalarFieldSpec) -> OperatorSpec {
        OperatorSpec { domain, drift: VectorFieldSpec::Gradient { potential: phi }, potential, phi: Some(phi), k_bound: Some(0.0) }
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn diameter(&self) -> f64 {
        self.domain.diameter()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if let Some(phi) = self.phi {
            let matches = match self.drift {
                VectorFieldSpec::Gradient { potential } => potential == phi,
                _ => false,
            };
            if !matches {
                return Err(Error::InvalidProblem("phi is given but the drift is not its gradient".into()));
            }
        }
        if let Some(k) = self.k_bound {
            if !(k >= 0.0) {
                return Err(Error::InvalidProblem(format!("K must be nonnegative, got {k}")));
            }
        }
        Ok(())
    }

    /// Whether `dβ ≡ 0` holds by construction.
    pub fn is_gradient(&self) -> bool {
        self.phi.is_some() || self.drift.is_gradient()
    }

    /// Gradient potential, either given or implied by the drift.
    pub fn gradient_potential(&self) -> Option<ScalarFieldSpec> {
        self.phi.or_else(|| self.drift.potential())
    }
}

/// Spectral norm of the antisymmetric 2x2 matrix `U`.
pub fn curl_norm(u: &[[f64; 2]; 2]) -> f64 {
    0.5 * (u[0][1] - u[1][0]).abs()
}

/// `V_j = ∂_j c + 1/4 ∂_j |B|^2 - 1/2 Δb^j` from closed-form derivatives.
pub fn v_field(op: &OperatorSpec, p: Point) -> [f64; 2] {
    let dimension = op.dimension();
    let grad_c = op.potential.gradient(p);
    let b = op.drift.value(p);
    let jac = op.drift.jacobian(p);
    let lap_b = op.drift.laplacian(p, dimension);
    let mut v = [0.0; 2];
    for j in 0..dimension {
        // 1/4 ∂_j |B|^2 = 1/2 Σ_i b^i ∂_j b^i
        let half_grad: f64 = (0..dimension).map(|i| b[i] * jac[i][j]).sum::<f64>() * 0.5;
        v[j] = grad_c[j] + half_grad - 0.5 * lap_b[j];
    }
    v
}

/// Fields on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub dimension: usize,
    pub points: Vec<Point>,
    pub distance: Vec<f64>,
    pub curl: Vec<[[f64; 2]; 2]>,
    pub v: Vec<[f64; 2]>,
    /// `Y = -∇ log u0 + B/2`, present when an eigenfunction was supplied.
    pub y: Option<Vec<[f64; 2]>>,
    /// `|∇u0| / u0`.
    pub log_gradient_norm: Option<Vec<f64>>,
    pub spacing: f64,
}

/// Evaluates `U` and `V` at the grid nodes, and `Y` when `u0` is given.
pub fn compute_derived_fields(op: &OperatorSpec, grid: &NodeGrid, u0: Option<&[f64]>) -> Result<DerivedFields> {
    let dimension = grid.dimension();
    let points = grid.points.clone();
    let distance = points.iter().map(|&p| op.domain.distance_to_boundary(p)).collect();
    let curl = points.iter().map(|&p| op.drift.curl_matrix(p, dimension)).collect();
    let v = points.iter().map(|&p| v_field(op, p)).collect();
    let (y, log_gradient_norm) = match u0 {
        None => (None, None),
        Some(u0) => {
            if u0.len() != grid.len() {
                return Err(Error::InvalidProblem(format!("u0 has {} values for {} nodes", u0.len(), grid.len())));
            }
            let mut ys = Vec::with_capacity(grid.len());
            let mut norms = Vec::with_capacity(grid.len());
            for (k, &p) in points.iter().enumerate() {
                if u0[k] <= 0.0 {
                    return Err(Error::NonPositiveEigenfunction { node: k, value: u0[k] });
                }
                let g = grid.gradient(u0, k);
                let b = op.drift.value(p);
                let mut y = [0.0; 2];
                for j in 0..dimension {
                    y[j] = -g[j] / u0[k] + 0.5 * b[j];
                }
                ys.push(y);
                norms.push(g[0].hypot(g[1]) / u0[k]);
            }
            (Some(ys), Some(norms))
        }
    };
    Ok(DerivedFields { dimension, points, distance, curl, v, y, log_gradient_norm, spacing: grid.step() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// Maximum with the boundary layer doubled.
    pub kappa_wide_layer: f64,
    pub boundary_layer: f64,
    /// The two maxima agree within 10%.
    pub stable: bool,
}

fn layered_max(fields: &DerivedFields, layer: f64, value: impl Fn(usize) -> f64) -> f64 {
    (0..fields.points.len()).filter(|&k| fields.distance[k] >= layer).map(value).fold(0.0, f64::max)
}

/// `κ = max (|∇u0| / u0) |dβ|` over nodes at least `boundary_layer` from the boundary.
pub fn estimate_kappa(fields: &DerivedFields, boundary_layer: f64) -> Result<KappaEstimate> {
    let norms = fields.log_gradient_norm.as_ref().ok_or(Error::MissingEigenfunction)?;
    if boundary_layer < 2.0 * fields.spacing * (1.0 - 1e-12) {
        return Err(Error::InvalidProblem(format!("boundary layer {boundary_layer} is below two grid spacings")));
    }
    let value = |k: usize| norms[k] * curl_norm(&fields.curl[k]);
    let kappa = layered_max(fields, boundary_layer, value);
    let kappa_wide_layer = layered_max(fields, 2.0 * boundary_layer, value);
    let stable = (kappa - kappa_wide_layer).abs() <= 0.1 * kappa.max(f64::MIN_POSITIVE) || kappa == 0.0;
    Ok(KappaEstimate { kappa, kappa_wide_layer, boundary_layer, stable })
}

/// `Λ = max |Y| ‖U‖` over nodes at least two grid spacings from the boundary.
pub fn estimate_lambda(fields: &DerivedFields) -> Result<f64> {
    let y = fields.y.as_ref().ok_or(Error::MissingEigenfunction)?;
    Ok(layered_max(fields, 2.0 * fields.spacing, |k| y[k][0].hypot(y[k][1]) * curl_norm(&fields.curl[k])))
}

/// `K` estimate: `max |dβ(x)| / dist(x, ∂Ω)` over the nodes.
pub fn estimate_k(fields: &DerivedFields) -> f64 {
    (0..fields.points.len()).map(|k| curl_norm(&fields.curl[k]) / fields.distance[k]).fold(0.0, f64::max)
}

/// Sampled lower bound `τ(s)` for `(V(y) - V(x))·e ≥ 2τ(|y - x|/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauProfile {
    pub half_diameter: f64,
    /// Per bucket over `(0, D/2]`: half the smallest sampled increment.
    pub tau: Vec<f64>,
    /// Buckets that received no sample and copy a neighbor.
    pub filled: Vec<bool>,
    pub pairs: usize,
}

impl TauProfile {
    pub fn bucket_width(&self) -> f64 {
        self.half_diameter / self.tau.len() as f64
    }

    pub fn bucket(&self, s: f64) -> usize {
        ((s / self.bucket_width()) as usize).min(self.tau.len() - 1)
    }

    /// Sampled values shifted down by 5% of their magnitude.
    pub fn usable(&self) -> Vec<f64> {
        self.tau.iter().map(|t| t - TAU_DEFLATION * t.abs()).collect()
    }

    pub fn min(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn sample_pairs(n: usize, pairs: usize, seed: u64, admissible: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let candidates: Vec<usize> = (0..n).filter(|&k| admissible(k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(pairs);
    if candidates.len() < 2 {
        return out;
    }
    while out.len() < pairs {
        let a = candidates[rng.random_range(0..candidates.len())];
        let b = candidates[rng.random_range(0..candidates.len())];
        if a != b {
            out.push((a, b));
        }
    }
    out
}

/// Directional increments of a node field over seeded random node pairs, binned by half distance.
fn tau_from_field(points: &[Point], field: &[[f64; 2]], dimension: usize, diameter: f64, n_pairs: usize, seed: u64) -> Result<TauProfile> {
    if n_pairs < MIN_PAIRS {
        return Err(Error::InvalidProblem(format!("at least {MIN_PAIRS} pairs are required, got {n_pairs}")));
    }
    let half_diameter = 0.5 * diameter;
    let mut tau = vec![f64::INFINITY; TAU_BUCKETS];
    let width = half_diameter / TAU_BUCKETS as f64;
    for (a, b) in sample_pairs(points.len(), n_pairs, seed, |_| true) {
        let (x, y) = (points[a], points[b]);
        let d: Vec<f64> = (0..dimension).map(|j| y[j] - x[j]).collect();
        let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let increment: f64 = (0..dimension).map(|j| (field[b][j] - field[a][j]) * d[j]).sum::<f64>() / len;
        let bucket = ((0.5 * len / width) as usize).min(TAU_BUCKETS - 1);
        tau[bucket] = tau[bucket].min(0.5 * increment);
    }
    let mut filled = vec![false; TAU_BUCKETS];
    let sampled: Vec<bool> = tau.iter().map(|t| t.is_finite()).collect();
    if !sampled.iter().any(|&s| s) {
        return Err(Error::InvalidProblem("no pair could be sampled".into()));
    }
    for i in 0..TAU_BUCKETS {
        if sampled[i] {
            continue;
        }
        // nearest sampled bucket on each side
        let left = (0..i).rev().find(|&j| sampled[j]).map(|j| tau[j]);
        let right = (i + 1..TAU_BUCKETS).find(|&j| sampled[j]).map(|j| tau[j]);
        tau[i] = match (left, right) {
            (Some(l), Some(r)) => l.min(r),
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => unreachable!("at least one bucket is sampled"),
        };
        filled[i] = true;
    }
    Ok(TauProfile { half_diameter, tau, filled, pairs: n_pairs })
}

/// `τ` profile of `V` over seeded random pairs of grid nodes.
pub fn estimate_tau(fields: &DerivedFields, diameter: f64, n_pairs: usize, seed: u64) -> Result<TauProfile> {
    tau_from_field(&fields.points, &fields.v, fields.dimension, diameter, n_pairs, seed)
}

/// `Λ + max(sup -τ, 0)`.
pub fn fold_lambda(lambda: f64, tau: &[f64]) -> f64 {
    let deficit = tau.iter().map(|t| -t).fold(0.0, f64::max);
    lambda + deficit
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiConvexity {
    pub convex: bool,
    pub min_tau: f64,
    pub slack: f64,
}

/// Whether `c - 1/2 Δphi + 1/4 |∇phi|^2` is convex, judged by the `τ` profile of its
/// gradient (which is `V` for gradient drifts) against `-h · slack`.
pub fn check_phi_convexity(op: &OperatorSpec, grid: &NodeGrid, n_pairs: usize, seed: u64, slack: f64) -> Result<PhiConvexity> {
    if op.gradient_potential().is_none() {
        return Err(Error::InvalidProblem("drift is not a gradient".into()));
    }
    let v: Vec<[f64; 2]> = grid.points.iter().map(|&p| v_field(op, p)).collect();
    let profile = tau_from_field(&grid.points, &v, grid.dimension(), op.diameter(), n_pairs, seed)?;
    let min_tau = profile.min();
    Ok(PhiConvexity { convex: min_tau >= -grid.step() * slack, min_tau, slack })
}

/// Positive closed-form profile for manufactured eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManufacturedProfile {
    /// `sin(pi x / length)` in the first coordinate.
    Sine { length: f64 },
    /// `exp(-|x - center|^2 / (2 width^2))`.
    Gaussian { center: [f64; 2], width: f64 },
    /// `Π_j cos(rate (x_j - center_j))`, positive while every `|rate (x_j - center_j)| < π/2`.
    Cosine { center: [f64; 2], rate: f64 },
}

impl ManufacturedProfile {
    fn value(&self, p: Point, dimension: usize) -> f64 {
        match *self {
            ManufacturedProfile::Sine { length } => (std::f64::consts::PI * p[0] / length).sin(),
            ManufacturedProfile::Gaussian { center, width } => {
                let r2: f64 = (0..dimension).map(|j| (p[j] - center[j]).powi(2)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            ManufacturedProfile::Cosine { center, rate } => (0..dimension).map(|j| (rate * (p[j] - center[j])).cos()).product(),
        }
    }

    fn gradient(&self, p: Point, dimension: usize) -> [f64; 2] {
        match *self {
            ManufacturedProfile::Sine { length } => {
                let a = std::f64::consts::PI / length;
                [a * (a * p[0]).cos(), 0.0]
            }
            ManufacturedProfile::Gaussian { center, width } => {
                let u = self.value(p, dimension);
                let mut g = [0.0; 2];
                for j in 0..dimension {
                    g[j] = -u * (p[j] - center[j]) / (width * width);
                }
                g
            }
            ManufacturedProfile::Cosine { center, rate } => {
                let mut g = [0.0; 2];
                for j in 0..dimension {
                    g[j] = -rate * (rate * (p[j] - center[j])).sin();
                    for k in (0..dimension).filter(|&k| k != j) {
                        g[j] *= (rate * (p[k] - center[k])).cos();
                    }
                }
                g
            }
        }
    }

    fn laplacian(&self, p: Point, dimension: usize) -> f64 {
        match *self {
            ManufacturedProfile::Sine { length } => {
                let a = std::f64::consts::PI / length;
                -a * a * (a * p[0]).sin()
            }
            ManufacturedProfile::Gaussian { center, width } => {
                let w2 = width * width;
                let r2: f64 = (0..dimension).map(|j| (p[j] - center[j]).powi(2)).sum();
                self.value(p, dimension) * (r2 / (w2 * w2) - dimension as f64 / w2)
            }
            ManufacturedProfile::Cosine { rate, .. } => -(dimension as f64) * rate * rate * self.value(p, dimension),
        }
    }
}

/// Operator whose potential is chosen so that a prescribed positive `u0` solves `L u0 = -λ0 u0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub domain: DomainSpec,
    pub drift: VectorFieldSpec,
    pub profile: ManufacturedProfile,
    pub lambda0: f64,
}

impl ManufacturedCase {
    fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn u0(&self, p: Point) -> f64 {
        self.profile.value(p, self.dimension())
    }

    /// `c = (Δu0 - B·∇u0 + λ0 u0) / u0`.
    pub fn potential(&self, p: Point) -> f64 {
        let d = self.dimension();
        let g = self.profile.gradient(p, d);
        let b = self.drift.value(p);
        let transport: f64 = (0..d).map(|j| b[j] * g[j]).sum();
        (self.profile.laplacian(p, d) - transport + self.lambda0 * self.u0(p)) / self.u0(p)
    }

    /// `Y = -∇u0/u0 + B/2`.
    pub fn y(&self, p: Point) -> [f64; 2] {
        let d = self.dimension();
        let u = self.u0(p);
        let g = self.profile.gradient(p, d);
        let b = self.drift.value(p);
        let mut y = [0.0; 2];
        for j in 0..d {
            y[j] = -g[j] / u + 0.5 * b[j];
        }
        y
    }

    /// Fixed evaluation points well inside the domain, independent of any grid.
    pub fn probes(&self) -> Vec<Point> {
        let (lo, hi) = self.domain.bounds();
        let fractions = [0.3, 0.4, 0.5, 0.6, 0.7];
        let mut out = Vec::new();
        if self.dimension() == 1 {
            for f in fractions {
                out.push([lo[0] + f * (hi[0] - lo[0]), 0.0]);
            }
        } else {
            for fx in fractions {
                for fy in fractions {
                    let p = [lo[0] + fx * (hi[0] - lo[0]), lo[1] + fy * (hi[1] - lo[1])];
                    if self.domain.distance_to_boundary(p) >= 0.1 * self.domain.diameter() {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

fn shifted(p: Point, axis: usize, step: f64) -> Point {
    let mut q = p;
    q[axis] += step;
    q
}

/// `max |ΔY - 2∇_Y Y + U Y + V|` over the probe points, every derivative taken by central
/// differences with step `h`; the curl term is contracted as `(U Y)_j = Σ_i U^{ji} Y^i`.
pub fn check_laplacian_identity(case: &ManufacturedCase, h: f64) -> Result<f64> {
    let d = case.dimension();
    let probes = case.probes();
    for &p in &probes {
        for axis in 0..d {
            for q in [shifted(p, axis, h), shifted(p, axis, -h), p] {
                if case.u0(q) <= 0.0 {
                    return Err(Error::NonPositiveManufacturedSolution { x: q[0], y: q[1] });
                }
            }
        }
    }
    let half_b2 = |q: Point| {
        let b = case.drift.value(q);
        0.25 * (0..d).map(|j| b[j] * b[j]).sum::<f64>()
    };
    let mut worst = 0.0f64;
    for &p in &probes {
        let y = case.y(p);
        let curl = case.drift.curl_matrix(p, d);
        for j in 0..d {
            let mut lap_y = 0.0;
            let mut advect = 0.0;
            let mut lap_b = 0.0;
            for k in 0..d {
                let (plus, minus) = (shifted(p, k, h), shifted(p, k, -h));
                lap_y += (case.y(plus)[j] - 2.0 * y[j] + case.y(minus)[j]) / (h * h);
                advect += y[k] * (case.y(plus)[j] - case.y(minus)[j]) / (2.0 * h);
                lap_b += (case.drift.value(plus)[j] - 2.0 * case.drift.value(p)[j] + case.drift.value(minus)[j]) / (h * h);
            }
            let (plus, minus) = (shifted(p, j, h), shifted(p, j, -h));
            let grad_c = (case.potential(plus) - case.potential(minus)) / (2.0 * h);
            let grad_b2 = (half_b2(plus) - half_b2(minus)) / (2.0 * h);
            let v = grad_c + grad_b2 - 0.5 * lap_b;
            let curl_term: f64 = (0..d).map(|i| curl[j][i] * y[i]).sum();
            let residual = lap_y - 2.0 * advect + curl_term + v;
            worst = worst.max(residual.abs());
        }
    }
    Ok(worst)
}

/// Sampled minimum of `(Y(y) - Y(x))·e + 2ψ(|y - x|/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CCheck {
    pub min: f64,
    pub pairs: usize,
    /// Pair attaining the minimum.
    pub argmin: (Point, Point),
}

/// Evaluates the two-point quantity over seeded random node pairs with both nodes at least
/// two grid spacings from the boundary.
pub fn check_c_nonnegative(fields: &DerivedFields, psi: &ModulusProfile, n_pairs: usize, seed: u64) -> Result<CCheck> {
    let y = fields.y.as_ref().ok_or(Error::MissingEigenfunction)?;
    if n_pairs < MIN_PAIRS {
        return Err(Error::InvalidProblem(format!("at least {MIN_PAIRS} pairs are required, got {n_pairs}")));
    }
    let layer = 2.0 * fields.spacing * (1.0 - 1e-12);
    let pairs = sample_pairs(fields.points.len(), n_pairs, seed, |k| fields.distance[k] >= layer);
    if pairs.is_empty() {
        return Err(Error::GridTooCoarse("no interior pairs beyond the boundary layer".into()));
    }
    let d = fields.dimension;
    let mut best = CCheck { min: f64::INFINITY, pairs: pairs.len(), argmin: ([0.0; 2], [0.0; 2]) };
    for (a, b) in pairs {
        let (x, z) = (fields.points[a], fields.points[b]);
        let len = (0..d).map(|j| (z[j] - x[j]).powi(2)).sum::<f64>().sqrt();
        let increment: f64 = (0..d).map(|j| (y[b][j] - y[a][j]) * (z[j] - x[j])).sum::<f64>() / len;
        let value = increment + 2.0 * psi.psi(0.5 * len)?;
        if value < best.min {
            best.min = value;
            best.argmin = (x, z);
        }
    }
    Ok(best)
}

/// `10 h (1 + Λ̃ + σ D)`.
pub fn c_tolerance(h: f64, lambda_tilde: f64, sigma: f64, diameter: f64) -> f64 {
    10.0 * h * (1.0 + lambda_tilde + sigma * diameter)
}
