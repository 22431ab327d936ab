//! Log-derivative of the ground state, its turning point, and the moduli built from them.
//!
//! With `v = w0'/w0` the Riccati equation `v' + v^2 = -sigma*s - mu0` holds on `[0, D/2)`.
//! For `mu0 < 0` the function `v` rises from `v(0) = 0` to a single maximum at `s0` and
//! then falls to `-inf` at `D/2`. Rescaling around `s0` gives the modulus of expansion
//! `omega(s) = -eta * v(eta*s + s0)` and `psi = -omega`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sl::{critical_sigma, gap_from_spectrum, solve_sl, Parity, SlEigenpair, SlProblem, SlSpectrum};

/// Fraction of the admissible range `(1/2, eta_sigma)` used for `eta`.
pub const ETA_FRACTION: f64 = 0.95;
/// Geometric step of the `sigma_2` search ladder.
pub const LADDER_FACTOR: f64 = 1.25;
/// Extra ladder points that must also satisfy `s0 < D/4`.
pub const LADDER_CONFIRMATIONS: usize = 8;

/// Samples kept where `w0` exceeds this fraction of its maximum.
const RETAIN_FLOOR: f64 = 1e-10;
const RICCATI_TOL: f64 = 1e-6;
const INEQUALITY_TOL: f64 = 1e-8;
const HEAT_TOL: f64 = 1e-5;

fn violation(check: &str, value: f64, at: f64) -> Error {
    Error::InvariantViolation { check: check.into(), value, at }
}

/// Value, first and second derivative at `s` from five-point central differences with step `step`.
fn five_point<F>(f: F, s: f64, step: f64) -> Result<(f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let m2 = f(s - 2.0 * step)?;
    let m1 = f(s - step)?;
    let c = f(s)?;
    let p1 = f(s + step)?;
    let p2 = f(s + 2.0 * step)?;
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * step * step);
    Ok((c, d1, d2))
}

/// Log-derivative `v = w0'/w0` of the ground state, continued oddly to negative `s`.
fn log_derivative(w0: &SlEigenpair, s: f64) -> Result<f64> {
    if s < 0.0 {
        Ok(-w0.log_derivative(-s)?)
    } else {
        w0.log_derivative(s)
    }
}

/// Samples of `v = w0'/w0` and the ground state they came from.
#[derive(Debug, Clone)]
pub struct RiccatiProfile {
    pub sigma: f64,
    pub diameter: f64,
    pub mu0: f64,
    /// `(s, v(s))` on grid nodes where `w0 >= 1e-10`.
    pub samples: Vec<(f64, f64)>,
    /// Turning point, filled in by [`find_turning_point`].
    pub s0: Option<f64>,
    pub v_at_s0: Option<f64>,
    /// Largest scaled residual of `v' + v^2 + sigma*s + mu0` over the retained samples.
    pub riccati_residual: f64,
    phase_samples: Vec<(f64, f64)>,
    ground_state: SlEigenpair,
}

impl RiccatiProfile {
    pub fn ground_state(&self) -> &SlEigenpair {
        &self.ground_state
    }

    /// `v` at any `s` in `(-D/2, D/2)`.
    pub fn v(&self, s: f64) -> Result<f64> {
        log_derivative(&self.ground_state, s)
    }
}

/// Builds `v` from the sampled ground state.
///
/// The residual uses `v' + v^2 = w0''/w0` with `w0''` differenced from the derivative
/// samples, scaled by `1 + |sigma*s| + |mu0| + v^2`.
pub fn build_riccati(spectrum: &SlSpectrum) -> Result<RiccatiProfile> {
    let w0 = spectrum.pair(0)?;
    let problem = spectrum.problem;
    if w0.mu >= 0.0 {
        return Err(Error::DegenerateProfile(format!(
            "mu0 = {} >= 0 (sigma = {} is not above the critical slope); v has no interior maximum",
            w0.mu, problem.sigma
        )));
    }
    let n = w0.samples.len();
    let h = problem.spacing();
    let mut samples = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for i in 0..n {
        let (s, w) = w0.samples[i];
        if w < RETAIN_FLOOR {
            continue;
        }
        let v = w0.log_derivative_at_node(i);
        samples.push((s, v));
        if i >= 2 && i + 2 < n {
            let d = |j: usize| w0.derivative_samples[j].1;
            let second = (d(i - 2) - 8.0 * d(i - 1) + 8.0 * d(i + 1) - d(i + 2)) / (12.0 * h);
            let value = second / w + problem.sigma * s + w0.mu;
            let scale = 1.0 + (problem.sigma * s).abs() + w0.mu.abs() + v * v;
            residual = residual.max(value.abs() / scale);
        }
    }
    // the phase gives v at every node, including where w0 itself is below the retain floor
    let phase_samples: Vec<(f64, f64)> = (0..n).map(|i| (w0.samples[i].0, w0.log_derivative_at_node(i))).collect();
    if phase_samples[0].1.abs() > 1e-9 * (1.0 + w0.mu.abs()).sqrt() {
        return Err(violation("v(0) = 0", phase_samples[0].1, 0.0));
    }
    if residual > RICCATI_TOL {
        return Err(violation("Riccati residual of v", residual, f64::NAN));
    }
    Ok(RiccatiProfile {
        sigma: problem.sigma,
        diameter: problem.diameter,
        mu0: w0.mu,
        samples,
        s0: None,
        v_at_s0: None,
        riccati_residual: residual,
        phase_samples,
        ground_state: w0.clone(),
    })
}

/// Locates the unique maximum `s0` of `v` and returns `(s0, eta_sigma)` with
/// `eta_sigma = (D/2 - s0)/(D/2)`. Also records `s0` in the profile.
///
/// A single sign change of the forward differences of `v` at the grid nodes (the last
/// node excluded, where `v` is infinite) brackets the maximum;
/// a three-point parabola gives a first guess, then bisection on a five-point difference of
/// re-evaluated `v` refines it.
pub fn find_turning_point(profile: &mut RiccatiProfile) -> Result<(f64, f64)> {
    let v = &profile.phase_samples[..profile.phase_samples.len() - 1];
    let mut changes = Vec::new();
    for i in 1..v.len().saturating_sub(1) {
        let left = v[i].1 - v[i - 1].1;
        let right = v[i + 1].1 - v[i].1;
        if left > 0.0 && right <= 0.0 || left <= 0.0 && right > 0.0 {
            changes.push(i);
        }
    }
    match changes.len() {
        0 => return Err(Error::DegenerateProfile("v' never changes sign on the sample grid".into())),
        1 => {}
        count => return Err(Error::MultipleTurningPoints { count }),
    }
    let i = changes[0];
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    if !(b.1 >= a.1 && b.1 >= c.1) {
        return Err(Error::DegenerateProfile("the single turning point of v is a minimum".into()));
    }

    let h = b.0 - a.0;
    let curvature = a.1 - 2.0 * b.1 + c.1;
    let guess = if curvature < 0.0 { b.0 + 0.5 * h * (a.1 - c.1) / curvature } else { b.0 };

    let step = 0.25 * h;
    let slope = |s: f64| -> Result<f64> { Ok(five_point(|x| profile.v(x), s, step)?.1) };
    let (mut lo, mut hi) = (a.0.max(guess - h), c.0.min(guess + h));
    if slope(lo)? <= 0.0 {
        lo = a.0;
    }
    if slope(hi)? >= 0.0 {
        hi = c.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * profile.diameter {
            break;
        }
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let v0 = profile.v(s0)?;
    let half = 0.5 * profile.diameter;

    profile.s0 = Some(s0);
    profile.v_at_s0 = Some(v0);
    let identity = turning_point_identity(profile).unwrap_or(f64::NAN);
    if !(identity <= RICCATI_TOL) {
        return Err(violation("v(s0)^2 = -sigma*s0 - mu0", identity, s0));
    }
    if !(v0 < (-profile.mu0).sqrt()) {
        return Err(violation("max v < sqrt(-mu0)", v0, s0));
    }
    Ok((s0, (half - s0) / half))
}

/// Residual of `v(s0)^2 + sigma*s0 + mu0` relative to the summed magnitudes of its terms.
pub fn turning_point_identity(profile: &RiccatiProfile) -> Option<f64> {
    let (s0, v0) = (profile.s0?, profile.v_at_s0?);
    let scale = v0 * v0 + (profile.sigma * s0).abs() + profile.mu0.abs();
    Some((v0 * v0 + profile.sigma * s0 + profile.mu0).abs() / scale)
}

/// Ground state and turning point at one slope.
pub fn turning_point_at(sigma: f64, diameter: f64) -> Result<(SlSpectrum, RiccatiProfile, f64, f64)> {
    let spectrum = solve_sl(&SlProblem::new(sigma, diameter)?, 2)?;
    let mut profile = build_riccati(&spectrum)?;
    let (s0, eta_sigma) = find_turning_point(&mut profile)?;
    Ok((spectrum, profile, s0, eta_sigma))
}

/// Result of the `sigma_2` search.
#[derive(Debug, Clone, PartialEq)]
pub struct Sigma2Search {
    pub sigma0: f64,
    pub sigma2: f64,
    /// Every `(sigma, s0)` evaluated, in search order.
    pub ladder: Vec<(f64, f64)>,
}

/// Smallest `sigma_0 * 1.25^j` (`j >= 1`) with `s0 < D/4` there and at the next eight ladder points.
pub fn find_sigma2(diameter: f64) -> Result<Sigma2Search> {
    let sigma0 = critical_sigma(diameter)?;
    let limit = 1e9 / diameter.powi(3);
    let quarter = 0.25 * diameter;
    let mut ladder: Vec<(f64, f64)> = Vec::new();
    let s0_at = |sigma: f64| -> Result<f64> { Ok(turning_point_at(sigma, diameter)?.2) };

    let mut j = 1;
    loop {
        let candidate = sigma0 * LADDER_FACTOR.powi(j);
        if candidate > limit {
            return Err(Error::NonConvergence { context: "sigma_2 ladder search".into(), iterations: j as usize });
        }
        // later ladder points may already be known from an earlier candidate
        let mut confirmed = true;
        for k in 0..=LADDER_CONFIRMATIONS {
            let sigma = sigma0 * LADDER_FACTOR.powi(j + k as i32);
            let s0 = match ladder.iter().find(|p| (p.0 / sigma - 1.0).abs() < 1e-12) {
                Some(p) => p.1,
                None => {
                    let s0 = s0_at(sigma)?;
                    ladder.push((sigma, s0));
                    s0
                }
            };
            if s0 >= quarter {
                confirmed = false;
                j += k as i32 + 1;
                break;
            }
        }
        if confirmed {
            return Ok(Sigma2Search { sigma0, sigma2: candidate, ladder });
        }
    }
}

/// Pointwise checks carried out when a profile is built.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModulusChecks {
    pub omega_at_zero: f64,
    /// Smallest finite-difference `omega'` over grid points with `s > 0`.
    pub min_omega_slope: f64,
    pub psi_at_zero: f64,
    /// Largest finite-difference `psi'` over grid points with `s > 0`.
    pub max_psi_slope: f64,
    /// `|psi'(0)|`, which vanishes because `v'(s0) = 0`.
    pub psi_slope_at_zero: f64,
    /// Largest scaled residual of `omega' - omega^2 - eta^2 sigma (eta s + s0) - eta^2 mu0`.
    pub riccati_residual: f64,
    /// Largest value of `2 psi'' + 4 psi' psi + 2 Lambda`.
    pub inequality_max: f64,
}

#[derive(Debug, Clone)]
enum ProfileShape {
    /// Built from the ground state of the associated problem.
    Scaled { ground_state: SlEigenpair },
    /// Constant-potential branch: `psi(s) = -(pi/D) tan(pi s/D)`.
    Tangent,
}

/// Modulus of expansion `omega` and `psi = -omega` on `[0, D/2]`.
#[derive(Debug, Clone)]
pub struct ModulusProfile {
    pub sigma: f64,
    pub diameter: f64,
    pub mu0: f64,
    pub eta: f64,
    pub eta_sigma: f64,
    pub s0: f64,
    pub lambda: f64,
    pub omega_samples: Vec<(f64, f64)>,
    pub psi_samples: Vec<(f64, f64)>,
    pub checks: ModulusChecks,
    shape: ProfileShape,
}

impl ModulusProfile {
    /// `omega(s)`; defined on `(-s0/eta, D/2]` for the scaled shape and `[0, D/2)` for the tangent.
    pub fn omega(&self, s: f64) -> Result<f64> {
        match &self.shape {
            ProfileShape::Scaled { ground_state } => Ok(-self.eta * log_derivative(ground_state, self.eta * s + self.s0)?),
            ProfileShape::Tangent => {
                let a = PI / self.diameter;
                Ok(a * (a * s).tan())
            }
        }
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(-self.omega(s)?)
    }

    /// Modulus for the constant potential (`sigma = 0`, `eta = 1`, `s0 = 0`), whose
    /// inequality holds with `Lambda = 0` and equality.
    pub fn tangent(diameter: f64, grid_size: usize) -> Result<ModulusProfile> {
        let problem = SlProblem::with_grid(0.0, diameter, grid_size)?;
        let nodes = problem.nodes();
        let mut profile = ModulusProfile {
            sigma: 0.0,
            diameter,
            mu0: (PI / diameter).powi(2),
            eta: 1.0,
            eta_sigma: 1.0,
            s0: 0.0,
            lambda: 0.0,
            omega_samples: Vec::new(),
            psi_samples: Vec::new(),
            checks: ModulusChecks::default(),
            shape: ProfileShape::Tangent,
        };
        // the last node is the pole of tan
        for &s in &nodes[..nodes.len() - 1] {
            let w = profile.omega(s)?;
            profile.omega_samples.push((s, w));
            profile.psi_samples.push((s, -w));
        }
        profile.checks.psi_at_zero = 0.0;
        Ok(profile)
    }
}

/// Builds `omega` and `psi` from a solved spectrum and checks every pointwise property.
///
/// `eta = 1/2 + 0.95 (eta_sigma - 1/2)`. Derivatives come from five-point differences of
/// re-evaluated `omega` with a step of a quarter grid spacing.
pub fn build_modulus(spectrum: &SlSpectrum, lambda: f64) -> Result<ModulusProfile> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidProblem(format!("Lambda must be finite and >= 0, got {lambda}")));
    }
    let problem = spectrum.problem;
    if problem.sigma < 8.0 * lambda {
        return Err(Error::InvalidProblem(format!("sigma = {} is below 8*Lambda = {}", problem.sigma, 8.0 * lambda)));
    }
    let mut riccati = build_riccati(spectrum)?;
    let (s0, eta_sigma) = find_turning_point(&mut riccati)?;
    if !(eta_sigma > 0.5) {
        return Err(violation("eta_sigma > 1/2", eta_sigma, s0));
    }
    let eta = 0.5 + ETA_FRACTION * (eta_sigma - 0.5);
    let ground_state = riccati.ground_state.clone();
    let mut profile = ModulusProfile {
        sigma: problem.sigma,
        diameter: problem.diameter,
        mu0: riccati.mu0,
        eta,
        eta_sigma,
        s0,
        lambda,
        omega_samples: Vec::with_capacity(problem.grid_size),
        psi_samples: Vec::with_capacity(problem.grid_size),
        checks: ModulusChecks::default(),
        shape: ProfileShape::Scaled { ground_state },
    };

    let step = 0.25 * problem.spacing();
    let eta2 = eta * eta;
    let mut checks =
        ModulusChecks { min_omega_slope: f64::INFINITY, max_psi_slope: f64::NEG_INFINITY, inequality_max: f64::NEG_INFINITY, ..ModulusChecks::default() };
    for s in problem.nodes() {
        let (omega, d1, d2) = five_point(|x| profile.omega(x), s, step)?;
        profile.omega_samples.push((s, omega));
        profile.psi_samples.push((s, -omega));

        let forcing = eta2 * problem.sigma * (eta * s + s0) + eta2 * riccati.mu0;
        let scale = 1.0 + omega * omega + forcing.abs();
        checks.riccati_residual = checks.riccati_residual.max((d1 - omega * omega - forcing).abs() / scale);

        // psi = -omega, so psi' = -d1 and psi'' = -d2
        let inequality = -2.0 * d2 + 4.0 * d1 * omega + 2.0 * lambda;
        checks.inequality_max = checks.inequality_max.max(inequality);
        if s == 0.0 {
            checks.omega_at_zero = omega;
            checks.psi_at_zero = -omega;
            checks.psi_slope_at_zero = d1.abs();
        } else {
            checks.min_omega_slope = checks.min_omega_slope.min(d1);
            checks.max_psi_slope = checks.max_psi_slope.max(-d1);
        }
    }
    profile.checks = checks;

    if !(checks.omega_at_zero < 0.0) {
        return Err(violation("omega(0) < 0", checks.omega_at_zero, 0.0));
    }
    if !(checks.min_omega_slope > 0.0) {
        return Err(violation("omega' > 0 on (0, D/2]", checks.min_omega_slope, f64::NAN));
    }
    if !(checks.psi_at_zero >= 0.0) {
        return Err(violation("psi(0) >= 0", checks.psi_at_zero, 0.0));
    }
    if !(checks.max_psi_slope < 0.0) {
        return Err(violation("psi' < 0 on (0, D/2]", checks.max_psi_slope, f64::NAN));
    }
    if checks.riccati_residual > RICCATI_TOL {
        return Err(violation("Riccati residual of omega", checks.riccati_residual, f64::NAN));
    }
    if checks.inequality_max > INEQUALITY_TOL {
        return Err(violation("2 psi'' + 4 psi' psi + 2 Lambda <= 0", checks.inequality_max, f64::NAN));
    }
    Ok(profile)
}

/// Time-dependent modulus of continuity `phi(s, t) = C exp(-gap eta^2 t) (w1/w0)(eta s + s0)`.
#[derive(Debug, Clone)]
pub struct ContinuityModulus {
    pub amplitude: f64,
    pub eta: f64,
    pub s0: f64,
    pub gap: f64,
    /// `(s, (w1/w0)(eta s + s0))` on `[0, D/2]`.
    pub ratio_samples: Vec<(f64, f64)>,
    /// Largest scaled residual of `phi'' - 2 omega phi' + gap eta^2 phi` at `t = 0`.
    pub heat_residual: f64,
    /// Smallest forward difference of the ratio samples.
    pub min_ratio_increment: f64,
    ground_state: SlEigenpair,
    first_excited: SlEigenpair,
}

impl ContinuityModulus {
    /// `(w1/w0)(x)` for `x` in `(-D/2, D/2)`.
    pub fn ratio_at(&self, x: f64) -> Result<f64> {
        ratio(&self.ground_state, &self.first_excited, x)
    }

    pub fn phi(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.amplitude * (-self.gap * self.eta * self.eta * t).exp() * self.ratio_at(self.eta * s + self.s0)?)
    }
}

fn ratio(w0: &SlEigenpair, w1: &SlEigenpair, x: f64) -> Result<f64> {
    // w0 is even and w1 odd, so the ratio is odd
    let magnitude = (w1.log_abs(x)? - w0.log_abs(x)?).exp();
    debug_assert_eq!(w1.parity, Parity::Odd);
    Ok(if x < 0.0 { -magnitude } else { magnitude })
}

/// Builds `phi` from the same spectrum as `profile` and checks monotonicity and the
/// separable drift-heat identity at `t = 0`.
pub fn build_continuity_modulus(spectrum: &SlSpectrum, profile: &ModulusProfile, amplitude: f64) -> Result<ContinuityModulus> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::InvalidProblem(format!("amplitude must be positive, got {amplitude}")));
    }
    let gap = gap_from_spectrum(spectrum)?.gap;
    let w0 = spectrum.pair(0)?.clone();
    let w1 = spectrum.pair(1)?.clone();
    let mut modulus = ContinuityModulus {
        amplitude,
        eta: profile.eta,
        s0: profile.s0,
        gap,
        ratio_samples: Vec::with_capacity(spectrum.problem.grid_size),
        heat_residual: 0.0,
        min_ratio_increment: f64::INFINITY,
        ground_state: w0,
        first_excited: w1,
    };
    let step = 0.25 * spectrum.problem.spacing();
    let eta2 = profile.eta * profile.eta;
    for s in spectrum.problem.nodes() {
        let (phi, d1, d2) = five_point(|x| modulus.phi(x, 0.0), s, step)?;
        let omega = profile.omega(s)?;
        let damping = gap * eta2 * phi;
        let scale = 1.0 + d2.abs() + (2.0 * omega * d1).abs() + damping.abs();
        modulus.heat_residual = modulus.heat_residual.max((d2 - 2.0 * omega * d1 + damping).abs() / scale);
        if let Some(&(_, previous)) = modulus.ratio_samples.last() {
            modulus.min_ratio_increment = modulus.min_ratio_increment.min(phi / amplitude - previous);
        }
        modulus.ratio_samples.push((s, phi / amplitude));
    }
    if !(modulus.ratio_samples[0].1 > 0.0) {
        return Err(violation("phi(0, t) > 0", modulus.ratio_samples[0].1, 0.0));
    }
    if !(modulus.min_ratio_increment > 0.0) {
        return Err(violation("phi(s, 0) strictly increasing", modulus.min_ratio_increment, f64::NAN));
    }
    if modulus.heat_residual > HEAT_TOL {
        return Err(violation("phi'' - 2 omega phi' + gap eta^2 phi = 0", modulus.heat_residual, f64::NAN));
    }
    Ok(modulus)
}
