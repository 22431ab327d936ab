//! Sturm–Liouville problem `w'' + sigma*|s|*w = -mu*w` on `[-D/2, D/2]` with Dirichlet ends.
//!
//! The potential is even, so every eigenfunction is even or odd and the problem is
//! solved on the half interval `[0, D/2]` where the potential is smooth. Shooting uses a
//! modified Prüfer phase with a fixed scale `k`:
//!
//! ```text
//! w = r sin(theta) / sqrt(k),   w' = r sqrt(k) cos(theta)
//! theta'  = k cos^2(theta) + (q/k) sin^2(theta)
//! (ln r)' = (k - q/k) sin(theta) cos(theta),        q = sigma*s + mu
//! ```
//!
//! `ln r` is stored instead of `r`, since the amplitude can grow by hundreds of e-folds
//! across the forbidden zone at large `sigma`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ode::{integrate, Tolerance};

/// Default number of samples on `[0, D/2]`.
pub const DEFAULT_GRID_SIZE: usize = 2048;
/// Largest number of modes `solve_sl` will return.
pub const MAX_MODES: usize = 8;

const MAX_ROOT_ITERATIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_index(index: usize) -> Parity {
        if index.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Slope, diameter and sample count of one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlProblem {
    pub sigma: f64,
    pub diameter: f64,
    pub grid_size: usize,
}

impl SlProblem {
    pub fn new(sigma: f64, diameter: f64) -> Result<Self> {
        Self::with_grid(sigma, diameter, DEFAULT_GRID_SIZE)
    }

    pub fn with_grid(sigma: f64, diameter: f64, grid_size: usize) -> Result<Self> {
        let problem = SlProblem { sigma, diameter, grid_size };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidProblem(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if !(self.diameter.is_finite() && self.diameter > 0.0) {
            return Err(Error::InvalidProblem(format!("diameter must be positive, got {}", self.diameter)));
        }
        if self.grid_size < 64 {
            return Err(Error::InvalidProblem(format!("grid_size must be >= 64, got {}", self.grid_size)));
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Uniform sample nodes on `[0, D/2]`.
    pub fn nodes(&self) -> Vec<f64> {
        let step = self.half_width() / (self.grid_size - 1) as f64;
        (0..self.grid_size).map(|i| if i + 1 == self.grid_size { self.half_width() } else { i as f64 * step }).collect()
    }

    pub fn spacing(&self) -> f64 {
        self.half_width() / (self.grid_size - 1) as f64
    }

    fn prufer_scale(&self) -> f64 {
        1.0f64.max((self.sigma * self.half_width()).sqrt()).max(PI / self.diameter)
    }
}

#[derive(Debug, Clone, Copy)]
struct Phase {
    sigma: f64,
    mu: f64,
    scale: f64,
}

impl Phase {
    fn rhs(&self, s: f64, y: &[f64; 2]) -> [f64; 2] {
        let q = self.sigma * s + self.mu;
        let (sn, cs) = y[0].sin_cos();
        [self.scale * cs * cs + q / self.scale * sn * sn, (self.scale - q / self.scale) * sn * cs]
    }

    fn initial(&self, parity: Parity) -> [f64; 2] {
        match parity {
            // w(0) = 1, w'(0) = 0
            Parity::Even => [0.5 * PI, 0.5 * self.scale.ln()],
            // w(0) = 0, w'(0) = 1
            Parity::Odd => [0.0, -0.5 * self.scale.ln()],
        }
    }

    fn advance(&self, from: f64, state: [f64; 2], to: f64, tol: Tolerance) -> Result<[f64; 2]> {
        integrate(|s, y| self.rhs(s, y), from, state, to, tol)
    }
}

/// One eigenpair with its samples on `[0, D/2]`, normalized so the largest sample has
/// magnitude one.
#[derive(Debug, Clone)]
pub struct SlEigenpair {
    pub index: usize,
    pub mu: f64,
    pub parity: Parity,
    /// `(s, w(s))` on the uniform grid.
    pub samples: Vec<(f64, f64)>,
    /// `(s, w'(s))` on the uniform grid.
    pub derivative_samples: Vec<(f64, f64)>,
    sigma: f64,
    scale: f64,
    log_norm: f64,
    theta: Vec<f64>,
    log_r: Vec<f64>,
}

impl SlEigenpair {
    fn phase(&self) -> Phase {
        Phase { sigma: self.sigma, mu: self.mu, scale: self.scale }
    }

    fn half_width(&self) -> f64 {
        self.samples.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Prüfer state `(theta, ln r)` at `s` in `[0, D/2]`, re-integrated from the nearest node on the left.
    fn state_at(&self, s: f64) -> Result<[f64; 2]> {
        let half = self.half_width();
        let s = s.clamp(0.0, half);
        let step = half / (self.samples.len() - 1) as f64;
        let node = ((s / step).floor() as usize).min(self.samples.len() - 1);
        let from = self.samples[node].0;
        let start = [self.theta[node], self.log_r[node]];
        if s == from {
            return Ok(start);
        }
        self.phase().advance(from, start, s, Tolerance::SAMPLE)
    }

    fn sign_for(&self, s: f64) -> (f64, f64) {
        // multipliers for (w, w') when reflecting s -> -s
        if s >= 0.0 {
            (1.0, 1.0)
        } else {
            match self.parity {
                Parity::Even => (1.0, -1.0),
                Parity::Odd => (-1.0, 1.0),
            }
        }
    }

    /// `(w(s), w'(s))` for any `s` in `[-D/2, D/2]`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let [theta, log_r] = self.state_at(s.abs())?;
        let amp = (log_r - self.log_norm).exp();
        let (sn, cs) = theta.sin_cos();
        let (fw, fd) = self.sign_for(s);
        Ok((fw * amp * sn / self.scale.sqrt(), fd * amp * cs * self.scale.sqrt()))
    }

    /// Natural logarithm of `|w(s)|`, usable where `w` underflows.
    pub fn log_abs(&self, s: f64) -> Result<f64> {
        let [theta, log_r] = self.state_at(s.abs())?;
        Ok(log_r - self.log_norm + theta.sin().abs().ln() - 0.5 * self.scale.ln())
    }

    /// Logarithmic derivative `w'/w` at `s` in `[0, D/2)`, computed from the phase.
    pub fn log_derivative(&self, s: f64) -> Result<f64> {
        let [theta, _] = self.state_at(s)?;
        Ok(self.scale / theta.tan())
    }

    /// Logarithmic derivative at grid node `i`, without re-integration.
    pub fn log_derivative_at_node(&self, i: usize) -> f64 {
        self.scale / self.theta[i].tan()
    }

    /// Number of sign changes of the even/odd extension on `(-D/2, D/2)`.
    pub fn zero_count(&self) -> usize {
        let n = self.samples.len();
        let mut changes = 0;
        let mut last = 0.0f64;
        // interior nodes only: the right endpoint is a Dirichlet zero
        for &(_, w) in &self.samples[1..n - 1] {
            if w == 0.0 {
                continue;
            }
            if last != 0.0 && w.signum() != last.signum() {
                changes += 1;
            }
            last = w;
        }
        match self.parity {
            Parity::Even => 2 * changes,
            Parity::Odd => 2 * changes + 1,
        }
    }

    /// Largest interior residual of `w'' + sigma*s*w + mu*w` with `w''` from a fourth-order
    /// central difference of the samples.
    pub fn residual(&self) -> f64 {
        let n = self.samples.len();
        let h = self.samples[1].0 - self.samples[0].0;
        let w = |i: usize| self.samples[i].1;
        let mut worst = 0.0f64;
        for i in 2..n - 2 {
            let d2 = (-w(i + 2) + 16.0 * w(i + 1) - 30.0 * w(i) + 16.0 * w(i - 1) - w(i - 2)) / (12.0 * h * h);
            let s = self.samples[i].0;
            worst = worst.max((d2 + (self.sigma * s + self.mu) * w(i)).abs());
        }
        worst
    }
}

/// Eigenpairs `n = 0..K-1` of one problem, ordered by eigenvalue.
#[derive(Debug, Clone)]
pub struct SlSpectrum {
    pub problem: SlProblem,
    pub pairs: Vec<SlEigenpair>,
}

impl SlSpectrum {
    pub fn mu(&self, index: usize) -> Option<f64> {
        self.pairs.get(index).map(|p| p.mu)
    }

    pub fn pair(&self, index: usize) -> Result<&SlEigenpair> {
        self.pairs.get(index).ok_or_else(|| Error::InvalidProblem(format!("spectrum holds no eigenpair with index {index}")))
    }
}

/// Phase mismatch at `D/2` for the `index`-th eigenfunction; increasing in `mu`.
fn phase_mismatch(problem: &SlProblem, index: usize, mu: f64, tol: Tolerance) -> Result<f64> {
    let phase = Phase { sigma: problem.sigma, mu, scale: problem.prufer_scale() };
    let end = phase.advance(0.0, phase.initial(Parity::of_index(index)), problem.half_width(), tol)?;
    Ok(end[0] - ((index / 2) as f64 + 1.0) * PI)
}

/// Root of an increasing function on `[lo, hi]` by Illinois false position with forced
/// bisection every third step. Stops when the bracket is at most `width` wide.
fn illinois<F>(mut f: F, mut lo: f64, mut hi: f64, width: impl Fn(f64) -> f64, context: &str) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::NonConvergence { context: format!("{context}: no sign change in search window"), iterations: 0 });
    }
    let mut side = 0i8;
    for iteration in 0..MAX_ROOT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width(mid) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let secant = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let x = if iteration % 3 == 2 || !(secant > lo && secant < hi) { mid } else { secant };
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NonConvergence { context: context.into(), iterations: MAX_ROOT_ITERATIONS })
}

fn eigen_width(mu: f64) -> f64 {
    // tighter than the 1e-10 relative contract; the integrator noise sets the floor
    if mu.abs() < 1.0 {
        1e-13
    } else {
        1e-13 * mu.abs()
    }
}

fn eigenvalue(problem: &SlProblem, index: usize, window: (f64, f64)) -> Result<f64> {
    illinois(|mu| phase_mismatch(problem, index, mu, Tolerance::SAMPLE), window.0, window.1, eigen_width, &format!("eigenvalue bracketing for n = {index}"))
}

fn sample_pair(problem: &SlProblem, index: usize, mu: f64) -> Result<SlEigenpair> {
    let parity = Parity::of_index(index);
    let scale = problem.prufer_scale();
    let phase = Phase { sigma: problem.sigma, mu, scale };
    let nodes = problem.nodes();
    let mut theta = Vec::with_capacity(nodes.len());
    let mut log_r = Vec::with_capacity(nodes.len());
    let mut state = phase.initial(parity);
    theta.push(state[0]);
    log_r.push(state[1]);
    for window in nodes.windows(2) {
        state = phase.advance(window[0], state, window[1], Tolerance::SAMPLE)?;
        theta.push(state[0]);
        log_r.push(state[1]);
    }

    // normalize by the largest sample magnitude, computed in log space
    let log_norm = theta.iter().zip(&log_r).map(|(t, lr)| lr + t.sin().abs().ln() - 0.5 * scale.ln()).fold(f64::NEG_INFINITY, f64::max);
    let mut samples = Vec::with_capacity(nodes.len());
    let mut derivative_samples = Vec::with_capacity(nodes.len());
    for ((&s, &t), &lr) in nodes.iter().zip(&theta).zip(&log_r) {
        let amp = (lr - log_norm).exp();
        let (sn, cs) = t.sin_cos();
        samples.push((s, amp * sn / scale.sqrt()));
        derivative_samples.push((s, amp * cs * scale.sqrt()));
    }

    Ok(SlEigenpair { index, mu, parity, samples, derivative_samples, sigma: problem.sigma, scale, log_norm, theta, log_r })
}

/// Eigenvalue search window guaranteed to contain the first `n_modes` eigenvalues.
pub fn search_window(problem: &SlProblem, n_modes: usize) -> (f64, f64) {
    let drop = problem.sigma * problem.half_width();
    let top = ((n_modes as f64 + 2.0) * PI / problem.diameter).powi(2);
    (-drop - 1.0, top + drop)
}

/// Solves for the eigenpairs `n = 0..n_modes-1`.
pub fn solve_sl(problem: &SlProblem, n_modes: usize) -> Result<SlSpectrum> {
    problem.validate()?;
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(Error::InvalidProblem(format!("n_modes must lie in 1..={MAX_MODES}, got {n_modes}")));
    }
    let window = search_window(problem, n_modes);
    let mut pairs = Vec::with_capacity(n_modes);
    for index in 0..n_modes {
        let mu = eigenvalue(problem, index, window)?;
        pairs.push(sample_pair(problem, index, mu)?);
    }
    Ok(SlSpectrum { problem: *problem, pairs })
}

/// Slope `sigma_0` at which the lowest eigenvalue crosses zero.
///
/// The sign of `mu_0(sigma)` equals the sign of the phase mismatch of the even solution at
/// `mu = 0`, so no eigenvalue solve is needed inside the bisection.
pub fn critical_sigma(diameter: f64) -> Result<f64> {
    if !(diameter.is_finite() && diameter > 0.0) {
        return Err(Error::InvalidProblem(format!("diameter must be positive, got {diameter}")));
    }
    let upper = 1e6 / diameter.powi(3);
    // the phase at D/2 grows with sigma and passes pi exactly when mu_0 = 0
    let at = |sigma: f64| -> Result<f64> {
        let problem = SlProblem { sigma, diameter, grid_size: DEFAULT_GRID_SIZE };
        phase_mismatch(&problem, 0, 0.0, Tolerance::SAMPLE)
    };
    illinois(at, 0.0, upper, |s| 1e-13 * s.max(1e-300), "critical slope bisection")
}

/// Lowest two eigenvalues and the gap between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlGap {
    pub mu0: f64,
    pub mu1: f64,
    /// `mu1 - mu0` from the Wronskian identity; zero only if it underflows.
    pub gap: f64,
    /// Natural logarithm of the gap, finite even when `gap` underflows.
    pub log_gap: f64,
    /// Plain difference of the two computed eigenvalues.
    pub eigenvalue_difference: f64,
}

/// Gap of the two lowest eigenvalues.
///
/// Integrating `(w0 w1' - w1 w0')' = -(mu1 - mu0) w0 w1` over `[0, D/2]` gives
/// `mu1 - mu0 = w0(0) w1'(0) / int_0^{D/2} w0 w1`, which stays accurate when the gap is
/// far below the resolution of the eigenvalues themselves.
pub fn sl_gap(problem: &SlProblem) -> Result<SlGap> {
    let spectrum = solve_sl(problem, 2)?;
    gap_from_spectrum(&spectrum)
}

pub fn gap_from_spectrum(spectrum: &SlSpectrum) -> Result<SlGap> {
    let w0 = spectrum.pair(0)?;
    let w1 = spectrum.pair(1)?;
    let scale = w0.scale;
    let p0 = w0.phase();
    let p1 = w1.phase();
    let shift = w0.log_norm + w1.log_norm;

    // product integral, node interval by node interval, with both phases carried along
    let rhs = |s: f64, y: &[f64; 5]| -> [f64; 5] {
        let a = p0.rhs(s, &[y[0], y[1]]);
        let b = p1.rhs(s, &[y[2], y[3]]);
        let prod = (y[1] + y[3] - shift).exp() * y[0].sin() * y[2].sin() / scale;
        [a[0], a[1], b[0], b[1], prod]
    };
    let mut integral = 0.0;
    for i in 0..w0.samples.len() - 1 {
        let y0 = [w0.theta[i], w0.log_r[i], w1.theta[i], w1.log_r[i], 0.0];
        let y = integrate(rhs, w0.samples[i].0, y0, w0.samples[i + 1].0, Tolerance::SAMPLE)?;
        integral += y[4];
    }
    if !(integral > 0.0) {
        return Err(Error::InvariantViolation { check: "positive overlap integral of w0 w1".into(), value: integral, at: 0.0 });
    }
    // w0(0) w1'(0) = exp(ln r0(0) + ln r1(0) - shift) since sin(theta0) = cos(theta1) = 1 at s = 0
    let log_gap = w0.log_r[0] + w1.log_r[0] - shift - integral.ln();
    Ok(SlGap { mu0: w0.mu, mu1: w1.mu, gap: log_gap.exp(), log_gap, eigenvalue_difference: w1.mu - w0.mu })
}

/// Smallest value of `w0 w1' - w1 w0'` over interior grid nodes.
pub fn check_lagrange_monotonicity(spectrum: &SlSpectrum) -> Result<f64> {
    let w0 = spectrum.pair(0)?;
    let w1 = spectrum.pair(1)?;
    let n = w0.samples.len();
    Ok((1..n - 1).map(|i| w0.samples[i].1 * w1.derivative_samples[i].1 - w1.samples[i].1 * w0.derivative_samples[i].1).fold(f64::INFINITY, f64::min))
}
