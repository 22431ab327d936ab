//! End-to-end gap certificate: derived fields from the computed ground state, the folded
//! constant `Λ̃`, the one-dimensional comparison problem, and the resulting lower bound.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::{build_modulus, find_sigma2};
use crate::operator::{compute_derived_fields, estimate_k, estimate_kappa, estimate_lambda, estimate_tau, fold_lambda, OperatorSpec};
use crate::sl::{gap_from_spectrum, solve_sl, SlProblem};
use crate::spectrum::DiscreteSpectrum;

/// Threshold separating structural zeros from numerically small `Λ̃` and `τ`.
pub const CONVEX_TOL: f64 = 1e-9;
/// Default number of sampled pairs for `τ`.
pub const DEFAULT_PAIRS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Convex,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub quantity: String,
    pub value: f64,
    pub basis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCertificate {
    pub operator: OperatorSpec,
    pub h: f64,
    pub branch: Branch,
    pub kappa: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub tau_min: f64,
    pub k_estimate: f64,
    pub sigma: f64,
    pub sigma2: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub s0: f64,
    pub eta: f64,
    pub alpha: f64,
    pub quarter_bound: f64,
    /// True only when the bound depends on closed-form fields alone.
    pub rigorous: bool,
    /// The domain is only a limiting case of a strictly convex one.
    pub limiting_domain: bool,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub pairs: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { pairs: DEFAULT_PAIRS, seed: 0 }
    }
}

/// Lower bound from the comparison problem at `σ = max(σ₂, 8Λ̃)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralBound {
    pub sigma2: f64,
    pub sigma: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub gap: f64,
    pub s0: f64,
    pub eta: f64,
    pub alpha: f64,
}

fn hypothesis(err: Error) -> Error {
    match err {
        Error::InvariantViolation { check, value, at } => Error::HypothesisViolation(format!("{check} failed: {value:e} at s = {at}")),
        other => other,
    }
}

/// `α = η² (μ₁ - μ₀)` with every modulus invariant checked.
pub fn general_bound(lambda_tilde: f64, diameter: f64) -> Result<GeneralBound> {
    let search = find_sigma2(diameter)?;
    let sigma = search.sigma2.max(8.0 * lambda_tilde);
    let spectrum = solve_sl(&SlProblem::new(sigma, diameter)?, 2)?;
    let profile = build_modulus(&spectrum, lambda_tilde).map_err(hypothesis)?;
    let gap = gap_from_spectrum(&spectrum)?;
    let alpha = profile.eta * profile.eta * gap.gap;
    if !(alpha > 0.25 * gap.gap) {
        return Err(Error::HypothesisViolation(format!("eta = {} does not exceed 1/2", profile.eta)));
    }
    Ok(GeneralBound { sigma2: search.sigma2, sigma, mu0: gap.mu0, mu1: gap.mu1, gap: gap.gap, s0: profile.s0, eta: profile.eta, alpha })
}

/// Runs the certification pipeline on a solved operator.
pub fn certify(op: &OperatorSpec, spectrum: &DiscreteSpectrum, options: CertifyOptions) -> Result<GapCertificate> {
    op.validate()?;
    let grid = spectrum.grid.as_ref().ok_or(Error::MissingEigenfunction)?;
    if let Some((k, c)) = grid.points.iter().map(|&p| op.potential.value(p)).enumerate().find(|&(_, c)| c < 0.0) {
        return Err(Error::HypothesisViolation(format!("c = {c} < 0 at node {k}")));
    }
    let diameter = op.diameter();
    let h = grid.step();
    let mut trace = Vec::new();
    let mut step = |quantity: &str, value: f64, basis: &str| trace.push(TraceStep { quantity: quantity.into(), value, basis: basis.into() });

    step("D", diameter, "exact diameter of the domain");
    step("h", h, "grid spacing of the supplied spectrum");
    step("lambda0", spectrum.lambda0, "principal eigenvalue of the discrete operator");
    let fields = compute_derived_fields(op, grid, Some(&spectrum.u0))?;
    let kappa = estimate_kappa(&fields, 2.0 * h)?;
    step("kappa", kappa.kappa, "max of |grad u0|/u0 times |U| over nodes at least 2h inside");
    let k_estimate = estimate_k(&fields);
    step("K", k_estimate, "max of |U|/dist to the boundary over nodes");
    let lambda = estimate_lambda(&fields)?;
    step("Lambda", lambda, "max of |Y| |U| over nodes at least 2h inside, spectral norm of U");
    let tau = estimate_tau(&fields, diameter, options.pairs, options.seed)?;
    let usable = tau.usable();
    let tau_min = tau.min();
    step("tau_min", tau_min, "half the smallest sampled directional increment of V, over 64 distance buckets");
    let lambda_tilde = fold_lambda(lambda, &usable);
    step("Lambda_tilde", lambda_tilde, "Lambda plus the negative part of the deflated tau");

    let quarter = |gap: f64| 0.25 * gap;
    let certificate = if lambda_tilde <= CONVEX_TOL && tau_min >= -CONVEX_TOL {
        let mu0 = (PI / diameter).powi(2);
        let mu1 = 4.0 * mu0;
        let alpha = 3.0 * mu0;
        step("alpha", alpha, "convex case: 3 pi^2 / D^2");
        GapCertificate {
            operator: op.clone(),
            h,
            branch: Branch::Convex,
            kappa: kappa.kappa,
            lambda,
            lambda_tilde,
            tau_min,
            k_estimate,
            sigma: 0.0,
            sigma2: 0.0,
            mu0,
            mu1,
            s0: 0.0,
            eta: 1.0,
            alpha,
            quarter_bound: quarter(mu1 - mu0),
            rigorous: op.is_gradient(),
            limiting_domain: !op.domain.strictly_convex(),
            trace: Vec::new(),
        }
    } else {
        let bound = general_bound(lambda_tilde, diameter)?;
        step("sigma2", bound.sigma2, "smallest ladder value above the critical sigma with s0 < D/4 confirmed");
        step("sigma", bound.sigma, "max(sigma2, 8 Lambda_tilde)");
        step("mu0", bound.mu0, "first eigenvalue of the comparison problem");
        step("mu1", bound.mu1, "second eigenvalue of the comparison problem");
        step("mu1 - mu0", bound.gap, "Wronskian identity");
        step("s0", bound.s0, "turning point of the Riccati profile");
        step("eta", bound.eta, "1/2 + 0.95 (eta_sigma - 1/2)");
        step("alpha", bound.alpha, "eta^2 (mu1 - mu0)");
        GapCertificate {
            operator: op.clone(),
            h,
            branch: Branch::General,
            kappa: kappa.kappa,
            lambda,
            lambda_tilde,
            tau_min,
            k_estimate,
            sigma: bound.sigma,
            sigma2: bound.sigma2,
            mu0: bound.mu0,
            mu1: bound.mu1,
            s0: bound.s0,
            eta: bound.eta,
            alpha: bound.alpha,
            quarter_bound: quarter(bound.gap),
            rigorous: false,
            limiting_domain: !op.domain.strictly_convex(),
            trace: Vec::new(),
        }
    };
    if !(certificate.alpha > 0.0) {
        return Err(Error::HypothesisViolation(format!("alpha = {} is not positive", certificate.alpha)));
    }
    Ok(GapCertificate { trace, ..certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub h: f64,
    pub actual_gap: f64,
    pub alpha: f64,
    pub slack: f64,
    /// `|gap(h) - gap(2h)|`.
    pub tol_h: f64,
    pub pass: bool,
}

/// Compares a certificate with the measured gap on the fine grid; the discretization error
/// is estimated from the coarse grid's gap.
pub fn soundness_report(certificate: &GapCertificate, fine: &DiscreteSpectrum, coarse: &DiscreteSpectrum) -> Result<SoundnessReport> {
    let actual_gap = fine.gap()?;
    let tol_h = (actual_gap - coarse.gap()?).abs();
    let slack = actual_gap - certificate.alpha;
    Ok(SoundnessReport { h: fine.h, actual_gap, alpha: certificate.alpha, slack, tol_h, pass: actual_gap >= certificate.alpha - tol_h })
}

impl GapCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let branch = match self.branch {
            Branch::Convex => "convex",
            Branch::General => "general",
        };
        let _ = writeln!(out, "gap certificate ({branch} branch, h = {:e})", self.h);
        let _ = writeln!(out, "  alpha          = {:.12e}", self.alpha);
        let _ = writeln!(out, "  quarter bound  = {:.12e}", self.quarter_bound);
        let _ = writeln!(out, "  rigorous       = {}", self.rigorous);
        if self.limiting_domain {
            let _ = writeln!(out, "  note: domain is not strictly convex; treated as a limiting case");
        }
        let _ = writeln!(out, "trace:");
        for s in &self.trace {
            let _ = writeln!(out, "  {:<14} {:>22.12e}  {}", s.quantity, s.value, s.basis);
        }
        out
    }
}

impl SoundnessReport {
    pub fn to_text(&self) -> String {
        format!(
            "{} actual gap {:.9e}, alpha {:.9e}, slack {:.3e}, tol_h {:.3e}, h {:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.actual_gap,
            self.alpha,
            self.slack,
            self.tol_h,
            self.h
        )
    }
}
