//! Acceptance criteria, run in order with one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use driftgap::bessel::bessel_j_zero;
use driftgap::catalog::{phi_laplacian, shipped_operators};
use driftgap::fields::{ScalarFieldSpec, VectorFieldSpec};
use driftgap::geometry::DomainSpec;
use driftgap::modulus::{build_continuity_modulus, build_modulus, find_sigma2, turning_point_at, turning_point_identity, ModulusProfile};
use driftgap::operator::{
    c_tolerance, check_c_nonnegative, check_laplacian_identity, compute_derived_fields, ManufacturedCase, ManufacturedProfile, OperatorSpec,
};
use driftgap::sl::{sl_gap, solve_sl, SlProblem};
use driftgap::spectrum::{assemble, low_spectrum, DiscreteSpectrum, RESIDUAL_TOL};
use driftgap::{certify, soundness_report, Branch, CertifyOptions, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Result<Outcome>,
}

fn closed_form() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for d in [1.0, 2.0, SQRT_2] {
        let spectrum = solve_sl(&SlProblem::new(0.0, d)?, 2)?;
        let gap = driftgap::sl::gap_from_spectrum(&spectrum)?;
        let base = (PI / d).powi(2);
        for (value, exact) in [(gap.mu0, base), (gap.mu1, 4.0 * base), (gap.gap, 3.0 * base)] {
            worst = worst.max((value - exact).abs() / exact);
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} (tol 1e-9)"))
}

fn comparison_bracket() -> Result<Outcome> {
    let d = 2.0;
    let mut pass = true;
    let mut rows = Vec::new();
    for sigma in [1e3, 1e4, 1e6] {
        let mu0 = solve_sl(&SlProblem::new(sigma, d)?, 1)?.pair(0)?.mu;
        let ratio = -mu0 / sigma;
        let lower = d / 2.0 - (PI * PI + 0.5) * sigma.powf(-1.0 / 3.0);
        pass &= lower <= ratio && ratio < d / 2.0;
        rows.push(format!("σ={sigma:e}: {lower:.6} ≤ {ratio:.6} < 1"));
    }
    outcome(pass, rows.join("; "))
}

fn riccati_identities() -> Result<Outcome> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    let (mut identity, mut residual) = (0.0f64, 0.0f64);
    for factor in [1.0, 4.0, 16.0] {
        let (spectrum, profile, _, _) = turning_point_at(factor * sigma2, d)?;
        identity = identity.max(turning_point_identity(&profile).unwrap_or(f64::INFINITY));
        residual = residual.max(build_modulus(&spectrum, 0.0)?.checks.riccati_residual);
    }
    outcome(identity <= 1e-6 && residual <= 1e-6, format!("turning-point identity {identity:.2e}, omega residual {residual:.2e} (tol 1e-6, relative)"))
}

fn modulus_inequalities() -> Result<Outcome> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    let mut pass = true;
    let mut rows = Vec::new();
    for lambda in [0.1, 1.0, 10.0] {
        let sigma = sigma2.max(8.0 * lambda);
        let profile = build_modulus(&solve_sl(&SlProblem::new(sigma, d)?, 2)?, lambda)?;
        let c = profile.checks;
        pass &= c.psi_at_zero >= 0.0 && c.max_psi_slope < 0.0 && c.inequality_max <= 1e-8;
        rows.push(format!("Λ={lambda}: ψ(0)={:.2e} maxψ'={:.2e} ineq={:.2e}", c.psi_at_zero, c.max_psi_slope, c.inequality_max));
    }
    outcome(pass, rows.join("; "))
}

fn verification_ladder() -> Result<Vec<(f64, f64, f64)>> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    (0..=8)
        .map(|k| {
            let sigma = sigma2 * 1.25f64.powi(k);
            let (_, _, s0, eta_sigma) = turning_point_at(sigma, d)?;
            Ok((sigma, s0, eta_sigma))
        })
        .collect()
}

fn turning_point_bounds() -> Result<Outcome> {
    let ladder = verification_ladder()?;
    let pass = ladder.iter().all(|&(_, s0, eta)| eta > 0.5 && s0 < 0.25);
    let min_eta = ladder.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let max_s0 = ladder.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(pass, format!("min η_σ {min_eta:.4} > 1/2, max s0 {max_s0:.4} < D/4 over σ2·1.25^k, k=0..8, D=1"))
}

fn turning_point_monotone() -> Result<Outcome> {
    let ladder = verification_ladder()?;
    let pass = ladder.windows(2).all(|w| w[1].1 < w[0].1);
    let values: Vec<String> = ladder.iter().map(|r| format!("{:.4}", r.1)).collect();
    outcome(pass, format!("s0 along σ2·1.25^k: {}", values.join(", ")))
}

fn ratio_monotonicity() -> Result<Outcome> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    let mut pass = true;
    let mut rows = Vec::new();
    for sigma in [0.0, sigma2, 8.0 * sigma2] {
        let problem = SlProblem::new(sigma, d)?;
        let spectrum = solve_sl(&problem, 2)?;
        let (w0, w1) = (spectrum.pair(0)?, spectrum.pair(1)?);
        let nodes = problem.nodes();
        let mut min = f64::INFINITY;
        for &s in &nodes[..nodes.len() - 1] {
            for x in [s, -s] {
                let ((a, da), (b, db)) = (w0.eval(x)?, w1.eval(x)?);
                min = min.min(a * db - b * da);
            }
        }
        pass &= min > 0.0;
        rows.push(format!("σ={sigma:.2}: min {min:.3e}"));
    }
    outcome(pass, rows.join("; "))
}

fn heat_identity() -> Result<Outcome> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    let mut worst = 0.0f64;
    for (sigma, lambda) in [(sigma2, 0.0), (4.0 * sigma2, 0.0), (sigma2.max(80.0), 10.0)] {
        let spectrum = solve_sl(&SlProblem::new(sigma, d)?, 2)?;
        let profile = build_modulus(&spectrum, lambda)?;
        worst = worst.max(build_continuity_modulus(&spectrum, &profile, 1.0)?.heat_residual);
    }
    outcome(worst <= 1e-5, format!("max residual {worst:.2e} (tol 1e-5)"))
}

fn discrete_oracles() -> Result<Outcome> {
    let b = 2.0;
    let interval = OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Constant { value: [b, 0.0] }, ScalarFieldSpec::Zero);
    let spectra: Vec<DiscreteSpectrum> =
        [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0].iter().map(|&h| low_spectrum(&assemble(&interval, h)?, 4)).collect::<Result<_>>()?;
    let real = spectra.iter().all(|s| s.others.iter().all(|z| z.im == 0.0));
    let mut ratios = Vec::new();
    for n in 0..4 {
        let exact = ((n + 1) as f64 * PI).powi(2) + b * b / 4.0;
        let errors: Vec<f64> = spectra.iter().map(|s| if n == 0 { s.lambda0 } else { s.others[n - 1].re }).map(|l| (l - exact).abs()).collect();
        ratios.extend(errors.windows(2).map(|w| w[0] / w[1]));
    }
    let ratio_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let (rmin, rmax) = (ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(0.0, f64::max));

    let disk = OperatorSpec::new(DomainSpec::Disk { radius: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero);
    let (j01, j11) = (bessel_j_zero(0, 1), bessel_j_zero(1, 1));
    let (lambda_exact, gap_exact) = (j01 * j01, j11 * j11 - j01 * j01);
    let mut lambda_errors = Vec::new();
    let mut gap_errors = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0] {
        let s = low_spectrum(&assemble(&disk, h)?, 3)?;
        lambda_errors.push((s.lambda0 - lambda_exact).abs() / lambda_exact);
        gap_errors.push((s.gap()? - gap_exact).abs() / gap_exact);
    }
    let refine = lambda_errors.windows(2).all(|w| w[1] < w[0]) && gap_errors.windows(2).all(|w| w[1] < w[0]);
    let finest = lambda_errors[2] <= 0.01 && gap_errors[2] <= 0.01;
    outcome(
        real && ratio_ok && refine && finest,
        format!(
            "interval b=2 ratios in [{rmin:.3}, {rmax:.3}], real={real}; disk λ0 rel err {:.2e}→{:.2e}, gap rel err {:.2e}→{:.2e} (j01²={lambda_exact:.4}, gap={gap_exact:.4})",
            lambda_errors[0], lambda_errors[2], gap_errors[0], gap_errors[2]
        ),
    )
}

fn strict_inequality() -> Result<Outcome> {
    let mut pass = true;
    let mut notes = Vec::new();
    for named in shipped_operators() {
        let s = low_spectrum(&assemble(&named.operator, named.h)?, 4)?;
        let ok = s.u0.iter().all(|&u| u > 0.0) && s.others.iter().all(|z| z.re > s.lambda0) && s.residual_norms.iter().all(|&r| r <= RESIDUAL_TOL);
        let paired = s.others.iter().all(|z| z.im == 0.0 || s.others.iter().any(|w| (w - z.conj()).norm() <= 1e-9 * z.norm()));
        pass &= ok && paired;
        if !(ok && paired) {
            notes.push(format!("{} fails", named.name));
        }
    }
    let disk = |omega: f64| OperatorSpec::new(DomainSpec::Disk { radius: 1.0 }, VectorFieldSpec::Rotational { omega, center: [0.0; 2] }, ScalarFieldSpec::Zero);
    let h = 1.0 / 64.0;
    let base = low_spectrum(&assemble(&disk(0.0), h)?, 3)?.gap()?;
    let mut spread = 0.0f64;
    for omega in [1.0, 2.0, 4.0] {
        let s = low_spectrum(&assemble(&disk(omega), h)?, 3)?;
        pass &= s.others.iter().any(|z| z.im != 0.0);
        spread = spread.max((s.gap()? - base).abs() / base);
    }
    pass &= spread <= 1e-6;
    notes.push(format!("{} shipped operators; rotating-disk gap spread over ω∈{{0,1,2,4}} {spread:.2e} (tol 1e-6)", shipped_operators().len()));
    outcome(pass, notes.join("; "))
}

fn certificate_soundness() -> Result<Outcome> {
    let mut pass = true;
    let mut notes = Vec::new();
    for named in shipped_operators() {
        let fine = low_spectrum(&assemble(&named.operator, named.h)?, 3)?;
        let coarse = low_spectrum(&assemble(&named.operator, 2.0 * named.h)?, 3)?;
        let cert = certify(&named.operator, &fine, CertifyOptions::default())?;
        let report = soundness_report(&cert, &fine, &coarse)?;
        let mut ok = report.pass;
        if named.name == "interval" {
            ok &= cert.branch == Branch::Convex && report.slack.abs() <= report.tol_h;
        }
        if cert.branch == Branch::General {
            ok &= cert.alpha > cert.quarter_bound;
        }
        pass &= ok;
        notes.push(format!("{}:{}{}", named.name, if ok { "ok" } else { "FAIL" }, if cert.branch == Branch::General { "(general)" } else { "" }));
    }
    outcome(pass, notes.join(" "))
}

fn laplacian_identity() -> Result<Outcome> {
    let cases = [
        (
            "1D",
            ManufacturedCase {
                domain: DomainSpec::Interval { length: 1.0 },
                drift: VectorFieldSpec::Zero,
                profile: ManufacturedProfile::Sine { length: 1.0 },
                lambda0: 2.0,
            },
        ),
        (
            "2D gradient",
            ManufacturedCase {
                domain: DomainSpec::Disk { radius: 1.0 },
                drift: VectorFieldSpec::Gradient {
                    potential: ScalarFieldSpec::Quadratic { hessian: [[2.0, 0.5], [0.5, 1.0]], linear: [0.3, 0.0], constant: 0.0, center: [0.0; 2] },
                },
                profile: ManufacturedProfile::Cosine { center: [0.1, -0.05], rate: 1.2 },
                lambda0: 4.0,
            },
        ),
        (
            "2D rotational",
            ManufacturedCase {
                domain: DomainSpec::Disk { radius: 1.0 },
                drift: VectorFieldSpec::CutoffRotational { omega: 3.0, cutoff: 0.9, center: [0.0; 2] },
                profile: ManufacturedProfile::Cosine { center: [0.0, 0.1], rate: 1.1 },
                lambda0: 1.0,
            },
        ),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, case) in cases {
        let ratio = check_laplacian_identity(&case, 0.02)? / check_laplacian_identity(&case, 0.01)?;
        pass &= (3.5..=4.5).contains(&ratio);
        rows.push(format!("{name} ratio {ratio:.3}"));
    }
    outcome(pass, rows.join("; "))
}

fn two_point_nonnegative() -> Result<Outcome> {
    let pairs = 100_000;
    let mut pass = true;
    let mut rows = Vec::new();
    let cases = [
        ("interval", OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero), 1.0 / 256.0),
        ("phi-laplacian", phi_laplacian(), 1.0 / 64.0),
    ];
    for (name, op, h) in cases {
        let discrete = assemble(&op, h)?;
        let spectrum = low_spectrum(&discrete, 1)?;
        let fields = compute_derived_fields(&op, &discrete.grid, Some(&spectrum.u0))?;
        let psi = ModulusProfile::tangent(op.diameter(), 1024)?;
        let check = check_c_nonnegative(&fields, &psi, pairs, 17)?;
        let tol = c_tolerance(h, 0.0, 0.0, op.diameter());
        pass &= check.pairs >= pairs && check.min >= -tol;
        rows.push(format!("{name}: min {:.3e} ≥ -{tol:.3e} over {} pairs", check.min, check.pairs));
    }
    outcome(pass, rows.join("; "))
}

fn gap_collapse() -> Result<Outcome> {
    let d = 1.0;
    let sigma2 = find_sigma2(d)?.sigma2;
    let logs: Vec<f64> = (0..=5).map(|k| Ok(sl_gap(&SlProblem::new(sigma2 * 4f64.powi(k), d)?)?.log_gap)).collect::<Result<_>>()?;
    let decreasing = logs.windows(2).all(|w| w[1] < w[0]);
    let reference = sl_gap(&SlProblem::new(0.0, d)?)?.gap;
    let top = logs[5];
    let small = top < (0.1 * reference).ln();
    outcome(decreasing && small, format!("log gap {:.3} → {top:.3}; top/σ=0 gap = {:.3e} (< 0.1)", logs[0], (top - reference.ln()).exp()))
}

fn main() {
    let criteria = [
        Criterion { id: "1", title: "SL closed form at σ=0", budget: Some(Duration::from_secs(1)), run: closed_form },
        Criterion { id: "2", title: "comparison bracket for -μ0/σ", budget: Some(Duration::from_secs(5)), run: comparison_bracket },
        Criterion { id: "3", title: "Riccati identities on {σ2, 4σ2, 16σ2}", budget: Some(Duration::from_secs(10)), run: riccati_identities },
        Criterion { id: "4", title: "modulus inequalities", budget: Some(Duration::from_secs(10)), run: modulus_inequalities },
        Criterion { id: "5a", title: "η_σ > 1/2 and s0 < D/4 on the verification ladder", budget: None, run: turning_point_bounds },
        Criterion { id: "5b", title: "s0 decreasing along the verification ladder", budget: None, run: turning_point_monotone },
        Criterion { id: "6", title: "w0 w1' - w1 w0' > 0", budget: None, run: ratio_monotonicity },
        Criterion { id: "7", title: "drift-heat identity at t=0", budget: None, run: heat_identity },
        Criterion { id: "8", title: "discrete spectra oracles", budget: Some(Duration::from_secs(120)), run: discrete_oracles },
        Criterion { id: "9", title: "Re λ > λ0, u0 > 0, conjugate pairs", budget: None, run: strict_inequality },
        Criterion { id: "10", title: "certificate soundness", budget: None, run: certificate_soundness },
        Criterion { id: "11", title: "Laplacian-on-Y identity at order 2", budget: None, run: laplacian_identity },
        Criterion { id: "12", title: "two-point quantity ≥ -tol_C", budget: None, run: two_point_nonnegative },
        Criterion { id: "13", title: "SL gap collapse along σ2·4^k", budget: None, run: gap_collapse },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (mut pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match c.budget {
            Some(limit) => {
                pass &= elapsed < limit;
                format!("{:.2?} (limit {:?})", elapsed, limit)
            }
            None => format!("{elapsed:.2?}"),
        };
        if !pass {
            failures += 1;
        }
        println!("criterion {:<3} {} {}: {} [{timing}]", c.id, if pass { "PASS" } else { "FAIL" }, c.title, detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
