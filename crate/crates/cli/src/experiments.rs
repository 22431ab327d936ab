//! Named experiments. Each writes CSV tables, SVG charts and a list of checks.

use std::f64::consts::{PI, SQRT_2};

use anyhow::{anyhow, bail, Result};
use driftgap::bessel::bessel_j_zero;
use driftgap::catalog::{by_name, phi_laplacian, shipped_operators};
use driftgap::fields::{ScalarFieldSpec, VectorFieldSpec};
use driftgap::geometry::DomainSpec;
use driftgap::modulus::{build_continuity_modulus, build_modulus, build_riccati, find_sigma2, turning_point_at, turning_point_identity, ModulusProfile};
use driftgap::operator::{c_tolerance, check_c_nonnegative, check_laplacian_identity, compute_derived_fields, ManufacturedCase, ManufacturedProfile};
use driftgap::sl::{gap_from_spectrum, sl_gap, solve_sl, SlProblem, SlSpectrum};
use driftgap::spectrum::{assemble, low_spectrum, DiscreteSpectrum, RESIDUAL_TOL};
use driftgap::{certify, soundness_report, Branch, CertifyOptions, OperatorSpec};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{Chart, Check, Report, Series};

pub const NAMES: [&str; 10] = [
    "sl-spectrum",
    "sl-asymptotics",
    "sigma-ladder",
    "modulus-check",
    "ac-interval",
    "phi-laplacian",
    "constant-drift",
    "rotating-disk",
    "identity-check",
    "certify",
];

pub struct Settings {
    pub config: ExperimentConfig,
    pub seed: u64,
}

impl Settings {
    fn pairs(&self, default: usize) -> usize {
        self.config.pairs.unwrap_or(default)
    }

    fn options(&self) -> CertifyOptions {
        CertifyOptions { pairs: self.pairs(CertifyOptions::default().pairs), seed: self.seed }
    }

    fn operator_or(&self, default: OperatorSpec) -> Result<OperatorSpec> {
        if let Some(op) = &self.config.operator {
            return Ok(op.clone());
        }
        if let Some(name) = &self.config.builtin {
            return Ok(by_name(name).ok_or_else(|| anyhow!("unknown built-in operator {name}"))?.operator);
        }
        Ok(default)
    }
}

pub fn run(name: &str, settings: &Settings, report: &mut Report) -> Result<()> {
    match name {
        "sl-spectrum" => sl_spectrum(settings, report),
        "sl-asymptotics" => sl_asymptotics(settings, report),
        "sigma-ladder" => sigma_ladder(settings, report),
        "modulus-check" => modulus_check(settings, report),
        "ac-interval" => ac_interval(settings, report),
        "phi-laplacian" => phi_laplacian_experiment(settings, report),
        "constant-drift" => constant_drift(settings, report),
        "rotating-disk" => rotating_disk(settings, report),
        "identity-check" => identity_check(settings, report),
        "certify" => certify_experiment(settings, report),
        other => bail!("unknown experiment {other}; expected one of {}", NAMES.join(", ")),
    }
}

/// Columns `s, w0, w0p, w1, w1p, ...` on the sample grid of `[0, D/2]`.
pub fn eigenpair_table(spectrum: &SlSpectrum) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut headers = vec!["s".to_string()];
    for p in &spectrum.pairs {
        headers.push(format!("w{}", p.index));
        headers.push(format!("w{}p", p.index));
    }
    let rows = (0..spectrum.pairs.first().map_or(0, |p| p.samples.len()))
        .map(|i| {
            let mut row = vec![spectrum.pairs[0].samples[i].0];
            for p in &spectrum.pairs {
                row.push(p.samples[i].1);
                row.push(p.derivative_samples[i].1);
            }
            row
        })
        .collect();
    (headers, rows)
}

/// Columns `s, v, omega, psi, ratio`, with `v = w0'/w0` and `ratio = w1/w0` taken at the
/// rescaled point `eta s + s0`; NaN where `w0` is too small to evaluate.
pub fn profile_table(spectrum: &SlSpectrum, profile: &ModulusProfile) -> Result<Vec<Vec<f64>>> {
    let riccati = build_riccati(spectrum)?;
    let continuity = build_continuity_modulus(spectrum, profile, 1.0)?;
    Ok(profile
        .omega_samples
        .iter()
        .zip(&profile.psi_samples)
        .map(|(&(s, omega), &(_, psi))| {
            let x = profile.eta * s + profile.s0;
            vec![s, riccati.v(x).unwrap_or(f64::NAN), omega, psi, continuity.ratio_at(x).unwrap_or(f64::NAN)]
        })
        .collect())
}

fn spectra(op: &OperatorSpec, grids: &[f64], k: usize) -> Result<Vec<DiscreteSpectrum>> {
    grids.par_iter().map(|&h| Ok(low_spectrum(&assemble(op, h)?, k)?)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sl_spectrum(settings: &Settings, report: &mut Report) -> Result<()> {
    let diameters = settings.config.diameter.map(|d| vec![d]).unwrap_or_else(|| vec![1.0, 2.0, SQRT_2]);
    let modes = settings.config.modes.unwrap_or(4);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &d in &diameters {
        let spectrum = solve_sl(&SlProblem::new(0.0, d)?, modes.max(2))?;
        for (n, pair) in spectrum.pairs.iter().enumerate() {
            let exact = ((n + 1) as f64 * PI / d).powi(2);
            worst = worst.max(rel(pair.mu, exact));
            rows.push(vec![d, n as f64, pair.mu, exact]);
        }
        let gap = gap_from_spectrum(&spectrum)?;
        worst = worst.max(rel(gap.gap, 3.0 * (PI / d).powi(2)));
    }
    report.table("sl_closed_form", &["diameter", "n", "mu", "exact"], &rows)?;
    report.check(Check::new("1", "SL eigenvalues and gap at sigma = 0 match the closed form", worst, 1e-9, None, worst <= 1e-9));

    let d = diameters[0];
    let sigma2 = find_sigma2(d)?.sigma2;
    let sigmas = settings.config.sigmas.clone().unwrap_or_else(|| vec![0.0, sigma2, 8.0 * sigma2]);
    for (i, &sigma) in sigmas.iter().enumerate() {
        let problem = SlProblem::new(sigma, d)?;
        let spectrum = solve_sl(&problem, modes.max(2))?;
        let nodes = problem.nodes();
        let series = spectrum.pairs.iter().map(|pair| Series::line(&format!("w{} (mu = {:.4})", pair.index, pair.mu), pair.samples.clone())).collect();
        let mut table = Vec::new();
        let (w0, w1) = (spectrum.pair(0)?, spectrum.pair(1)?);
        let mut min_wronskian = f64::INFINITY;
        for &s in &nodes[..nodes.len() - 1] {
            for x in [s, -s] {
                let ((a, da), (b, db)) = (w0.eval(x)?, w1.eval(x)?);
                let w = a * db - b * da;
                min_wronskian = min_wronskian.min(w);
                table.push(vec![x, a, b, w]);
            }
        }
        table.sort_by(|a, b| a[0].total_cmp(&b[0]));
        report.table(&format!("sl_wronskian_{i}"), &["s", "w0", "w1", "w0*w1' - w1*w0'"], &table)?;
        report.chart(&format!("sl_eigenfunctions_{i}"), &Chart::new(&format!("eigenfunctions, sigma = {sigma:.4}, D = {d}"), "s", "w", series))?;
        report.check(Check::new("6", format!("w0 w1' - w1 w0' > 0 on the interior, sigma = {sigma:.4}"), min_wronskian, 0.0, None, min_wronskian > 0.0));
    }
    Ok(())
}

fn sl_asymptotics(settings: &Settings, report: &mut Report) -> Result<()> {
    let d = settings.config.diameter.unwrap_or(2.0);
    let sigmas = settings.config.sigmas.clone().unwrap_or_else(|| vec![1e3, 1e4, 1e6]);
    let mu0s: Vec<f64> = sigmas.par_iter().map(|&s| Ok(solve_sl(&SlProblem::new(s, d)?, 1)?.pair(0)?.mu)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let (mut ratios, mut lowers) = (Vec::new(), Vec::new());
    for (&sigma, &mu0) in sigmas.iter().zip(&mu0s) {
        let ratio = -mu0 / sigma;
        let lower = d / 2.0 - (PI * PI + 0.5) * sigma.powf(-1.0 / 3.0);
        rows.push(vec![sigma, mu0, ratio, lower, d / 2.0]);
        ratios.push((sigma.log10(), ratio));
        lowers.push((sigma.log10(), lower));
        let inside = lower <= ratio && ratio < d / 2.0;
        report.check(Check::new("2", format!("D/2 - (pi^2+1/2) sigma^(-1/3) <= -mu0/sigma < D/2 at sigma = {sigma:e}"), ratio, lower, None, inside));
    }
    report.table("sl_asymptotics", &["sigma", "mu0", "-mu0/sigma", "lower", "upper"], &rows)?;
    let upper = ratios.iter().map(|p| (p.0, d / 2.0)).collect();
    report.chart(
        "sl_asymptotics",
        &Chart::new(
            &format!("-mu0/sigma, D = {d}"),
            "log10 sigma",
            "-mu0/sigma",
            vec![Series::line("-mu0/sigma", ratios), Series::line("lower", lowers), Series::line("D/2", upper)],
        ),
    )
}

fn sigma_ladder(settings: &Settings, report: &mut Report) -> Result<()> {
    let d = settings.config.diameter.unwrap_or(1.0);
    let search = find_sigma2(d)?;
    let sigma2 = search.sigma2;
    report.text("sigma2.txt", &format!("sigma0 = {}\nsigma2 = {sigma2}\n", search.sigma0))?;

    let ladder: Vec<(f64, f64, f64)> = (0..=8)
        .into_par_iter()
        .map(|k| {
            let sigma = sigma2 * 1.25f64.powi(k);
            let (_, _, s0, eta_sigma) = turning_point_at(sigma, d)?;
            Ok((sigma, s0, eta_sigma))
        })
        .collect::<Result<_>>()?;
    report.table("turning_points", &["sigma", "s0", "eta_sigma"], &ladder.iter().map(|r| vec![r.0, r.1, r.2]).collect::<Vec<_>>())?;
    let min_eta = ladder.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let max_s0 = ladder.iter().map(|r| r.1).fold(0.0, f64::max);
    report.check(Check::new("5", "eta_sigma > 1/2 along sigma2 * 1.25^k, k = 0..8", min_eta, 0.5, None, min_eta > 0.5));
    report.check(Check::new("5", "s0 < D/4 along sigma2 * 1.25^k, k = 0..8", max_s0, 0.25 * d, None, max_s0 < 0.25 * d));
    let worst_rise = ladder.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    report.check(Check::new("5", "s0 strictly decreasing along sigma2 * 1.25^k (largest step shown)", worst_rise, 0.0, None, worst_rise < 0.0));
    report.chart("turning_points", &Chart::new("turning point s0", "sigma", "s0", vec![Series::line("s0", ladder.iter().map(|r| (r.0, r.1)).collect())]))?;

    let reference = sl_gap(&SlProblem::new(0.0, d)?)?.gap;
    let gaps: Vec<(f64, f64, f64)> = (0..=5)
        .into_par_iter()
        .map(|k| {
            let sigma = sigma2 * 4f64.powi(k);
            let gap = sl_gap(&SlProblem::new(sigma, d)?)?;
            Ok((sigma, gap.gap, gap.log_gap))
        })
        .collect::<Result<_>>()?;
    report.table("gap_ladder", &["sigma", "gap", "log_gap"], &gaps.iter().map(|r| vec![r.0, r.1, r.2]).collect::<Vec<_>>())?;
    let worst_step = gaps.windows(2).map(|w| w[1].2 - w[0].2).fold(f64::NEG_INFINITY, f64::max);
    report.check(Check::new("13", "log(mu1 - mu0) strictly decreasing along sigma2 * 4^k, k = 0..5", worst_step, 0.0, None, worst_step < 0.0));
    let top = (gaps[5].2 - reference.ln()).exp();
    report.check(Check::new("13", "gap at sigma2 * 4^5 relative to the sigma = 0 gap", top, 0.1, None, top < 0.1));
    report.chart(
        "gap_ladder",
        &Chart::new(
            "log SL gap along sigma2 * 4^k",
            "k",
            "log(mu1 - mu0)",
            vec![Series::line("log gap", gaps.iter().enumerate().map(|(k, r)| (k as f64, r.2)).collect())],
        ),
    )
}

fn modulus_check(settings: &Settings, report: &mut Report) -> Result<()> {
    let d = settings.config.diameter.unwrap_or(1.0);
    let sigma2 = find_sigma2(d)?.sigma2;
    let factors = [1.0, 4.0, 16.0];
    let riccati: Vec<(f64, f64, f64, f64)> = factors
        .par_iter()
        .map(|&f| {
            let sigma = f * sigma2;
            let (spectrum, profile, _, _) = turning_point_at(sigma, d)?;
            let identity = turning_point_identity(&profile).ok_or_else(|| anyhow!("no turning point at sigma = {sigma}"))?;
            let modulus = build_modulus(&spectrum, 0.0)?;
            let heat = build_continuity_modulus(&spectrum, &modulus, 1.0)?.heat_residual;
            Ok((sigma, identity, modulus.checks.riccati_residual, heat))
        })
        .collect::<Result<_>>()?;
    report.table(
        "riccati",
        &["sigma", "turning_identity", "omega_residual", "heat_residual"],
        &riccati.iter().map(|r| vec![r.0, r.1, r.2, r.3]).collect::<Vec<_>>(),
    )?;
    for &(sigma, identity, residual, heat) in &riccati {
        report.check(Check::new("3", format!("v(s0)^2 + sigma s0 + mu0 = 0 (relative), sigma = {sigma:.4}"), identity, 1e-6, None, identity <= 1e-6));
        report.check(Check::new("3", format!("omega Riccati residual (relative), sigma = {sigma:.4}"), residual, 1e-6, None, residual <= 1e-6));
        report.check(Check::new("7", format!("drift-heat identity residual at t = 0, sigma = {sigma:.4}"), heat, 1e-5, None, heat <= 1e-5));
    }

    let lambdas = settings.config.lambdas.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let profiles: Vec<(f64, ModulusProfile, f64, Vec<Vec<f64>>)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let sigma = sigma2.max(8.0 * lambda);
            let spectrum = solve_sl(&SlProblem::new(sigma, d)?, 2)?;
            let profile = build_modulus(&spectrum, lambda)?;
            let heat = build_continuity_modulus(&spectrum, &profile, 1.0)?.heat_residual;
            let table = profile_table(&spectrum, &profile)?;
            Ok((lambda, profile, heat, table))
        })
        .collect::<Result<_>>()?;
    let mut series = Vec::new();
    for (lambda, profile, heat, table) in &profiles {
        let c = profile.checks;
        report.check(Check::new("4", format!("psi(0) >= 0, Lambda = {lambda}"), c.psi_at_zero, 0.0, None, c.psi_at_zero >= 0.0));
        report.check(Check::new("4", format!("psi' < 0 on (0, D/2], Lambda = {lambda}"), c.max_psi_slope, 0.0, None, c.max_psi_slope < 0.0));
        report.check(Check::new(
            "4",
            format!("2 psi'' + 4 psi' psi + 2 Lambda <= 0, Lambda = {lambda}"),
            c.inequality_max,
            1e-8,
            None,
            c.inequality_max <= 1e-8,
        ));
        report.check(Check::new("7", format!("drift-heat identity residual at t = 0, Lambda = {lambda}"), *heat, 1e-5, None, *heat <= 1e-5));
        let name = format!("psi_lambda_{lambda}");
        report.table(&name, &["s", "v", "omega", "psi", "ratio"], table)?;
        series.push(Series::line(&format!("Lambda = {lambda}, sigma = {:.2}", profile.sigma), profile.psi_samples.clone()));
    }
    report.chart("psi", &Chart::new(&format!("modulus psi, D = {d}"), "s", "psi(s)", series))
}

/// Certificate on the finest grid, judged against the two finest spectra.
fn certify_on(
    name: &str,
    op: &OperatorSpec,
    grids: &[f64],
    spectra: &[DiscreteSpectrum],
    settings: &Settings,
    report: &mut Report,
) -> Result<driftgap::GapCertificate> {
    let n = spectra.len();
    let (fine, coarse) = (&spectra[n - 1], &spectra[n - 2]);
    let cert = certify(op, fine, settings.options())?;
    let sound = soundness_report(&cert, fine, coarse)?;
    report.text(&format!("certificate_{name}.json"), &cert.to_json())?;
    report.text(&format!("certificate_{name}.txt"), &format!("{}\n{}\n", cert.to_text(), sound.to_text()))?;
    let h = Some(grids[n - 1]);
    report.check(Check::new(
        "10",
        format!("{name}: alpha <= measured gap + tol_h (slack {:.3e})", sound.slack),
        sound.actual_gap - cert.alpha,
        -sound.tol_h,
        h,
        sound.pass,
    ));
    if cert.branch == Branch::General {
        report.check(Check::new(
            "10",
            format!("{name}: alpha > (mu1 - mu0)/4 on the general branch"),
            cert.alpha,
            cert.quarter_bound,
            h,
            cert.alpha > cert.quarter_bound,
        ));
    }
    Ok(cert)
}

fn spectrum_table(report: &mut Report, name: &str, key: &str, keys: &[f64], spectra: &[DiscreteSpectrum]) -> Result<()> {
    let mut rows = Vec::new();
    for (h, s) in keys.iter().zip(spectra) {
        rows.push(vec![*h, s.lambda0, 0.0, s.residual_norms[0]]);
        for (z, r) in s.others.iter().zip(&s.residual_norms[1..]) {
            rows.push(vec![*h, z.re, z.im, *r]);
        }
    }
    report.table(name, &[key, "re", "im", "residual"], &rows)
}

fn two_point_check(report: &mut Report, name: &str, op: &OperatorSpec, h: f64, settings: &Settings) -> Result<()> {
    let discrete = assemble(op, h)?;
    let spectrum = low_spectrum(&discrete, 1)?;
    let fields = compute_derived_fields(op, &discrete.grid, Some(&spectrum.u0))?;
    let psi = ModulusProfile::tangent(op.diameter(), 1024)?;
    let pairs = settings.pairs(100_000).max(100_000);
    let check = check_c_nonnegative(&fields, &psi, pairs, settings.seed)?;
    let tol = c_tolerance(h, 0.0, 0.0, op.diameter());
    report.check(Check::new("12", format!("{name}: min of the two-point quantity over {} pairs", check.pairs), check.min, -tol, Some(h), check.min >= -tol));
    Ok(())
}

fn ac_interval(settings: &Settings, report: &mut Report) -> Result<()> {
    let op = settings.operator_or(OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero))?;
    let grids = settings.config.convergence_grids(&[1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0])?;
    let spectra = spectra(&op, &grids, 3)?;
    spectrum_table(report, "spectra", "h", &grids, &spectra)?;
    let cert = certify_on("interval", &op, &grids, &spectra, settings, report)?;
    let n = spectra.len();
    let sound = soundness_report(&cert, &spectra[n - 1], &spectra[n - 2])?;
    report.check(Check::new(
        "10",
        "interval: convex branch and |slack| <= tol_h (sharp case)",
        sound.slack.abs(),
        sound.tol_h,
        Some(grids[n - 1]),
        cert.branch == Branch::Convex && sound.slack.abs() <= sound.tol_h,
    ));
    let gaps: Vec<(f64, f64)> = grids.iter().zip(&spectra).map(|(h, s)| Ok((*h, s.gap()?))).collect::<Result<_>>()?;
    report.chart(
        "gap_vs_h",
        &Chart::new(
            "interval gap vs certified bound",
            "h",
            "gap",
            vec![Series::line("computed gap", gaps.clone()), Series::line("alpha", gaps.iter().map(|g| (g.0, cert.alpha)).collect())],
        ),
    )?;
    two_point_check(report, "interval", &op, grids[n - 1], settings)
}

fn phi_laplacian_experiment(settings: &Settings, report: &mut Report) -> Result<()> {
    let op = settings.operator_or(phi_laplacian())?;
    let grids = settings.config.convergence_grids(&[1.0 / 32.0, 1.0 / 64.0])?;
    let spectra = spectra(&op, &grids, 4)?;
    spectrum_table(report, "spectra", "h", &grids, &spectra)?;
    for (h, s) in grids.iter().zip(&spectra) {
        let real = s.others.iter().all(|z| z.im == 0.0);
        report.check(Check::new(
            "9",
            "spectrum real, Re lambda > lambda0, u0 > 0",
            s.gap()?,
            0.0,
            Some(*h),
            real && s.gap()? > 0.0 && s.u0.iter().all(|&u| u > 0.0),
        ));
    }
    let cert = certify_on("phi_laplacian", &op, &grids, &spectra, settings, report)?;
    report.check(Check::new(
        "10",
        "phi-Laplacian with phi-convex potential takes the convex branch",
        cert.lambda_tilde,
        1e-9,
        Some(cert.h),
        cert.branch == Branch::Convex,
    ));
    two_point_check(report, "phi-laplacian", &op, *grids.last().expect("two grids"), settings)
}

fn constant_drift(settings: &Settings, report: &mut Report) -> Result<()> {
    let b = 2.0;
    let op =
        settings.operator_or(OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Constant { value: [b, 0.0] }, ScalarFieldSpec::Zero))?;
    let grids = settings.config.convergence_grids(&[1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0])?;
    let spectra = spectra(&op, &grids, 4)?;
    spectrum_table(report, "spectra", "h", &grids, &spectra)?;
    let drift = match op.drift {
        VectorFieldSpec::Constant { value } => value[0],
        VectorFieldSpec::Zero => 0.0,
        _ => bail!("constant-drift needs a constant or zero drift on an interval"),
    };
    let length = match op.domain {
        DomainSpec::Interval { length } => length,
        _ => bail!("constant-drift needs an interval domain"),
    };
    let exact = |n: usize| ((n + 1) as f64 * PI / length).powi(2) + drift * drift / 4.0;
    let mut rows = Vec::new();
    for n in 0..4 {
        let errors: Vec<f64> = spectra.iter().map(|s| if n == 0 { s.lambda0 } else { s.others[n - 1].re }).map(|l| (l - exact(n)).abs()).collect();
        for (i, w) in errors.windows(2).enumerate() {
            let ratio = w[0] / w[1];
            rows.push(vec![n as f64, grids[i], grids[i + 1], w[0], w[1], ratio]);
            report.check(Check::new(
                "8",
                format!("lambda_{n} error ratio between h and h/2 in [3.5, 4.5]"),
                ratio,
                4.0,
                Some(grids[i + 1]),
                (3.5..=4.5).contains(&ratio),
            ));
        }
    }
    report.table("convergence", &["n", "h", "h_next", "error_h", "error_next", "ratio"], &rows)?;
    for (h, s) in grids.iter().zip(&spectra) {
        let max_im = s.others.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        report.check(Check::new("8", "all computed eigenvalues real", max_im, 0.0, Some(*h), max_im == 0.0));
    }
    let mid = grids[grids.len() / 2];
    let drifts = [0.0, 1.0, 2.0, 4.0];
    let gaps: Vec<f64> = drifts
        .par_iter()
        .map(|&d| {
            let op = OperatorSpec::new(op.domain, VectorFieldSpec::Constant { value: [d, 0.0] }, ScalarFieldSpec::Zero);
            Ok(low_spectrum(&assemble(&op, mid)?, 2)?.gap()?)
        })
        .collect::<Result<_>>()?;
    let spread = gaps.iter().map(|g| rel(*g, gaps[0])).fold(0.0, f64::max);
    report.check(Check::new("8", "gap independent of the constant drift b in {0, 1, 2, 4} (relative spread)", spread, 1e-3, Some(mid), spread <= 1e-3));
    report.chart(
        "gap_vs_drift",
        &Chart::new("gap vs constant drift", "b", "gap", vec![Series::line("gap", drifts.iter().copied().zip(gaps.iter().copied()).collect())]),
    )?;
    certify_on("constant_drift", &op, &grids, &spectra, settings, report)?;
    Ok(())
}

fn rotating_disk(settings: &Settings, report: &mut Report) -> Result<()> {
    let grids = settings.config.convergence_grids(&[1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0])?;
    let disk = DomainSpec::Disk { radius: 1.0 };
    let free = OperatorSpec::new(disk, VectorFieldSpec::Zero, ScalarFieldSpec::Zero);
    let spectra_free = spectra(&free, &grids, 3)?;
    let (j01, j11) = (bessel_j_zero(0, 1), bessel_j_zero(1, 1));
    let mut rows = Vec::new();
    for (h, s) in grids.iter().zip(&spectra_free) {
        rows.push(vec![*h, s.lambda0, j01 * j01, s.gap()?, j11 * j11 - j01 * j01]);
    }
    report.table("disk_bessel", &["h", "lambda0", "j01^2", "gap", "j11^2 - j01^2"], &rows)?;
    let last = rows.last().expect("grids");
    let (e0, eg) = (rel(last[1], last[2]), rel(last[3], last[4]));
    let decreasing = rows.windows(2).all(|w| (w[1][1] - w[1][2]).abs() < (w[0][1] - w[0][2]).abs() && (w[1][3] - w[1][4]).abs() < (w[0][3] - w[0][4]).abs());
    report.check(Check::new("8", "disk lambda0 -> j01^2 under refinement (relative error at finest)", e0, 0.01, Some(last[0]), e0 <= 0.01 && decreasing));
    report.check(Check::new("8", "disk gap -> j11^2 - j01^2 under refinement (relative error at finest)", eg, 0.01, Some(last[0]), eg <= 0.01 && decreasing));

    let h = *grids.last().expect("grids");
    let base = spectra_free.last().expect("grids").gap()?;
    let omegas = [1.0, 2.0, 4.0];
    let rotating: Vec<DiscreteSpectrum> = omegas
        .par_iter()
        .map(|&omega| {
            Ok(low_spectrum(&assemble(&OperatorSpec::new(disk, VectorFieldSpec::Rotational { omega, center: [0.0; 2] }, ScalarFieldSpec::Zero), h)?, 3)?)
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (omega, s) in omegas.iter().zip(&rotating) {
        let paired = s.others.iter().all(|z| z.im == 0.0 || s.others.iter().any(|w| (w - z.conj()).norm() <= 1e-9 * z.norm()));
        let complex = s.others.iter().any(|z| z.im != 0.0);
        report.check(Check::new(
            "9",
            format!("omega = {omega}: nonreal eigenvalues in conjugate pairs"),
            s.repaired_conjugates as f64,
            0.0,
            Some(h),
            paired && complex,
        ));
        let strict = s.others.iter().all(|z| z.re > s.lambda0) && s.u0.iter().all(|&u| u > 0.0);
        report.check(Check::new("9", format!("omega = {omega}: Re lambda > lambda0 and u0 > 0"), s.gap()?, 0.0, Some(h), strict));
        let max_residual = s.residual_norms.iter().copied().fold(0.0, f64::max);
        report.check(Check::new("9", format!("omega = {omega}: eigenpair residuals"), max_residual, RESIDUAL_TOL, Some(h), max_residual <= RESIDUAL_TOL));
        let spread = rel(s.gap()?, base);
        report.check(Check::new("9", format!("omega = {omega}: gap equals the omega = 0 gap (relative difference)"), spread, 1e-6, Some(h), spread <= 1e-6));
        points.extend(std::iter::once((s.lambda0, 0.0)).chain(s.others.iter().map(|z| (z.re, z.im))));
    }
    report.chart(
        "rotating_spectrum",
        &Chart::new("rotating disk eigenvalues, omega in {1, 2, 4}", "Re lambda", "Im lambda", vec![Series::scatter("eigenvalues", points)]),
    )?;
    spectrum_table(report, "rotating_spectra", "omega", &omegas, &rotating)?;

    let cutoff = by_name("cutoff-disk").expect("built-in").operator;
    let cutoff_spectra = spectra(&cutoff, &grids[grids.len() - 2..], 3)?;
    certify_on("cutoff_disk", &cutoff, &grids[grids.len() - 2..], &cutoff_spectra, settings, report)?;
    Ok(())
}

fn identity_check(settings: &Settings, report: &mut Report) -> Result<()> {
    let grids = settings.config.convergence_grids(&[0.02, 0.01])?;
    let cases = [
        (
            "1d_sine",
            ManufacturedCase {
                domain: DomainSpec::Interval { length: 1.0 },
                drift: VectorFieldSpec::Zero,
                profile: ManufacturedProfile::Sine { length: 1.0 },
                lambda0: 2.0,
            },
        ),
        (
            "2d_gradient",
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
            "2d_rotational",
            ManufacturedCase {
                domain: DomainSpec::Disk { radius: 1.0 },
                drift: VectorFieldSpec::CutoffRotational { omega: 3.0, cutoff: 0.9, center: [0.0; 2] },
                profile: ManufacturedProfile::Cosine { center: [0.0, 0.1], rate: 1.1 },
                lambda0: 1.0,
            },
        ),
    ];
    let mut series = Vec::new();
    let mut rows = Vec::new();
    for (i, (name, case)) in cases.iter().enumerate() {
        let residuals: Vec<f64> = grids.iter().map(|&h| Ok(check_laplacian_identity(case, h)?)).collect::<Result<_>>()?;
        for (k, w) in residuals.windows(2).enumerate() {
            let ratio = w[0] / w[1];
            report.check(Check::new(
                "11",
                format!("{name}: residual ratio between h and h/2 in [3.5, 4.5]"),
                ratio,
                4.0,
                Some(grids[k + 1]),
                (3.5..=4.5).contains(&ratio),
            ));
        }
        for (h, r) in grids.iter().zip(&residuals) {
            rows.push(vec![i as f64, *h, *r]);
        }
        series.push(Series::line(name, grids.iter().zip(&residuals).map(|(h, r)| (h.log10(), r.log10())).collect()));
    }
    report.table("identity_residuals", &["case", "h", "residual"], &rows)?;
    report.chart("identity_residuals", &Chart::new("manufactured identity residual", "log10 h", "log10 residual", series))
}

fn certify_experiment(settings: &Settings, report: &mut Report) -> Result<()> {
    let targets: Vec<(String, OperatorSpec, Vec<f64>)> = match (&settings.config.operator, &settings.config.builtin) {
        (Some(op), _) => {
            let name = settings.config.name.clone().unwrap_or_else(|| "custom".into());
            vec![(name, op.clone(), settings.config.convergence_grids(&[])?)]
        }
        (None, Some(name)) => {
            let named = by_name(name).ok_or_else(|| anyhow!("unknown built-in operator {name}"))?;
            let grids = settings.config.convergence_grids(&[2.0 * named.h, named.h])?;
            vec![(name.clone(), named.operator, grids)]
        }
        (None, None) => shipped_operators().into_iter().map(|n| (n.name.to_string(), n.operator, vec![2.0 * n.h, n.h])).collect(),
    };
    let results: Vec<Vec<DiscreteSpectrum>> = targets.par_iter().map(|(_, op, grids)| spectra(op, grids, 3)).collect::<Result<_>>()?;
    for ((name, op, grids), spectra) in targets.iter().zip(&results) {
        certify_on(name, op, grids, spectra, settings, report)?;
        for (h, s) in grids.iter().zip(spectra) {
            let strict = s.others.iter().all(|z| z.re > s.lambda0) && s.u0.iter().all(|&u| u > 0.0);
            report.check(Check::new("9", format!("{name}: Re lambda > lambda0 and u0 > 0"), s.gap()?, 0.0, Some(*h), strict));
        }
    }
    Ok(())
}
