use driftgap::modulus::{build_continuity_modulus, build_modulus, build_riccati, find_sigma2, find_turning_point, turning_point_at, ModulusProfile};
use driftgap::sl::{critical_sigma, solve_sl, SlProblem};
use driftgap::Error;

#[test]
fn constant_potential_profile_is_degenerate() {
    let spectrum = solve_sl(&SlProblem::new(0.0, 1.0).unwrap(), 2).unwrap();
    assert!(matches!(build_riccati(&spectrum), Err(Error::DegenerateProfile(_))));
    // the log-derivative is the closed form -pi tan(pi s)
    let w0 = &spectrum.pairs[0];
    for s in [0.1, 0.25, 0.4] {
        let exact = -std::f64::consts::PI * (std::f64::consts::PI * s).tan();
        assert!((w0.log_derivative(s).unwrap() - exact).abs() < 1e-10 * exact.abs().max(1.0));
    }
}

#[test]
fn riccati_profile_starts_flat_and_rising() {
    let sigma0 = critical_sigma(1.0).unwrap();
    let spectrum = solve_sl(&SlProblem::new(3.0 * sigma0, 1.0).unwrap(), 2).unwrap();
    let profile = build_riccati(&spectrum).unwrap();
    assert!(profile.samples[0].1.abs() < 1e-12);
    // v'(0) = -mu0 from the Riccati equation at s = 0
    // v is odd with v''(0) = -sigma, so v(h)/h = v'(0) - sigma h/2 + O(h^2)
    let h = 1e-5;
    let slope = profile.v(h).unwrap() / h + 0.5 * profile.sigma * h;
    assert!((slope + profile.mu0).abs() < 1e-6 * profile.mu0.abs());
    assert!(profile.riccati_residual <= 1e-6);
    assert!(profile.samples.iter().all(|p| spectrum.pairs[0].eval(p.0).unwrap().0 >= 1e-10));
}

#[test]
fn turning_point_properties() {
    let sigma0 = critical_sigma(1.0).unwrap();
    let spectrum = solve_sl(&SlProblem::new(2.0 * sigma0, 1.0).unwrap(), 2).unwrap();
    let mut profile = build_riccati(&spectrum).unwrap();
    let (s0, eta_sigma) = find_turning_point(&mut profile).unwrap();
    assert!(s0 > 0.0 && s0 < 0.5);
    assert!((eta_sigma - (0.5 - s0) / 0.5).abs() < 1e-15);
    let v0 = profile.v_at_s0.unwrap();
    assert!(v0 < (-profile.mu0).sqrt());
    for &(s, v) in &profile.samples {
        assert!(v <= v0 + 1e-12, "v({s}) = {v} exceeds v(s0) = {v0}");
    }
    for pair in profile.samples.windows(2) {
        if pair[1].0 < s0 - 1e-3 {
            assert!(pair[1].1 > pair[0].1);
        }
        if pair[0].0 > s0 + 1e-3 {
            assert!(pair[1].1 < pair[0].1);
        }
    }
}

#[test]
fn sigma2_ladder() {
    let search = find_sigma2(1.0).unwrap();
    assert!(search.sigma2 > search.sigma0);
    for k in 0..=8 {
        let sigma = search.sigma2 * 1.25f64.powi(k);
        let entry = search.ladder.iter().find(|p| (p.0 / sigma - 1.0).abs() < 1e-12).unwrap();
        assert!(entry.1 < 0.25);
    }
    // s0 first rises above its value at sigma_2 and only falls below it again far up the ladder
    let (_, _, s0_near, _) = turning_point_at(search.sigma2, 1.0).unwrap();
    let (_, _, s0_far, _) = turning_point_at(1000.0 * search.sigma2, 1.0).unwrap();
    assert!(s0_far < s0_near);
    let mut previous = f64::INFINITY;
    for k in 2..6 {
        let (_, _, s0, _) = turning_point_at(search.sigma2 * 10f64.powi(k), 1.0).unwrap();
        assert!(s0 < previous);
        previous = s0;
    }
}

#[test]
fn sigma2_scales_with_diameter() {
    let one = find_sigma2(1.0).unwrap().sigma2;
    let two = find_sigma2(2.0).unwrap().sigma2;
    assert!(two <= one / 8.0 * 1.25 * (1.0 + 1e-9));
}

#[test]
fn modulus_inequalities_for_several_drift_bounds() {
    let sigma2 = find_sigma2(1.0).unwrap().sigma2;
    for lambda in [0.1, 1.0, 10.0] {
        let sigma = sigma2.max(8.0 * lambda);
        let spectrum = solve_sl(&SlProblem::new(sigma, 1.0).unwrap(), 2).unwrap();
        let profile = build_modulus(&spectrum, lambda).unwrap();
        assert!(profile.eta > 0.5 && profile.eta < profile.eta_sigma);
        assert!(profile.eta.powi(3) * sigma >= lambda);
        assert!(profile.checks.psi_at_zero >= 0.0);
        assert!(profile.checks.max_psi_slope < 0.0);
        assert!(profile.checks.inequality_max <= 1e-8);
        assert!(profile.checks.riccati_residual <= 1e-6);
        // omega(0) = -eta v(s0)
        let omega0 = profile.omega(0.0).unwrap();
        assert!(omega0 < 0.0);
        for (&(s, w), &(_, p)) in profile.omega_samples.iter().zip(&profile.psi_samples) {
            assert_eq!(w, -p, "psi = -omega at {s}");
            assert!(w.is_finite());
        }
    }
}

#[test]
fn modulus_rejects_sigma_below_eight_lambda() {
    let spectrum = solve_sl(&SlProblem::new(100.0, 1.0).unwrap(), 2).unwrap();
    assert!(matches!(build_modulus(&spectrum, 20.0), Err(Error::InvalidProblem(_))));
}

#[test]
fn continuity_modulus_identity_and_linearity() {
    let sigma2 = find_sigma2(1.0).unwrap().sigma2;
    let spectrum = solve_sl(&SlProblem::new(4.0 * sigma2, 1.0).unwrap(), 2).unwrap();
    let profile = build_modulus(&spectrum, 0.0).unwrap();
    let one = build_continuity_modulus(&spectrum, &profile, 1.0).unwrap();
    let two = build_continuity_modulus(&spectrum, &profile, 2.0).unwrap();
    assert!(one.heat_residual <= 1e-5);
    assert!(two.heat_residual <= 1e-5);
    for s in [0.0, 0.1, 0.3, 0.5] {
        assert!((two.phi(s, 0.0).unwrap() - 2.0 * one.phi(s, 0.0).unwrap()).abs() <= 1e-14 * two.phi(s, 0.0).unwrap().abs());
    }
    for t in [0.0, 0.01, 1.0] {
        assert!(one.phi(0.0, t).unwrap() > 0.0);
    }
    // time derivative of the separable form
    let (t, dt) = (0.0, 1e-6);
    let time_slope = (one.phi(0.2, t + dt).unwrap() - one.phi(0.2, t - dt).unwrap()) / (2.0 * dt);
    let expected = -one.gap * one.eta * one.eta * one.phi(0.2, t).unwrap();
    assert!((time_slope - expected).abs() < 1e-6 * expected.abs());
}

#[test]
fn tangent_profile_saturates_inequality() {
    let profile = ModulusProfile::tangent(1.0, 256).unwrap();
    assert_eq!(profile.psi(0.0).unwrap(), 0.0);
    let h = 1e-4;
    for s in [0.05, 0.2, 0.4] {
        let psi = |x: f64| profile.psi(x).unwrap();
        let d1 = (psi(s + h) - psi(s - h)) / (2.0 * h);
        let d2 = (psi(s + h) - 2.0 * psi(s) + psi(s - h)) / (h * h);
        assert!(d1 < 0.0);
        assert!((2.0 * d2 + 4.0 * d1 * psi(s)).abs() < 1e-4 * (1.0 + d2.abs()));
    }
}
