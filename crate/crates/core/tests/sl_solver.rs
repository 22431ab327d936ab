use std::f64::consts::PI;

use driftgap::sl::{check_lagrange_monotonicity, critical_sigma, sl_gap, solve_sl, Parity, SlProblem};
use proptest::prelude::*;

/// Value at `s` of the solution of `y'' + sigma*s*y = 0`, `y(0) = 1`, `y'(0) = 0`, summed as a
/// power series: `a_{k+3} = -sigma a_k / ((k+3)(k+2))`.
fn airy_like_series(sigma: f64, s: f64) -> f64 {
    let mut coefficient = 1.0;
    let mut power = 1.0;
    let mut sum = 1.0;
    let s3 = s * s * s;
    let mut k = 0.0;
    loop {
        coefficient *= -sigma / ((k + 3.0) * (k + 2.0));
        power *= s3;
        let term = coefficient * power;
        sum += term;
        k += 3.0;
        if term.abs() < 1e-18 * sum.abs().max(1.0) && k > 30.0 {
            return sum;
        }
    }
}

fn series_critical_sigma(diameter: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1e6 / diameter.powi(3));
    // first zero of y(D/2) as sigma grows: y(D/2) > 0 below it
    let mut step = 1.0 / diameter.powi(3);
    while airy_like_series(step, 0.5 * diameter) > 0.0 {
        lo = step;
        step *= 1.1;
    }
    hi = hi.min(step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if airy_like_series(mid, 0.5 * diameter) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_constant_potential() {
    for d in [1.0, 2.0, 2f64.sqrt()] {
        let spectrum = solve_sl(&SlProblem::new(0.0, d).unwrap(), 2).unwrap();
        let mu0 = PI * PI / (d * d);
        assert!((spectrum.pairs[0].mu - mu0).abs() <= 1e-9 * mu0);
        assert!((spectrum.pairs[1].mu - 4.0 * mu0).abs() <= 4e-9 * mu0);
        let gap = sl_gap(&SlProblem::new(0.0, d).unwrap()).unwrap();
        assert!((gap.gap - 3.0 * mu0).abs() <= 3e-9 * mu0);
    }
}

#[test]
fn critical_sigma_matches_series_oracle() {
    let oracle = series_critical_sigma(1.0);
    let computed = critical_sigma(1.0).unwrap();
    assert!((computed - oracle).abs() <= 1e-8 * oracle, "{computed} vs {oracle}");
}

#[test]
fn critical_sigma_scales_with_cube_of_diameter() {
    let one = critical_sigma(1.0).unwrap();
    let two = critical_sigma(2.0).unwrap();
    assert!((two - one / 8.0).abs() <= 1e-8 * two);
}

#[test]
fn lowest_eigenvalue_vanishes_at_critical_sigma() {
    let sigma0 = critical_sigma(2.0).unwrap();
    let spectrum = solve_sl(&SlProblem::new(sigma0, 2.0).unwrap(), 1).unwrap();
    assert!(spectrum.pairs[0].mu.abs() < 1e-8);
    let below = solve_sl(&SlProblem::new(sigma0 * (1.0 - 1e-4), 2.0).unwrap(), 1).unwrap();
    let above = solve_sl(&SlProblem::new(sigma0 * (1.0 + 1e-4), 2.0).unwrap(), 1).unwrap();
    assert!(below.pairs[0].mu > 0.0);
    assert!(above.pairs[0].mu < 0.0);
}

#[test]
fn comparison_bracket_at_large_slope() {
    for sigma in [1e3, 1e4, 1e6] {
        let spectrum = solve_sl(&SlProblem::new(sigma, 2.0).unwrap(), 1).unwrap();
        let ratio = -spectrum.pairs[0].mu / sigma;
        let lower = 1.0 - (PI * PI + 0.5) * sigma.powf(-1.0 / 3.0);
        assert!(ratio >= lower && ratio < 1.0, "sigma {sigma}: {ratio} not in [{lower}, 1)");
    }
}

#[test]
fn gap_shrinks_with_slope() {
    let g0 = sl_gap(&SlProblem::new(0.0, 2.0).unwrap()).unwrap();
    let g3 = sl_gap(&SlProblem::new(1e3, 2.0).unwrap()).unwrap();
    let g6 = sl_gap(&SlProblem::new(1e6, 2.0).unwrap()).unwrap();
    assert!(g6.log_gap < g3.log_gap && g3.log_gap < g0.log_gap);
}

#[test]
fn eigenfunction_signs_and_boundary_values() {
    let sigma0 = critical_sigma(1.0).unwrap();
    for sigma in [0.0, sigma0, 8.0 * sigma0] {
        let spectrum = solve_sl(&SlProblem::new(sigma, 1.0).unwrap(), 4).unwrap();
        let w0 = &spectrum.pairs[0];
        let w1 = &spectrum.pairs[1];
        let n = w0.samples.len();
        assert!(w0.samples[..n - 1].iter().all(|p| p.1 > 0.0));
        assert!(w1.samples[1..n - 1].iter().all(|p| p.1 > 0.0));
        assert!(w0.derivative_samples[0].1.abs() < 1e-12);
        assert_eq!(w1.samples[0].1, 0.0);
        for pair in &spectrum.pairs {
            assert!(pair.samples[n - 1].1.abs() < 1e-9);
            assert_eq!(pair.parity, Parity::of_index(pair.index));
            assert_eq!(pair.zero_count(), pair.index);
            let max = pair.samples.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-14);
        }
        assert!(check_lagrange_monotonicity(&spectrum).unwrap() > 0.0);
    }
}

#[test]
fn discrete_residual_is_small() {
    for sigma in [0.0, 100.0, 1000.0] {
        let problem = SlProblem::new(sigma, 1.0).unwrap();
        let spectrum = solve_sl(&problem, 4).unwrap();
        for pair in &spectrum.pairs {
            let bound = 1e-6 * (1.0 + pair.mu + sigma * 0.5);
            assert!(pair.residual() <= bound, "sigma {sigma} n {}: {} > {bound}", pair.index, pair.residual());
        }
    }
}

#[test]
fn lowest_eigenvalue_decreases_along_slope_grid() {
    let mut previous = f64::INFINITY;
    for sigma in [0.0, 10.0, 50.0, 100.0, 500.0, 1e3, 1e4] {
        let mu0 = solve_sl(&SlProblem::new(sigma, 1.0).unwrap(), 1).unwrap().pairs[0].mu;
        assert!(mu0 < previous);
        previous = mu0;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordering_and_upper_bound(sigma in 0.0f64..2000.0, diameter in 0.5f64..3.0) {
        let spectrum = solve_sl(&SlProblem::with_grid(sigma, diameter, 256).unwrap(), 4).unwrap();
        // past sigma*D^3 ~ 3000 the even/odd partners split by less than the root-finding
        // floor, so only ordering up to that floor is checked and strictness rests on the Wronskian gap
        let resolvable = sigma * diameter.powi(3) < 3000.0;
        for pair in spectrum.pairs.windows(2) {
            if resolvable {
                prop_assert!(pair[0].mu < pair[1].mu);
            } else {
                prop_assert!(pair[0].mu <= pair[1].mu + 1e-12 * pair[1].mu.abs());
            }
        }
        let gap = driftgap::sl::gap_from_spectrum(&spectrum).unwrap();
        prop_assert!(gap.log_gap.is_finite());
        if sigma > 0.0 {
            prop_assert!(-spectrum.pairs[0].mu < sigma * diameter / 2.0);
        }
        for pair in &spectrum.pairs {
            prop_assert_eq!(pair.zero_count(), pair.index);
        }
    }

    #[test]
    fn scaling_covariance(sigma in 0.0f64..4000.0, diameter in 0.5f64..2.0) {
        let small = solve_sl(&SlProblem::with_grid(sigma, diameter, 256).unwrap(), 3).unwrap();
        let large = solve_sl(&SlProblem::with_grid(sigma / 8.0, 2.0 * diameter, 256).unwrap(), 3).unwrap();
        for (a, b) in small.pairs.iter().zip(&large.pairs) {
            prop_assert!((b.mu - a.mu / 4.0).abs() <= 1e-8 * a.mu.abs().max(1.0) / 4.0);
        }
    }
}
