use std::f64::consts::PI;

use driftgap::fields::{ScalarFieldSpec, VectorFieldSpec};
use driftgap::geometry::DomainSpec;
use driftgap::{assemble, certify, general_bound, low_spectrum, soundness_report, Branch, CertifyOptions, DiscreteSpectrum, Error, OperatorSpec};

fn spectra(op: &OperatorSpec, h: f64) -> (DiscreteSpectrum, DiscreteSpectrum) {
    let fine = low_spectrum(&assemble(op, h).unwrap(), 3).unwrap();
    let coarse = low_spectrum(&assemble(op, 2.0 * h).unwrap(), 3).unwrap();
    (fine, coarse)
}

#[test]
fn interval_is_sharp() {
    let op = OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero);
    let (fine, coarse) = spectra(&op, 1.0 / 256.0);
    let cert = certify(&op, &fine, CertifyOptions::default()).unwrap();
    assert_eq!(cert.branch, Branch::Convex);
    assert!((cert.alpha - 3.0 * PI * PI).abs() < 1e-12);
    assert!(cert.rigorous);
    assert!(cert.limiting_domain);
    let report = soundness_report(&cert, &fine, &coarse).unwrap();
    assert!(report.pass);
    assert!(report.slack.abs() <= report.tol_h, "{report:?}");
}

#[test]
fn square_holds_with_factor_two() {
    let op = OperatorSpec::new(DomainSpec::Rectangle { width: 1.0, height: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero);
    let (fine, coarse) = spectra(&op, 1.0 / 128.0);
    let cert = certify(&op, &fine, CertifyOptions::default()).unwrap();
    assert_eq!(cert.branch, Branch::Convex);
    assert!((cert.alpha - 1.5 * PI * PI).abs() < 1e-12);
    let report = soundness_report(&cert, &fine, &coarse).unwrap();
    assert!(report.pass);
    assert!((report.actual_gap / cert.alpha - 2.0).abs() < 0.01);
}

#[test]
fn constant_drift_takes_convex_branch() {
    let op = OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Constant { value: [2.0, 0.0] }, ScalarFieldSpec::Zero);
    let (fine, coarse) = spectra(&op, 1.0 / 256.0);
    let cert = certify(&op, &fine, CertifyOptions::default()).unwrap();
    assert_eq!(cert.branch, Branch::Convex);
    let report = soundness_report(&cert, &fine, &coarse).unwrap();
    assert!(report.pass && report.slack.abs() <= report.tol_h, "{report:?}");
}

#[test]
fn weighted_laplacian_with_convex_potential() {
    let op = OperatorSpec::weighted_laplacian(
        DomainSpec::Disk { radius: 1.0 },
        ScalarFieldSpec::radial_quadratic(0.5, [0.0; 2]),
        ScalarFieldSpec::radial_quadratic(1.0, [0.0; 2]),
    );
    let (fine, coarse) = spectra(&op, 1.0 / 64.0);
    assert!(fine.others.iter().all(|z| z.im == 0.0));
    let cert = certify(&op, &fine, CertifyOptions::default()).unwrap();
    assert_eq!(cert.branch, Branch::Convex);
    assert!((cert.alpha - 0.75 * PI * PI).abs() < 1e-12);
    assert!(soundness_report(&cert, &fine, &coarse).unwrap().pass);
}

#[test]
fn cutoff_rotation_takes_general_branch() {
    let op = OperatorSpec::new(
        DomainSpec::Disk { radius: 1.0 },
        VectorFieldSpec::CutoffRotational { omega: 2.0, cutoff: 0.8, center: [0.0; 2] },
        ScalarFieldSpec::Zero,
    );
    let (fine, coarse) = spectra(&op, 1.0 / 64.0);
    let cert = certify(&op, &fine, CertifyOptions::default()).unwrap();
    assert_eq!(cert.branch, Branch::General);
    assert!(!cert.rigorous);
    assert!(cert.lambda > 0.0);
    assert!(cert.sigma >= cert.sigma2 && cert.sigma >= 8.0 * cert.lambda_tilde);
    assert!(cert.alpha > cert.quarter_bound);
    assert!((cert.alpha - cert.eta * cert.eta * (cert.mu1 - cert.mu0)).abs() <= 1e-9 * cert.alpha);
    let report = soundness_report(&cert, &fine, &coarse).unwrap();
    assert!(report.pass && report.slack > 0.0, "{report:?}");
    assert!(cert.to_json().contains("\"basis\""));
    assert!(cert.to_text().contains("general branch"));
}

#[test]
fn certificates_are_deterministic() {
    let op = OperatorSpec::new(
        DomainSpec::Disk { radius: 1.0 },
        VectorFieldSpec::CutoffRotational { omega: 1.0, cutoff: 0.8, center: [0.0; 2] },
        ScalarFieldSpec::Zero,
    );
    let spectrum = low_spectrum(&assemble(&op, 1.0 / 32.0).unwrap(), 2).unwrap();
    let a = certify(&op, &spectrum, CertifyOptions { pairs: 10_000, seed: 5 }).unwrap();
    let b = certify(&op, &spectrum, CertifyOptions { pairs: 10_000, seed: 5 }).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn negative_potential_is_rejected() {
    let op = OperatorSpec::new(DomainSpec::Interval { length: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Constant { value: -1.0 });
    let spectrum = low_spectrum(&assemble(&op, 1.0 / 64.0).unwrap(), 2).unwrap();
    assert!(matches!(certify(&op, &spectrum, CertifyOptions::default()), Err(Error::HypothesisViolation(_))));
}

#[test]
fn bound_never_grows_with_lambda_tilde() {
    let mut previous = f64::INFINITY;
    for lambda_tilde in [0.5, 5.0, 20.0, 80.0, 320.0] {
        let bound = general_bound(lambda_tilde, 1.0).unwrap();
        assert!(bound.alpha <= previous, "{lambda_tilde}: {}", bound.alpha);
        assert!(bound.alpha > 0.25 * bound.gap);
        previous = bound.alpha;
    }
}
