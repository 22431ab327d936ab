//! Named operators used by the test suites and the command-line experiments.

use crate::fields::{ScalarFieldSpec, VectorFieldSpec};
use crate::geometry::DomainSpec;
use crate::operator::OperatorSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedOperator {
    pub name: &'static str,
    pub operator: OperatorSpec,
    /// Grid spacing the operator is normally solved at.
    pub h: f64,
}

fn named(name: &'static str, operator: OperatorSpec, h: f64) -> NamedOperator {
    NamedOperator { name, operator, h }
}

pub fn shipped_operators() -> Vec<NamedOperator> {
    let interval = DomainSpec::Interval { length: 1.0 };
    let disk = DomainSpec::Disk { radius: 1.0 };
    vec![
        named("interval", OperatorSpec::new(interval, VectorFieldSpec::Zero, ScalarFieldSpec::Zero), 1.0 / 256.0),
        named("constant-drift", OperatorSpec::new(interval, VectorFieldSpec::Constant { value: [2.0, 0.0] }, ScalarFieldSpec::Zero), 1.0 / 256.0),
        named("square", OperatorSpec::new(DomainSpec::Rectangle { width: 1.0, height: 1.0 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero), 1.0 / 128.0),
        named("disk", OperatorSpec::new(disk, VectorFieldSpec::Zero, ScalarFieldSpec::Zero), 1.0 / 64.0),
        named("ellipse", OperatorSpec::new(DomainSpec::Ellipse { semi_x: 1.0, semi_y: 0.6 }, VectorFieldSpec::Zero, ScalarFieldSpec::Zero), 1.0 / 64.0),
        named("phi-laplacian", phi_laplacian(), 1.0 / 64.0),
        named("rotating-disk", OperatorSpec::new(disk, VectorFieldSpec::Rotational { omega: 2.0, center: [0.0; 2] }, ScalarFieldSpec::Zero), 1.0 / 64.0),
        named(
            "cutoff-disk",
            OperatorSpec::new(disk, VectorFieldSpec::CutoffRotational { omega: 2.0, cutoff: 0.8, center: [0.0; 2] }, ScalarFieldSpec::Zero),
            1.0 / 64.0,
        ),
    ]
}

/// `Δu - ∇phi·∇u - c u` on the unit disk with `phi = |x|^2 / 2` and `c = |x|^2`.
pub fn phi_laplacian() -> OperatorSpec {
    OperatorSpec::weighted_laplacian(
        DomainSpec::Disk { radius: 1.0 },
        ScalarFieldSpec::radial_quadratic(0.5, [0.0; 2]),
        ScalarFieldSpec::radial_quadratic(1.0, [0.0; 2]),
    )
}

pub fn by_name(name: &str) -> Option<NamedOperator> {
    shipped_operators().into_iter().find(|n| n.name == name)
}
