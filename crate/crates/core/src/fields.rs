//! Built-in coefficient fields with closed-form derivatives.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Step for differencing closed-form Jacobians into second derivatives.
const JACOBIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFieldSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `1/2 (x-c)^T H (x-c) + g.(x-c) + k`.
    Quadratic {
        hessian: [[f64; 2]; 2],
        #[serde(default)]
        linear: [f64; 2],
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl ScalarFieldSpec {
    /// `a |x - center|^2`.
    pub fn radial_quadratic(a: f64, center: Point) -> Self {
        ScalarFieldSpec::Quadratic { hessian: [[2.0 * a, 0.0], [0.0, 2.0 * a]], linear: [0.0; 2], constant: 0.0, center }
    }

    pub fn value(&self, p: Point) -> f64 {
        match *self {
            ScalarFieldSpec::Zero => 0.0,
            ScalarFieldSpec::Constant { value } => value,
            ScalarFieldSpec::Quadratic { hessian, linear, constant, center } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                let quad = d[0] * (hessian[0][0] * d[0] + hessian[0][1] * d[1]) + d[1] * (hessian[1][0] * d[0] + hessian[1][1] * d[1]);
                0.5 * quad + linear[0] * d[0] + linear[1] * d[1] + constant
            }
        }
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        match *self {
            ScalarFieldSpec::Zero | ScalarFieldSpec::Constant { .. } => [0.0; 2],
            ScalarFieldSpec::Quadratic { hessian, linear, center, .. } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                // symmetric part of H
                let s01 = 0.5 * (hessian[0][1] + hessian[1][0]);
                [hessian[0][0] * d[0] + s01 * d[1] + linear[0], s01 * d[0] + hessian[1][1] * d[1] + linear[1]]
            }
        }
    }

    pub fn hessian(&self, _p: Point) -> [[f64; 2]; 2] {
        match *self {
            ScalarFieldSpec::Zero | ScalarFieldSpec::Constant { .. } => [[0.0; 2]; 2],
            ScalarFieldSpec::Quadratic { hessian, .. } => {
                let s01 = 0.5 * (hessian[0][1] + hessian[1][0]);
                [[hessian[0][0], s01], [s01, hessian[1][1]]]
            }
        }
    }

    /// Laplacian over the first `dimension` coordinates.
    pub fn laplacian(&self, p: Point, dimension: usize) -> f64 {
        let h = self.hessian(p);
        (0..dimension).map(|i| h[i][i]).sum()
    }

    /// Whether the field is nonnegative at every sample point.
    pub fn is_nonnegative_on(&self, points: &[Point]) -> bool {
        points.iter().all(|&p| self.value(p) >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorFieldSpec {
    Zero,
    Constant {
        value: [f64; 2],
    },
    /// `B = grad(potential)`.
    Gradient {
        potential: ScalarFieldSpec,
    },
    /// `B = omega (-(y - cy), x - cx)`.
    Rotational {
        omega: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Rotation damped by `(1 - r^2/cutoff^2)^3` inside `r < cutoff`, zero outside.
    CutoffRotational {
        omega: f64,
        cutoff: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl VectorFieldSpec {
    pub fn value(&self, p: Point) -> [f64; 2] {
        match *self {
            VectorFieldSpec::Zero => [0.0; 2],
            VectorFieldSpec::Constant { value } => value,
            VectorFieldSpec::Gradient { potential } => potential.gradient(p),
            VectorFieldSpec::Rotational { omega, center } => {
                let (x, y) = (p[0] - center[0], p[1] - center[1]);
                [-omega * y, omega * x]
            }
            VectorFieldSpec::CutoffRotational { omega, cutoff, center } => {
                let (x, y) = (p[0] - center[0], p[1] - center[1]);
                let f = cutoff_profile(x * x + y * y, cutoff).0;
                [-omega * f * y, omega * f * x]
            }
        }
    }

    /// `J[i][j] = d b^i / d x_j`.
    pub fn jacobian(&self, p: Point) -> [[f64; 2]; 2] {
        match *self {
            VectorFieldSpec::Zero | VectorFieldSpec::Constant { .. } => [[0.0; 2]; 2],
            VectorFieldSpec::Gradient { potential } => potential.hessian(p),
            VectorFieldSpec::Rotational { omega, .. } => [[0.0, -omega], [omega, 0.0]],
            VectorFieldSpec::CutoffRotational { omega, cutoff, center } => {
                let (x, y) = (p[0] - center[0], p[1] - center[1]);
                let (f, df_dr2) = cutoff_profile(x * x + y * y, cutoff);
                // d f / d x = 2x f', d f / d y = 2y f' with f' taken in r^2
                let (fx, fy) = (2.0 * x * df_dr2, 2.0 * y * df_dr2);
                [[-omega * fx * y, -omega * (fy * y + f)], [omega * (fx * x + f), omega * fy * x]]
            }
        }
    }

    /// `Delta b^j` for each component, over the first `dimension` coordinates.
    pub fn laplacian(&self, p: Point, dimension: usize) -> [f64; 2] {
        match self {
            VectorFieldSpec::Zero | VectorFieldSpec::Constant { .. } | VectorFieldSpec::Rotational { .. } => [0.0; 2],
            // quadratic potentials have constant Hessians
            VectorFieldSpec::Gradient { .. } => [0.0; 2],
            VectorFieldSpec::CutoffRotational { .. } => {
                let mut out = [0.0; 2];
                for k in 0..dimension {
                    let mut plus = p;
                    let mut minus = p;
                    plus[k] += JACOBIAN_STEP;
                    minus[k] -= JACOBIAN_STEP;
                    let (jp, jm) = (self.jacobian(plus), self.jacobian(minus));
                    for (j, slot) in out.iter_mut().enumerate() {
                        *slot += (jp[j][k] - jm[j][k]) / (2.0 * JACOBIAN_STEP);
                    }
                }
                out
            }
        }
    }

    /// Whether the field is a gradient by construction.
    pub fn is_gradient(&self) -> bool {
        matches!(self, VectorFieldSpec::Zero | VectorFieldSpec::Constant { .. } | VectorFieldSpec::Gradient { .. })
    }

    /// Potential `phi` with `B = grad(phi)`, when the field is a gradient by construction.
    pub fn potential(&self) -> Option<ScalarFieldSpec> {
        match *self {
            VectorFieldSpec::Zero => Some(ScalarFieldSpec::Zero),
            VectorFieldSpec::Constant { value } => Some(ScalarFieldSpec::Quadratic { hessian: [[0.0; 2]; 2], linear: value, constant: 0.0, center: [0.0; 2] }),
            VectorFieldSpec::Gradient { potential } => Some(potential),
            _ => None,
        }
    }

    /// `U^{ij} = d_j b^i - d_i b^j`.
    pub fn curl_matrix(&self, p: Point, dimension: usize) -> [[f64; 2]; 2] {
        if dimension == 1 {
            return [[0.0; 2]; 2];
        }
        let j = self.jacobian(p);
        let u01 = j[0][1] - j[1][0];
        [[0.0, u01], [-u01, 0.0]]
    }

    pub fn max_norm_on(&self, points: &[Point]) -> f64 {
        points
            .iter()
            .map(|&p| {
                let b = self.value(p);
                b[0].hypot(b[1])
            })
            .fold(0.0, f64::max)
    }
}

/// `(f, df/d(r^2))` for `f = (1 - r^2/R^2)^3` inside the cutoff radius, zero outside.
fn cutoff_profile(r2: f64, cutoff: f64) -> (f64, f64) {
    let t = 1.0 - r2 / (cutoff * cutoff);
    if t <= 0.0 {
        (0.0, 0.0)
    } else {
        (t * t * t, -3.0 * t * t / (cutoff * cutoff))
    }
}
