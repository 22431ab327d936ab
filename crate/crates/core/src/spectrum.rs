//! Finite-difference discretization of `L = Δ - B·∇ - c` and its lowest eigenvalues.
//!
//! Eigenvalues follow `L u = -λ u`, so they are the eigenvalues of `M = -A` where `A`
//! approximates `L`. Central differences are used for both the Laplacian and the drift;
//! cut cells next to curved boundaries get Shortley–Weller arms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Neighbor, NodeGrid};
use crate::operator::OperatorSpec;
use crate::sparse::{BandedLu, CsrMatrix};

/// Largest number of eigenvalues `low_spectrum` computes.
pub const MAX_EIGENVALUES: usize = 12;
/// Krylov subspace dimension per Arnoldi cycle.
pub const KRYLOV_DIMENSION: usize = 60;
/// Residual `|M v - λ v| / |v|` required for an eigenpair to be accepted.
pub const RESIDUAL_TOL: f64 = 1e-8;

const PRINCIPAL_ITERATIONS: usize = 2000;
const ARNOLDI_CYCLES: usize = 40;
const START_SEED: u64 = 0x5eed;

/// Assembled operator on a node grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub operator: OperatorSpec,
    pub h: f64,
    pub grid: NodeGrid,
    /// `(A u)_i ≈ (L u)(x_i)`.
    pub matrix: CsrMatrix,
    /// Smallest `c` over the nodes.
    pub min_potential: f64,
}

impl DiscreteOperator {
    /// `M = -A`, whose eigenvalues are the `λ` of `L u = -λ u`.
    pub fn negated(&self) -> CsrMatrix {
        let mut m = self.matrix.clone();
        m.values.iter_mut().for_each(|v| *v = -*v);
        m
    }
}

/// Assembles the operator with nominal grid step `h`.
pub fn assemble(operator: &OperatorSpec, h: f64) -> Result<DiscreteOperator> {
    let grid = NodeGrid::new(operator.domain, h)?;
    let dimension = grid.dimension();
    let peclet = grid
        .points
        .iter()
        .map(|&p| {
            let b = operator.drift.value(p);
            (0..dimension).map(|i| b[i].abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        * grid.step();
    if peclet >= 2.0 {
        return Err(Error::CellPeclet(peclet));
    }

    let mut min_potential = f64::INFINITY;
    let mut rows = Vec::with_capacity(grid.len());
    for (k, &p) in grid.points.iter().enumerate() {
        let b = operator.drift.value(p);
        let c = operator.potential.value(p);
        min_potential = min_potential.min(c);
        let mut row = Vec::with_capacity(1 + 2 * dimension);
        let mut diagonal = -c;
        for axis in 0..dimension {
            let left = grid.neighbors[k][2 * axis].expect("axis arm");
            let right = grid.neighbors[k][2 * axis + 1].expect("axis arm");
            let (hl, hr) = (left.distance(), right.distance());
            let sum = hl + hr;
            // second derivative and first derivative weights on unequal arms
            let (second_l, second_r, second_c) = (2.0 / (hl * sum), 2.0 / (hr * sum), -2.0 / (hl * hr));
            let (first_l, first_r, first_c) = (-hr / (hl * sum), hl / (hr * sum), (hr - hl) / (hl * hr));
            diagonal += second_c - b[axis] * first_c;
            if let Neighbor::Node { index, .. } = left {
                row.push((index, second_l - b[axis] * first_l));
            }
            if let Neighbor::Node { index, .. } = right {
                row.push((index, second_r - b[axis] * first_r));
            }
        }
        row.push((k, diagonal));
        rows.push(row);
    }
    Ok(DiscreteOperator { operator: operator.clone(), h, grid, matrix: CsrMatrix::from_rows(rows), min_potential })
}

/// Principal eigenvalue with its positive eigenvector (max norm one).
#[derive(Debug, Clone)]
pub struct PrincipalPair {
    pub lambda0: f64,
    pub u0: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|v| *v *= s);
}

/// Shift below every eigenvalue: `min c - 1`. With cell Peclet numbers below two, `M -
/// shift*I` is strictly diagonally dominant with positive diagonal, so banded LU without
/// pivoting is stable.
fn lower_shift(op: &DiscreteOperator) -> f64 {
    op.min_potential - 1.0
}

fn residual_real(m: &CsrMatrix, v: &[f64], lambda: f64) -> f64 {
    let mv = m.mul(v);
    let r: f64 = mv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    r / norm(v)
}

fn principal_with(op: &DiscreteOperator, m: &CsrMatrix, lu: &BandedLu, shift: f64) -> Result<PrincipalPair> {
    let n = op.grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    for attempt in 0..3 {
        let mut x: Vec<f64> = if attempt == 0 { vec![1.0; n] } else { (0..n).map(|_| rng.random::<f64>() + 0.1).collect() };
        let len = norm(&x);
        scale(&mut x, 1.0 / len);
        let mut lambda = f64::NAN;
        let mut converged = None;
        for iteration in 1..=PRINCIPAL_ITERATIONS {
            let mut y = x.clone();
            lu.solve(&mut y);
            let nu = dot(&y, &x);
            let next = shift + 1.0 / nu;
            let len = norm(&y);
            scale(&mut y, 1.0 / len);
            x = y;
            if iteration > 3 && (next - lambda).abs() <= 1e-11 * (1.0 + next.abs()) {
                lambda = next;
                converged = Some(iteration);
                break;
            }
            lambda = next;
        }
        let Some(mut iterations) = converged else {
            return Err(Error::NonConvergence { context: "principal inverse iteration".into(), iterations: PRINCIPAL_ITERATIONS });
        };
        // the eigenvalue settles before the vector does; polish until the residual stalls
        let mut residual = residual_real(m, &x, lambda);
        let mut stalled = 0;
        while residual > 0.1 * RESIDUAL_TOL && stalled < 5 && iterations < PRINCIPAL_ITERATIONS {
            let mut y = x.clone();
            lu.solve(&mut y);
            let nu = dot(&y, &x);
            let len = norm(&y);
            scale(&mut y, 1.0 / len);
            let next_lambda = shift + 1.0 / nu;
            let next = residual_real(m, &y, next_lambda);
            stalled = if next < 0.9 * residual { 0 } else { stalled + 1 };
            x = y;
            lambda = next_lambda;
            residual = next;
            iterations += 1;
        }
        // sign-normalize and scale to max one
        let peak = x.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        scale(&mut x, 1.0 / peak);
        match x.iter().position(|&v| v <= 0.0) {
            None => {
                let residual = residual_real(m, &x, lambda);
                return Ok(PrincipalPair { lambda0: lambda, u0: x, residual, iterations });
            }
            Some(node) if attempt == 2 => return Err(Error::SignInconsistency(node)),
            Some(_) => continue,
        }
    }
    unreachable!("the last attempt returns")
}

/// Principal eigenpair by inverse iteration with a shift below the spectrum.
pub fn principal_eigenpair(op: &DiscreteOperator) -> Result<PrincipalPair> {
    let m = op.negated();
    let shift = lower_shift(op);
    let lu = BandedLu::factor(&m, shift)?;
    principal_with(op, &m, &lu, shift)
}

/// Principal pair plus the next eigenvalues of smallest real part.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSpectrum {
    pub lambda0: f64,
    pub u0: Vec<f64>,
    /// Non-principal eigenvalues ordered by real part; complex ones come in conjugate pairs.
    pub others: Vec<Complex64>,
    /// `|M v - λ v| / |v|`, principal first, then one per entry of `others`.
    pub residual_norms: Vec<f64>,
    /// Conjugates that had to be added explicitly because the solver missed them.
    pub repaired_conjugates: usize,
    pub h: f64,
    #[serde(skip)]
    pub grid: Option<NodeGrid>,
}

impl DiscreteSpectrum {
    /// `min Re(λ) - λ0` over the non-principal eigenvalues.
    pub fn gap(&self) -> Result<f64> {
        self.others.iter().map(|z| z.re - self.lambda0).reduce(f64::min).ok_or(Error::GapUndefined)
    }
}

/// Real orthonormal basis kept orthogonal to by the Krylov vectors.
struct Locked {
    basis: Vec<Vec<f64>>,
}

impl Locked {
    fn orthogonalize(&self, v: &mut [f64]) {
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
    }

    fn push(&mut self, mut v: Vec<f64>) -> bool {
        let before = norm(&v);
        self.orthogonalize(&mut v);
        let after = norm(&v);
        if after <= 1e-10 * before {
            return false;
        }
        scale(&mut v, 1.0 / after);
        self.basis.push(v);
        true
    }
}

struct Candidate {
    lambda: Complex64,
    vector: Vec<Complex64>,
    residual: f64,
}

fn complex_residual(m: &CsrMatrix, x: &[Complex64], lambda: Complex64) -> f64 {
    let re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let (mr, mi) = (m.mul(&re), m.mul(&im));
    let mut r = 0.0;
    let mut len = 0.0;
    for i in 0..x.len() {
        let mx = Complex64::new(mr[i], mi[i]);
        r += (mx - lambda * x[i]).norm_sqr();
        len += x[i].norm_sqr();
    }
    (r / len).sqrt()
}

/// Eigenvectors of a small dense matrix for given eigenvalues, by complex inverse iteration.
fn small_eigenvector(h: &DMatrix<f64>, value: Complex64) -> Option<Vec<Complex64>> {
    let n = h.nrows();
    let perturbed = value + Complex64::new(1e-12, 1e-12) * value.norm().max(1e-300);
    let shifted = DMatrix::from_fn(n, n, |i, j| Complex64::new(h[(i, j)], 0.0) - if i == j { perturbed } else { Complex64::new(0.0, 0.0) });
    let lu = shifted.lu();
    let mut y = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        y = lu.solve(&y)?;
        let len = y.norm();
        if !(len.is_finite() && len > 0.0) {
            return None;
        }
        y /= Complex64::new(len, 0.0);
    }
    Some(y.iter().copied().collect())
}

/// Corrects a Ritz vector of the deflated operator into an eigenvector of `M`:
/// `x = z + Q c` with `(QᵀMQ - λ) c = -QᵀM z`.
fn correct(m: &CsrMatrix, locked: &Locked, z: &[Complex64], lambda: Complex64) -> Vec<Complex64> {
    let p = locked.basis.len();
    if p == 0 {
        return z.to_vec();
    }
    let mq: Vec<Vec<f64>> = locked.basis.iter().map(|q| m.mul(q)).collect();
    let t = DMatrix::from_fn(p, p, |i, j| Complex64::new(dot(&locked.basis[i], &mq[j]), 0.0) - if i == j { lambda } else { Complex64::new(0.0, 0.0) });
    let re: Vec<f64> = z.iter().map(|v| v.re).collect();
    let im: Vec<f64> = z.iter().map(|v| v.im).collect();
    let (mr, mi) = (m.mul(&re), m.mul(&im));
    let rhs = nalgebra::DVector::from_fn(p, |i, _| -Complex64::new(dot(&locked.basis[i], &mr), dot(&locked.basis[i], &mi)));
    let Some(c) = t.lu().solve(&rhs) else {
        return z.to_vec();
    };
    let mut x = z.to_vec();
    for (j, q) in locked.basis.iter().enumerate() {
        for (xi, qi) in x.iter_mut().zip(q) {
            *xi += c[j] * qi;
        }
    }
    x
}

/// `k` eigenvalues of smallest real part: the principal pair plus `k - 1` others.
///
/// Shift-invert Arnoldi with the same real shift as the principal solve, a real Krylov
/// basis with full reorthogonalization, and locking: converged eigenvectors (real and
/// imaginary parts) join an orthonormal basis that later Krylov vectors are kept
/// orthogonal to.
pub fn low_spectrum(op: &DiscreteOperator, k: usize) -> Result<DiscreteSpectrum> {
    if k == 0 || k > MAX_EIGENVALUES {
        return Err(Error::InvalidProblem(format!("k must lie in 1..={MAX_EIGENVALUES}, got {k}")));
    }
    let m = op.negated();
    let shift = lower_shift(op);
    let lu = BandedLu::factor(&m, shift)?;
    let principal = principal_with(op, &m, &lu, shift)?;
    let n = op.grid.len();
    let mut spectrum = DiscreteSpectrum {
        lambda0: principal.lambda0,
        u0: principal.u0.clone(),
        others: Vec::new(),
        residual_norms: vec![principal.residual],
        repaired_conjugates: 0,
        h: op.h,
        grid: Some(op.grid.clone()),
    };
    if k == 1 {
        return Ok(spectrum);
    }

    // a couple of spare eigenvalues so the k smallest real parts are not cut short
    let wanted = (k - 1 + 2).min(n.saturating_sub(1));
    let mut locked = Locked { basis: Vec::new() };
    locked.push(principal.u0.clone());
    let mut found: Vec<(Complex64, f64)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED + 1);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();

    for _cycle in 0..ARNOLDI_CYCLES {
        if found.len() >= wanted {
            break;
        }
        let dim = KRYLOV_DIMENSION.min(n - locked.basis.len());
        if dim == 0 {
            break;
        }
        locked.orthogonalize(&mut start);
        let len = norm(&start);
        if len == 0.0 {
            start = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            continue;
        }
        scale(&mut start, 1.0 / len);
        let mut basis = vec![start.clone()];
        let mut hess = DMatrix::<f64>::zeros(dim + 1, dim);
        let mut size = dim;
        for j in 0..dim {
            let mut w = basis[j].clone();
            lu.solve(&mut w);
            locked.orthogonalize(&mut w);
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    hess[(i, j)] += c;
                    w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
            }
            let beta = norm(&w);
            hess[(j + 1, j)] = beta;
            if beta <= 1e-14 * hess[(j, j)].abs().max(1.0) {
                size = j + 1;
                break;
            }
            scale(&mut w, 1.0 / beta);
            basis.push(w);
        }
        let h = hess.view((0, 0), (size, size)).into_owned();
        let mut ritz: Vec<Complex64> = h.complex_eigenvalues().iter().copied().collect();
        ritz.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());

        let mut candidates = Vec::new();
        for &nu in ritz.iter().take(wanted + 4) {
            if nu.norm() == 0.0 {
                continue;
            }
            // one representative per conjugate pair
            if nu.im < 0.0 && ritz.iter().any(|o| (o.conj() - nu).norm() <= 1e-10 * nu.norm() && o.im > 0.0) {
                continue;
            }
            let Some(y) = small_eigenvector(&h, nu) else { continue };
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            for (j, yj) in y.iter().enumerate() {
                for (zi, vi) in z.iter_mut().zip(&basis[j]) {
                    *zi += yj * vi;
                }
            }
            let lambda = Complex64::new(shift, 0.0) + nu.inv();
            let x = correct(&m, &locked, &z, lambda);
            let residual = complex_residual(&m, &x, lambda);
            candidates.push(Candidate { lambda, vector: x, residual });
        }

        let mut restart = vec![0.0; n];
        for candidate in candidates {
            if found.len() >= wanted {
                break;
            }
            if candidate.residual <= RESIDUAL_TOL {
                let lambda = candidate.lambda;
                let is_real = lambda.im.abs() <= 1e-10 * lambda.norm().max(1.0);
                if is_real {
                    if locked.push(candidate.vector.iter().map(|z| z.re).collect()) {
                        found.push((Complex64::new(lambda.re, 0.0), candidate.residual));
                    }
                } else {
                    let re_ok = locked.push(candidate.vector.iter().map(|z| z.re).collect());
                    let im_ok = locked.push(candidate.vector.iter().map(|z| z.im).collect());
                    if re_ok && im_ok {
                        found.push((lambda, candidate.residual));
                        found.push((lambda.conj(), candidate.residual));
                    }
                }
            } else {
                for (r, z) in restart.iter_mut().zip(&candidate.vector) {
                    *r += z.re + z.im;
                }
            }
        }
        start = if norm(&restart) > 0.0 { restart } else { (0..n).map(|_| rng.random::<f64>() - 0.5).collect() };
    }

    if found.is_empty() {
        return Err(Error::NonConvergence { context: "shift-invert Arnoldi".into(), iterations: ARNOLDI_CYCLES });
    }
    // conjugate-pair closure
    let mut repaired = 0;
    let snapshot = found.clone();
    for &(lambda, residual) in &snapshot {
        if lambda.im != 0.0 && !snapshot.iter().any(|(o, _)| (*o - lambda.conj()).norm() <= 1e-9 * lambda.norm()) {
            found.push((lambda.conj(), residual));
            repaired += 1;
        }
    }
    found.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap().then(a.0.im.partial_cmp(&b.0.im).unwrap()));
    // keep k - 1, extending to finish a conjugate pair at the cut
    let mut keep = (k - 1).min(found.len());
    if keep > 0 && keep < found.len() {
        let last = found[keep - 1].0;
        if last.im != 0.0 && (found[keep].0 - last.conj()).norm() <= 1e-9 * last.norm() {
            keep += 1;
        }
    }
    found.truncate(keep);
    spectrum.others = found.iter().map(|f| f.0).collect();
    spectrum.residual_norms.extend(found.iter().map(|f| f.1));
    spectrum.repaired_conjugates = repaired;
    Ok(spectrum)
}
