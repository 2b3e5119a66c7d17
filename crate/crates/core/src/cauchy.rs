//! Discrete Cauchy transform on the contour system and the `C_w` operator.
//!
//! Boundary values from the enclosed side use singularity subtraction:
//! `C₋f(z_j) = (1/2πi)∮ (f(s) − f(z_j))/(s − z_j) ds − f(z_j)`, where the
//! regularized integrand is periodic and analytic in the loop parameter and its
//! value at `s = z_j` comes from the trigonometric derivative of the node values.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ClosedLoop, ContourSystem};
use crate::volterra::Mat2;

type C64 = Complex64;

/// Per-node 2×2 values on all nodes, `Γ₀` first.
pub type Density = Vec<Mat2>;

/// Condition estimates above this are reported as a singular system.
pub const SINGULAR_CONDITION: f64 = 1e13;

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// Entry `(j, k)` of the trigonometric differentiation matrix on `n` equispaced nodes.
fn trig_derivative(j: usize, k: usize, n: usize) -> f64 {
    if j == k {
        return 0.0;
    }
    let d = j as isize - k as isize;
    let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    0.5 * sign / (d as f64 * PI / n as f64).tan()
}

/// Row-major matrix of `C₋` acting on scalar node values.
pub(crate) fn minus_matrix(loops: &[ClosedLoop; 2]) -> Vec<C64> {
    let nt = loops[0].len() + loops[1].len();
    let mut k = vec![C64::new(0.0, 0.0); nt * nt];
    let offsets = [0, loops[0].len()];
    for (lj, lt) in loops.iter().enumerate() {
        let n = lt.len();
        for j in 0..n {
            let row = offsets[lj] + j;
            let zj = lt.nodes[j];
            let mut diag = C64::new(-1.0, 0.0);
            for (ls, src) in loops.iter().enumerate() {
                let c = src.weight / two_pi_i();
                for (i, (&s, &ds)) in src.nodes.iter().zip(&src.tangents).enumerate() {
                    let col = offsets[ls] + i;
                    if ls == lj && i == j {
                        continue;
                    }
                    let kernel = c * ds / (s - zj);
                    if ls == lj {
                        k[row * nt + col] = kernel + c * trig_derivative(j, i, n);
                        diag -= kernel;
                    } else {
                        k[row * nt + col] = kernel;
                    }
                }
            }
            k[row * nt + row] = diag;
        }
    }
    k
}

/// Norm of `C₋` in the arc-length weighted ℓ² norm, by power iteration.
pub(crate) fn weighted_norm(k: &[C64], loops: &[ClosedLoop; 2]) -> f64 {
    let weights: Vec<f64> = loops
        .iter()
        .flat_map(|l| l.tangents.iter().map(move |t| (t.norm() * l.weight).sqrt()))
        .collect();
    let nt = weights.len();
    let b = DMatrix::from_fn(nt, nt, |r, c| k[r * nt + c] * (weights[r] / weights[c]));
    let bh = b.adjoint();
    let mut v = DVector::from_element(nt, C64::new(1.0, 0.0));
    let mut sigma = 0.0;
    for _ in 0..200 {
        let u = &bh * (&b * &v);
        let norm = u.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = u / C64::new(norm, 0.0);
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// `(1/2πi)∮ h(s)/(s − z) ds` by the trapezoid rule, for `z` away from `Γ`.
pub fn cauchy_eval(density: &[Mat2], contours: &ContourSystem, z: C64) -> Result<Mat2> {
    assert_eq!(density.len(), contours.total_nodes(), "density does not match the contour nodes");
    if contours.relative_distance(z) < 1.0 {
        return Err(Error::NearContour(z));
    }
    let mut acc = Mat2::zeros();
    let mut idx = 0;
    for l in &contours.loops {
        for (&s, &ds) in l.nodes.iter().zip(&l.tangents) {
            acc += density[idx] * (ds / (s - z));
            idx += 1;
        }
        acc *= C64::new(1.0, 0.0);
    }
    let c = contours.loops[0].weight / two_pi_i();
    Ok(acc * c)
}

/// Enclosed-side boundary values `C₋h` at every node.
pub fn cauchy_minus(density: &[Mat2], contours: &ContourSystem) -> Density {
    let nt = contours.total_nodes();
    assert_eq!(density.len(), nt, "density does not match the contour nodes");
    let k = &contours.minus;
    (0..nt)
        .map(|j| {
            let row = &k[j * nt..(j + 1) * nt];
            row.iter().zip(density).fold(Mat2::zeros(), |acc, (c, d)| acc + d * *c)
        })
        .collect()
}

/// `C₊h = C₋h + h`.
pub fn cauchy_plus(density: &[Mat2], contours: &ContourSystem) -> Density {
    cauchy_minus(density, contours)
        .into_iter()
        .zip(density)
        .map(|(m, d)| m + d)
        .collect()
}

/// The operator `f ↦ C₋(f·w)` on row-vector fields, with `f` stored as
/// `X[2k + a] = f_{k,a}`.
#[derive(Clone, Debug)]
pub struct CwOperator {
    pub matrix: DMatrix<C64>,
    /// `max_j ‖w(z_j)‖₂`.
    pub w_norm_inf: f64,
    /// `‖C₋‖_disc·‖w‖_∞`, the discrete stand-in for the small-norm bound.
    pub norm_bound: f64,
}

/// Result of the factorized solve of `(I − C_w)μ = I`.
#[derive(Clone, Debug)]
pub struct MuSolve {
    pub mu: Density,
    /// 1-norm condition estimate of `I − C_w`.
    pub condition: f64,
    /// Relative residual of the factorized solve.
    pub residual: f64,
}

fn spectral_norm2(m: &Mat2) -> f64 {
    let a = m.map(|c| c.norm_sqr()).sum();
    let det = m.determinant().norm();
    let disc = (a * a - 4.0 * det * det).max(0.0).sqrt();
    ((a + disc) / 2.0).sqrt()
}

pub fn build_cw(w: &[Mat2], contours: &ContourSystem) -> CwOperator {
    let nt = contours.total_nodes();
    assert_eq!(w.len(), nt, "jump does not match the contour nodes");
    let k = &contours.minus;
    let mut matrix = DMatrix::<C64>::zeros(2 * nt, 2 * nt);
    for kk in 0..nt {
        let wk = w[kk];
        for j in 0..nt {
            let kjk = k[j * nt + kk];
            for a in 0..2 {
                for c in 0..2 {
                    matrix[(2 * j + c, 2 * kk + a)] = kjk * wk[(a, c)];
                }
            }
        }
    }
    let w_norm_inf = w.iter().map(spectral_norm2).fold(0.0, f64::max);
    CwOperator {
        matrix,
        w_norm_inf,
        norm_bound: contours.minus_norm() * w_norm_inf,
    }
}

impl CwOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `C_w f` for a 2×2 density, row by row.
    pub fn apply(&self, f: &[Mat2]) -> Density {
        let nt = self.dim() / 2;
        let mut out = vec![Mat2::zeros(); nt];
        for r in 0..2 {
            let x = DVector::from_fn(2 * nt, |i, _| f[i / 2][(r, i % 2)]);
            let y = &self.matrix * x;
            for (j, o) in out.iter_mut().enumerate() {
                o[(r, 0)] = y[2 * j];
                o[(r, 1)] = y[2 * j + 1];
            }
        }
        out
    }

    pub fn small_norm_certificate(&self) -> bool {
        self.norm_bound < 1.0
    }

    /// Solves `(I − C_w)μ = I` for both rows of `μ`.
    pub fn solve_identity(&self) -> Result<MuSolve> {
        let n = self.dim();
        let nt = n / 2;
        let a = DMatrix::<C64>::identity(n, n) - &self.matrix;
        let rhs = DMatrix::from_fn(n, 2, |i, r| if i % 2 == r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let norm1 = (0..n)
            .map(|c| a.column(c).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = a.clone().lu();
        let sol = lu.solve(&rhs).ok_or(Error::SingularSystem(f64::INFINITY))?;
        let condition = norm1 * inverse_norm1_estimate(&lu, n);
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::SingularSystem(condition));
        }
        let resid = (&a * &sol - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = sol.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut mu = vec![Mat2::zeros(); nt];
        for (j, m) in mu.iter_mut().enumerate() {
            for r in 0..2 {
                m[(r, 0)] = sol[(2 * j, r)];
                m[(r, 1)] = sol[(2 * j + 1, r)];
            }
        }
        Ok(MuSolve {
            mu,
            condition,
            residual: resid / scale,
        })
    }
}

type Lu = nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>;

/// Hager–Higham estimate of `‖A⁻¹‖₁` from an LU factorization `PA = LU`.
fn inverse_norm1_estimate(lu: &Lu, n: usize) -> f64 {
    let l = lu.l();
    let u = lu.u();
    let solve = |b: &DVector<C64>| lu.solve(b);
    let solve_adj = |b: &DVector<C64>| -> Option<DVector<C64>> {
        let y = u.ad_solve_upper_triangular(b)?;
        let mut x = l.ad_solve_lower_triangular(&y)?;
        lu.p().inv_permute_rows(&mut x);
        Some(x)
    };
    let one_norm = |v: &DVector<C64>| v.iter().map(|c| c.norm()).sum::<f64>();
    let mut x = DVector::from_element(n, C64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let Some(y) = solve(&x) else { return f64::INFINITY };
        est = one_norm(&y);
        let xi = y.map(|c| if c.norm() == 0.0 { C64::new(1.0, 0.0) } else { c / c.norm() });
        let Some(z) = solve_adj(&xi) else { return f64::INFINITY };
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let ztx = z.dotc(&x).re;
        if iter > 0 && (zmax <= ztx || j == last_j) {
            break;
        }
        last_j = j;
        x = DVector::from_element(n, C64::new(0.0, 0.0));
        x[j] = C64::new(1.0, 0.0);
    }
    let alt = DVector::from_fn(n, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
    });
    if let Some(y) = solve(&alt) {
        est = est.max(2.0 * one_norm(&y) / (3.0 * n as f64));
    }
    est
}
