//! Quadrature and extrapolation utilities shared by the solver layers.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Gauss–Legendre nodes and weights on `[−1, 1]`, ascending.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub–Welsch: eigen-decomposition of the Jacobi matrix of the Legendre recurrence.
    fn compute(n: usize) -> Self {
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let b = kf / (4.0 * kf * kf - 1.0).sqrt();
            jac[(k - 1, k)] = b;
            jac[(k, k - 1)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for i in 0..n / 2 {
            let (a, b) = (pairs[i], pairs[n - 1 - i]);
            let node = 0.5 * (b.0 - a.0);
            let weight = 0.5 * (a.1 + b.1);
            pairs[i] = (-node, weight);
            pairs[n - 1 - i] = (node, weight);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        GaussLegendre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Shared rule of order `n`.
    pub fn get(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
        map.entry(n).or_insert_with(|| Box::leak(Box::new(GaussLegendre::compute(n))))
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(c + r * x) * *w;
        }
        s * r
    }
}

const PANEL_ORDER: usize = 20;
const MAX_DEPTH: usize = 30;

/// Adaptive panel Gauss–Legendre for smooth integrands; accepts a panel once its
/// bisection changes the value by less than `tol·max(1, |I|)`.
pub fn adaptive<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C64> {
    let rule = GaussLegendre::get(PANEL_ORDER);
    let mut total = C64::new(0.0, 0.0);
    let whole = rule.integrate(a, b, &mut f);
    let mut stack = vec![(a, b, whole, 0usize)];
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let fine = left + right;
        if !fine.re.is_finite() || !fine.im.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let scale = (hi - lo) / (b - a);
        if (fine - coarse).norm() <= tol * scale.max(1e-3) * fine.norm().max(1.0) {
            total += fine;
        } else if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!("no convergence on [{lo}, {hi}]")));
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}

/// Neville extrapolation of `values` sampled at `points` to the origin.
///
/// Returns the diagonal of the tableau: entry `d` uses `d + 1` consecutive
/// samples ending at the last one.
pub fn neville_to_zero(points: &[f64], values: &[C64]) -> Vec<C64> {
    let n = points.len();
    let mut p = values.to_vec();
    let mut diag = vec![p[n - 1]];
    for d in 1..n {
        for i in 0..n - d {
            let (xi, xj) = (points[i], points[i + d]);
            p[i] = (p[i + 1] * xi - p[i] * xj) / (xi - xj);
        }
        diag.push(p[n - 1 - d]);
    }
    diag
}
