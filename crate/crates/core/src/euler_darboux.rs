//! Collinear case: `E = e^{−V}` with `V` solving the Euler–Darboux equation
//! `V_xy − (V_x + V_y)/(2(1−x−y)) = 0`.
//!
//! Two independent routes are provided: the scalar RH problem on the shared
//! contour system, and the explicit Abel-type double integrals on the real axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_data::{BoundaryDatum, DatumKind};
use crate::error::{Error, Result};
use crate::geometry::{check_domain, ContourSystem, SphereEdges};
use crate::quad;
use crate::rh_solver::{GoursatData, GridConfig};

type C64 = Complex64;

/// Tolerance of the per-node eigenfunction quadratures.
const JUMP_TOL: f64 = 1e-13;
/// Self-consistency target of each Abel layer.
const ABEL_TOL: f64 = 1e-11;
/// Largest imaginary part tolerated in the contour route.
pub const IMAGINARY_TOL: f64 = 1e-10;

fn check_linear(data: &GoursatData) -> Result<()> {
    for d in [&data.x, &data.y] {
        if d.kind != DatumKind::Linear {
            return Err(Error::Config("Euler–Darboux routes need linear data".into()));
        }
        if d.value(0.0).norm() > 1e-12 {
            return Err(Error::Config(format!(
                "linear data must vanish at the corner, got {}",
                d.value(0.0)
            )));
        }
    }
    Ok(())
}

/// Scalar jump at a node: `∫₀ˣ λ(x′,0,·)V₀ₓ dx′` on `Γ₀` (`Re z < 0`) and
/// `∫₀ʸ V₁ᵧ/λ(0,y′,·) dy′` on `Γ₁`.
pub fn scalar_jump(x: f64, y: f64, z: C64, data: &GoursatData) -> Result<C64> {
    let edges = SphereEdges::new(x, y)?;
    if z.re < 0.0 {
        let num = edges.x_numerator(z);
        data.x.integrate_weighted(x, JUMP_TOL, |s, r| r * num / edges.x_denominator(s, z))
    } else {
        let num = edges.y_numerator(z);
        data.y.integrate_weighted(y, JUMP_TOL, |s, r| r * num / edges.y_denominator(s, z))
    }
}

/// `V = −(1/4πi)∮_Γ v(z)/z dz` by the trapezoid rule on the contour nodes.
pub fn solve_linear_point(x: f64, y: f64, data: &GoursatData, contours: &ContourSystem) -> Result<f64> {
    check_linear(data)?;
    check_domain(x, y)?;
    if !contours.admits(x, y) {
        return Err(Error::OutsideDomain { x, y });
    }
    let mut acc = C64::new(0.0, 0.0);
    for l in &contours.loops {
        for (&z, &dz) in l.nodes.iter().zip(&l.tangents) {
            acc += scalar_jump(x, y, z, data)? * dz / z;
        }
    }
    let v = -acc * contours.loops[0].weight / C64::new(0.0, 4.0 * PI);
    if v.im.abs() > IMAGINARY_TOL * v.re.abs().max(1.0) {
        return Err(Error::Check(format!("imaginary residual {} at ({x}, {y})", v.im)));
    }
    Ok(v.re)
}

/// `I(k) = ∫₀ᵏ f′(s)/√(k − s) ds` with `τ = τ_k(1 − ω²)`, which removes both endpoint singularities.
fn inner_abel(datum: &BoundaryDatum, k: f64) -> Result<f64> {
    if k <= 0.0 {
        return Ok(0.0);
    }
    let p = 1.0 / (1.0 - datum.alpha);
    let tau_k = datum.tau_of(k);
    let v = quad::adaptive(
        |w| {
            if w == 0.0 {
                return datum.regular_part(k) * (p * 2.0 * tau_k / (p * k).sqrt());
            }
            let ln1 = (-w * w).ln_1p();
            let s = k * (p * ln1).exp();
            let gap = -(p * ln1).exp_m1();
            datum.regular_part(s) * (p * 2.0 * tau_k * w / (k * gap).sqrt())
        },
        0.0,
        1.0,
        ABEL_TOL,
    )?;
    Ok(v.re)
}

/// `(1/π)∫₀ˣ √(1−k)/√((1−y−k)(x−k)) I(k) dk` with `k = x sin²φ`.
fn outer_abel(datum: &BoundaryDatum, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let v = quad::adaptive(
        |phi| {
            let sn = phi.sin();
            let k = x * sn * sn;
            let inner = match inner_abel(datum, k) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            };
            C64::new(((1.0 - k) / (1.0 - y - k)).sqrt() * inner * 2.0 * x.sqrt() * sn / PI, 0.0)
        },
        0.0,
        0.5 * PI,
        ABEL_TOL,
    )
    .map_err(|e| Error::Quadrature(format!("Abel layer at ({x}, {y}): {e}")))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v.re),
    }
}

/// Explicit Abel-type representation of `V(x, y)`.
pub fn abel_solution(x: f64, y: f64, data: &GoursatData) -> Result<f64> {
    check_linear(data)?;
    check_domain(x, y)?;
    Ok(outer_abel(&data.x, x, y)? + outer_abel(&data.y, y, x)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearRoute {
    Abel,
    ScalarRh,
}

/// `V` on a grid; `values[j * nx + i]` belongs to `(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearField {
    pub route: LinearRoute,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub failures: Vec<(f64, f64, String)>,
}

pub fn solve_linear_grid(route: LinearRoute, config: &GridConfig, data: &GoursatData, contours: &ContourSystem) -> LinearField {
    let (xs, ys) = (config.xs(), config.ys());
    let nx = xs.len();
    let results: Vec<Option<Result<f64>>> = (0..nx * ys.len())
        .into_par_iter()
        .map(|k| {
            let (x, y) = (xs[k % nx], ys[k / nx]);
            contours.admits(x, y).then(|| match route {
                LinearRoute::Abel => abel_solution(x, y, data),
                LinearRoute::ScalarRh => solve_linear_point(x, y, data, contours),
            })
        })
        .collect();
    let mut failures = Vec::new();
    let values = results
        .into_iter()
        .enumerate()
        .map(|(k, r)| match r {
            None => None,
            Some(Ok(v)) => Some(v),
            Some(Err(e)) => {
                failures.push((xs[k % nx], ys[k / nx], e.to_string()));
                None
            }
        })
        .collect();
    LinearField {
        route,
        xs,
        ys,
        values,
        failures,
    }
}
