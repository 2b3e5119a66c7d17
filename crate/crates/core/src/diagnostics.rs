//! Boundary-limit checks, gravitational-wave admissibility, finite-difference
//! residuals of the Ernst equation and small-norm reporting.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_data::{corner_data, BoundaryDatum, DatumKind};
use crate::cauchy::build_cw;
use crate::error::{Error, Result};
use crate::geometry::ContourSystem;
use crate::quad;
use crate::rh_solver::{ErnstField, GoursatData, JumpField};

type C64 = Complex64;

/// Which edge the limit approaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    /// `x ↓ 0` at fixed `y`: the limit of `x^α E_x`.
    X0,
    /// `y ↓ 0` at fixed `x`: the limit of `y^α E_y`.
    Y0,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimitReport {
    pub edge: Edge,
    pub coordinate: f64,
    pub predicted: C64,
    pub extrapolated: C64,
    pub abs_error: f64,
    /// Size of the last Neville correction.
    pub spread: f64,
    pub reliable: bool,
    /// `α = 0`, where the limit theorem makes no statement.
    pub outside_theorem: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: C64,
    pub outside_theorem: bool,
}

/// Predicted `lim x^α E_x` on the edge `x = 0` (or its mirror), from the data alone.
///
/// Ernst data: `m₁·exp(i∫₀^y Im E₁ᵧ/Re E₁)·Re E₁(y)/√(1−y)`. Linear data: `m₁/√(1−y)`.
pub fn predicted_boundary_limit(edge: Edge, coordinate: f64, data: &GoursatData) -> Result<Prediction> {
    let (near, far) = match edge {
        Edge::X0 => (&data.x, &data.y),
        Edge::Y0 => (&data.y, &data.x),
    };
    if !(0.0..1.0).contains(&coordinate) {
        return Err(Error::Config(format!("coordinate {coordinate} must lie in [0, 1)")));
    }
    let corner = corner_data(near)?;
    let root = (1.0 - coordinate).sqrt();
    let value = match near.kind {
        DatumKind::Linear => corner.m / root,
        DatumKind::Ernst => {
            let phase = far.integrate_against(coordinate, 1e-13, |r, v| C64::new(r.im / v.re, 0.0))?;
            corner.m * C64::new(0.0, phase.re).exp() * far.value(coordinate).re / root
        }
    };
    Ok(Prediction {
        value,
        outside_theorem: corner.outside_theorem,
    })
}

/// Number of geometric levels used by the extrapolation.
pub const EXTRAPOLATION_LEVELS: usize = 7;
/// Relative offset of the one-sided difference stencil.
const STENCIL_OFFSET: f64 = 0.25;

/// Extrapolates `x^α E_x(x, y)` to `x = 0` from interior values only.
///
/// With `s = x^{1−α}`, `x^α E_x = (1−α)·dE/ds`. The derivative is taken by a
/// one-sided three-point difference at `x_j = 2^{−j}·x_base`, `j = 0..6`, and the
/// sequence is Neville-extrapolated to `s = 0`. `field(x, y)` evaluates the solution.
pub fn extrapolated_boundary_limit<F>(edge: Edge, coordinate: f64, alpha: f64, x_base: f64, field: F) -> Result<(C64, f64, bool)>
where
    F: Fn(f64, f64) -> Result<C64>,
{
    let at = |t: f64| match edge {
        Edge::X0 => field(t, coordinate),
        Edge::Y0 => field(coordinate, t),
    };
    let expo = 1.0 - alpha;
    let mut s_pts = Vec::with_capacity(EXTRAPOLATION_LEVELS);
    let mut derivs = Vec::with_capacity(EXTRAPOLATION_LEVELS);
    for j in 0..EXTRAPOLATION_LEVELS {
        let s = (x_base * 0.5f64.powi(j as i32)).powf(expo);
        let d = STENCIL_OFFSET * s;
        let f: Vec<C64> = (0..3).map(|i| at((s + i as f64 * d).powf(1.0 / expo))).collect::<Result<_>>()?;
        derivs.push((f[1] * 4.0 - f[0] * 3.0 - f[2]) / (2.0 * d) * expo);
        s_pts.push(s);
    }
    let diag = quad::neville_to_zero(&s_pts, &derivs);
    let best = *diag.last().unwrap();
    let scale = best.norm().max(1.0);
    let spread = (diag[diag.len() - 1] - diag[diag.len() - 2]).norm();
    let steps: Vec<f64> = derivs.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let floor = 1e-10 * scale;
    let monotone = steps.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    let reliable = spread.is_finite() && monotone && spread <= 1e-3 * scale;
    Ok((best, spread, reliable))
}

/// Predicted and extrapolated limits side by side.
pub fn boundary_limit_report<F>(edge: Edge, coordinate: f64, data: &GoursatData, x_base: f64, field: F) -> Result<BoundaryLimitReport>
where
    F: Fn(f64, f64) -> Result<C64>,
{
    let predicted = predicted_boundary_limit(edge, coordinate, data)?;
    let alpha = match edge {
        Edge::X0 => data.x.alpha,
        Edge::Y0 => data.y.alpha,
    };
    let (extrapolated, spread, reliable) = extrapolated_boundary_limit(edge, coordinate, alpha, x_base, field)?;
    Ok(BoundaryLimitReport {
        edge,
        coordinate,
        predicted: predicted.value,
        extrapolated,
        abs_error: (predicted.value - extrapolated).norm(),
        spread,
        reliable,
        outside_theorem: predicted.outside_theorem,
    })
}

/// Width of the band around `1` inside which a corner modulus counts as `1`.
const MODULUS_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwReport {
    pub alpha: (f64, f64),
    pub m1: C64,
    pub m2: C64,
    /// `|m₂|²/2`.
    pub k1: f64,
    /// `|m₁|²/2`.
    pub k2: f64,
    pub admissible: bool,
    pub reasons: Vec<String>,
}

fn modulus_in_range(m: f64) -> bool {
    (1.0 - MODULUS_SNAP..SQRT_2).contains(&m)
}

/// Gravitational-wave admissibility: `α = ½` on both edges and `|m₁|, |m₂| ∈ [1, √2)`.
pub fn gw_admissibility(data_x: &BoundaryDatum, data_y: &BoundaryDatum) -> Result<GwReport> {
    let (cx, cy) = (corner_data(data_x)?, corner_data(data_y)?);
    let mut reasons = Vec::new();
    for (name, a) in [("x", data_x.alpha), ("y", data_y.alpha)] {
        if (a - 0.5).abs() > 1e-12 {
            reasons.push(format!("alpha on the {name} edge is {a}, not 1/2"));
        }
    }
    for (name, m) in [("m1", cx.m), ("m2", cy.m)] {
        if !modulus_in_range(m.norm()) {
            reasons.push(format!("|{name}| = {} lies outside [1, sqrt 2)", m.norm()));
        }
    }
    Ok(GwReport {
        alpha: (data_x.alpha, data_y.alpha),
        m1: cx.m,
        m2: cy.m,
        k1: cy.m.norm_sqr() / 2.0,
        k2: cx.m.norm_sqr() / 2.0,
        admissible: reasons.is_empty(),
        reasons,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub h: (f64, f64),
    /// `(x, y, |residual|)` at every interior point with a full stencil.
    pub points: Vec<(f64, f64, f64)>,
    pub max: f64,
    pub l2: f64,
}

/// Pointwise residual `(Re E)(E_xy − (E_x + E_y)/(2(1−x−y))) − E_x E_y` from
/// central differences on the 3×3 stencil.
pub fn stencil_residual(e: &[[C64; 3]; 3], x: f64, y: f64, hx: f64, hy: f64) -> C64 {
    let ex = (e[2][1] - e[0][1]) / (2.0 * hx);
    let ey = (e[1][2] - e[1][0]) / (2.0 * hy);
    let exy = (e[2][2] - e[2][0] - e[0][2] + e[0][0]) / (4.0 * hx * hy);
    e[1][1].re * (exy - (ex + ey) / (2.0 * (1.0 - x - y))) - ex * ey
}

/// Residual of the Ernst equation on a uniform solved grid.
pub fn pde_residual(field: &ErnstField) -> Result<ResidualReport> {
    let (nx, ny) = (field.xs.len(), field.ys.len());
    if nx < 3 || ny < 3 {
        return Err(Error::Config(format!("grid {nx}x{ny} is too coarse for a 3x3 stencil")));
    }
    let hx = field.xs[1] - field.xs[0];
    let hy = field.ys[1] - field.ys[0];
    let uniform = |v: &[f64], h: f64| v.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !(uniform(&field.xs, hx) && uniform(&field.ys, hy)) {
        return Err(Error::Config("pde_residual needs a uniform grid".into()));
    }
    let mut points = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let mut st = [[C64::new(0.0, 0.0); 3]; 3];
            let mut full = true;
            for (a, row) in st.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    match field.ernst(i + a - 1, j + b - 1) {
                        Some(v) => *cell = v,
                        None => full = false,
                    }
                }
            }
            if full {
                let (x, y) = (field.xs[i], field.ys[j]);
                points.push((x, y, stencil_residual(&st, x, y, hx, hy).norm()));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config("no interior point has a complete stencil".into()));
    }
    let max = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let l2 = (points.iter().map(|p| p.2 * p.2).sum::<f64>() / points.len() as f64).sqrt();
    Ok(ResidualReport {
        h: (hx, hy),
        points,
        max,
        l2,
    })
}

/// Observed orders `log₂(r_k/r_{k+1})` for residuals at successively halved `h`.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallNormReport {
    pub w_norm: f64,
    /// Discrete stand-in for the operator norm of `C₋`.
    pub minus_norm: f64,
    pub bound: f64,
    pub certificate: bool,
    pub condition: Option<f64>,
}

pub fn small_norm_report(jump: &JumpField, contours: &ContourSystem, condition: Option<f64>) -> SmallNormReport {
    let op = build_cw(&jump.w, contours);
    SmallNormReport {
        w_norm: op.w_norm_inf,
        minus_norm: contours.minus_norm(),
        bound: op.norm_bound,
        certificate: op.small_norm_certificate(),
        condition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::{make_boundary_datum, Axis, DatumSpec};
    use crate::exact_solutions::{boundary_data_of, derivative_x, derivative_y, evaluate_exact, ExactId};
    use crate::geometry::build_contour_system;
    use crate::rh_solver::{assemble_jump, solve_rh_point, PointValue};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn exact(id: ExactId) -> GoursatData {
        let (x, y) = boundary_data_of(id);
        GoursatData::new(x, y)
    }

    fn pair(spec: &DatumSpec) -> GoursatData {
        GoursatData::new(
            make_boundary_datum(spec, Axis::X).unwrap(),
            make_boundary_datum(spec, Axis::Y).unwrap(),
        )
    }

    #[test]
    fn predicted_limits() {
        let kp = predicted_boundary_limit(Edge::X0, 0.25, &exact(ExactId::KhanPenrose)).unwrap();
        assert!((kp.value - c(0.75f64.sqrt() / 0.25, 0.0)).norm() < 1e-10);
        let nh = predicted_boundary_limit(Edge::X0, 0.25, &exact(ExactId::NutkuHalil)).unwrap();
        let expect = c(0.0, 0.75f64.sqrt()) / (c(0.0, 1.0) + 0.5).powi(2);
        assert!((nh.value - expect).norm() < 1e-10, "{} {expect}", nh.value);
        let unit = predicted_boundary_limit(Edge::Y0, 0.4, &pair(&DatumSpec::Unit { alpha: 0.5 })).unwrap();
        assert_eq!(unit.value, c(0.0, 0.0));
        let lin = predicted_boundary_limit(Edge::X0, 0.4, &pair(&DatumSpec::CollinearSqrt { c: 2.0 })).unwrap();
        assert!((lin.value.re - 1.0 / 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn predicted_limits_match_exact_derivatives() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            let data = exact(id);
            for y in [0.1, 0.3, 0.5] {
                let p = predicted_boundary_limit(Edge::X0, y, &data).unwrap().value;
                let x = 1e-16;
                let near = derivative_x(id, x, y).unwrap() * x.sqrt();
                assert!((p - near).norm() < 1e-6, "{id:?} y = {y}: {p} vs {near}");
                let q = predicted_boundary_limit(Edge::Y0, y, &data).unwrap().value;
                let near = derivative_y(id, y, x).unwrap() * x.sqrt();
                assert!((q - near).norm() < 1e-6, "{id:?} x = {y}: {q} vs {near}");
            }
        }
    }

    #[test]
    fn extrapolation_recovers_exact_limits() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            let data = exact(id);
            for y in [0.25, 0.5] {
                let r = boundary_limit_report(Edge::X0, y, &data, 0.01, |x, y| evaluate_exact(id, x, y)).unwrap();
                assert!(r.reliable && r.abs_error < 1e-4, "{r:?}");
                let modulus = r.extrapolated.norm();
                let expect = corner_data(&data.x).unwrap().m.norm() * data.y.value(y).re / (1.0 - y).sqrt();
                assert!((modulus - expect).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn noisy_fields_are_flagged() {
        let noisy = |x: f64, y: f64| {
            let jitter = ((x * 1e7).sin() * 1e-2, 0.0);
            evaluate_exact(ExactId::KhanPenrose, x, y).map(|e| e + c(jitter.0, jitter.1))
        };
        let (_, _, reliable) = extrapolated_boundary_limit(Edge::X0, 0.3, 0.5, 0.04, noisy).unwrap();
        assert!(!reliable);
    }

    #[test]
    fn admissibility() {
        let kp = exact(ExactId::KhanPenrose);
        let r = gw_admissibility(&kp.x, &kp.y).unwrap();
        assert!(r.admissible && (r.k1 - 0.5).abs() < 1e-8 && (r.k2 - 0.5).abs() < 1e-8, "{r:?}");
        let nh = exact(ExactId::NutkuHalil);
        assert!(gw_admissibility(&nh.x, &nh.y).unwrap().admissible);
        let unit = pair(&DatumSpec::Unit { alpha: 0.5 });
        assert!(!gw_admissibility(&unit.x, &unit.y).unwrap().admissible);
        let big = scaled(1.5);
        let r = gw_admissibility(&big, &kp.y).unwrap();
        assert!(!r.admissible && (r.k2 - 1.125).abs() < 1e-8);
        assert!(!gw_admissibility(&scaled(SQRT_2), &kp.y).unwrap().admissible);
        assert!(gw_admissibility(&scaled(SQRT_2 - 1e-6), &kp.y).unwrap().admissible);
        let half = pair(&DatumSpec::Unit { alpha: 0.25 });
        assert!(!gw_admissibility(&half.x, &kp.y).unwrap().admissible);
    }

    /// `E = 1 + m√x`, whose corner coefficient is `m`.
    fn scaled(m: f64) -> BoundaryDatum {
        BoundaryDatum::from_fns(
            DatumKind::Ernst,
            0.5,
            Arc::new(move |t: f64| c(1.0 + 2.0 * m * t.sqrt(), 0.0)),
            Arc::new(move |_| c(m, 0.0)),
            "linear ramp",
        )
        .unwrap()
    }

    #[test]
    fn admissibility_ignores_phase() {
        let kp = exact(ExactId::KhanPenrose);
        let nh = exact(ExactId::NutkuHalil);
        let a = gw_admissibility(&kp.x, &kp.y).unwrap();
        let b = gw_admissibility(&nh.x, &nh.y).unwrap();
        assert_eq!(a.admissible, b.admissible);
        assert!((a.k1 - b.k1).abs() < 1e-8 && (a.k2 - b.k2).abs() < 1e-8);
    }

    fn exact_field(id: ExactId, x0: f64, y0: f64, h: f64, n: usize) -> ErnstField {
        let xs: Vec<f64> = (0..n).map(|i| x0 + h * i as f64).collect();
        let ys: Vec<f64> = (0..n).map(|j| y0 + h * j as f64).collect();
        let values = ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .map(|(x, y)| {
                Some(PointValue {
                    ernst: evaluate_exact(id, x, y).unwrap(),
                    diagnostics: Default::default(),
                })
            })
            .collect();
        ErnstField {
            xs,
            ys,
            values,
            failures: vec![],
        }
    }

    #[test]
    fn residual_of_constant_field_vanishes() {
        let mut f = exact_field(ExactId::KhanPenrose, 0.1, 0.1, 0.05, 4);
        for v in f.values.iter_mut().flatten() {
            v.ernst = c(1.0, 0.0);
        }
        assert_eq!(pde_residual(&f).unwrap().max, 0.0);
    }

    #[test]
    fn residual_is_second_order_on_exact_solutions() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            let r: Vec<f64> = [16.0, 32.0, 64.0]
                .iter()
                .map(|&m| {
                    pde_residual(&exact_field(id, 0.2 - 1.0 / m, 0.25 - 1.0 / m, 1.0 / m, 3))
                        .unwrap()
                        .max
                })
                .collect();
            for o in observed_orders(&r) {
                assert!(o > 1.9 && o < 2.2, "{id:?} {r:?}");
            }
        }
    }

    #[test]
    fn small_norm_reports() {
        let cs = build_contour_system(0.2, 64).unwrap();
        let unit = pair(&DatumSpec::Unit { alpha: 0.5 });
        let j = assemble_jump(0.3, 0.3, &unit, &cs).unwrap();
        let r = small_norm_report(&j, &cs, Some(1.0));
        assert!(r.certificate && r.w_norm == 0.0);
        let kp = exact(ExactId::KhanPenrose);
        let mut last = f64::INFINITY;
        for s in [1.0, 0.5, 0.1, 0.01] {
            let d = GoursatData::new(kp.x.powered(s).unwrap(), kp.y.powered(s).unwrap());
            let w = small_norm_report(&assemble_jump(0.3, 0.3, &d, &cs).unwrap(), &cs, None).w_norm;
            assert!(w < last, "{s}: {w} {last}");
            last = w;
        }
        let wide = build_contour_system(0.1, 64).unwrap();
        let s = solve_rh_point(0.44, 0.44, &kp, &wide).unwrap();
        assert!(s.diagnostics.condition_number.is_finite() && s.diagnostics.condition_number >= 1.0);
    }
}
