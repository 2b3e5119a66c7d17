//! Point solves of the matrix Riemann–Hilbert problem and grid sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_data::BoundaryDatum;
use crate::cauchy::{build_cw, cauchy_eval, CwOperator, Density};
use crate::error::{Error, Result};
use crate::geometry::{check_domain, ContourSystem, Sheet, SpectralPoint};
use crate::volterra::{integrate_phi0, integrate_phi1, phi0_on_sphere, phi1_on_sphere, Mat2};

type C64 = Complex64;

/// Residual above which the factorized solve is rejected.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Boundary data on the two characteristics.
#[derive(Clone)]
pub struct GoursatData {
    pub x: BoundaryDatum,
    pub y: BoundaryDatum,
}

impl GoursatData {
    pub fn new(x: BoundaryDatum, y: BoundaryDatum) -> Self {
        GoursatData { x, y }
    }
}

fn sigma1() -> Mat2 {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    Mat2::new(o, l, l, o)
}

fn sigma3() -> Mat2 {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    Mat2::new(l, o, o, -l)
}

fn conj(m: &Mat2) -> Mat2 {
    m.map(|c| c.conj())
}

fn max_norm(m: &Mat2) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Jump `v` on all nodes, `Γ₀` first, and `w = v − I`.
#[derive(Clone, Debug)]
pub struct JumpField {
    pub point: (f64, f64),
    pub v: Density,
    pub w: Density,
    /// Expected `det v` on `Γ₀`, i.e. `Re E₀(x)`.
    pub det0: C64,
    /// Expected `det v` on `Γ₁`, i.e. `Re E₁(y)`.
    pub det1: C64,
}

impl JumpField {
    /// Largest node-wise deviation of `det v` from its loop constant.
    pub fn det_residual(&self, contours: &ContourSystem) -> f64 {
        let n = contours.nodes_per_loop();
        self.v
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let target = if j < n { self.det0 } else { self.det1 };
                (v.determinant() - target).norm() / target.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of `v(z) = σ₃v(1/z)σ₃` and `v(z) = σ₁ conj(v(z̄)) σ₁` on the node set.
    pub fn symmetry_residual(&self, contours: &ContourSystem) -> f64 {
        let (s1, s3) = (sigma1(), sigma3());
        let mut worst: f64 = 0.0;
        for (j, v) in self.v.iter().enumerate() {
            let scale = max_norm(v).max(1.0);
            let inv = s3 * self.v[contours.inverse_index(j)] * s3;
            let cj = s1 * conj(&self.v[contours.conjugate_index(j)]) * s1;
            worst = worst.max(max_norm(&(v - inv)) / scale).max(max_norm(&(v - cj)) / scale);
        }
        worst
    }
}

pub fn assemble_jump(x: f64, y: f64, data: &GoursatData, contours: &ContourSystem) -> Result<JumpField> {
    check_domain(x, y)?;
    if !contours.admits(x, y) {
        return Err(Error::OutsideDomain { x, y });
    }
    let v0 = phi0_on_sphere(&data.x, x, y, &contours.loops[0].nodes)?;
    let v1 = phi1_on_sphere(&data.y, x, y, &contours.loops[1].nodes)?;
    let v: Density = v0.into_iter().chain(v1).collect();
    let w = v.iter().map(|m| m - Mat2::identity()).collect();
    let real = |c: C64| C64::new(c.re, 0.0);
    Ok(JumpField {
        point: (x, y),
        v,
        w,
        det0: real(data.x.value(x)),
        det1: real(data.y.value(y)),
    })
}

/// Residuals and conditioning of one point solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `|det m̂ − 1|`.
    pub det_residual: f64,
    /// Worst of the `m` symmetries at the probe points and the jump symmetries.
    pub symmetry_residual: f64,
    /// Worst of `m̂₁₁ − m̂₂₂`, `Im m̂₁₁`, `m̂₁₂ − conj m̂₂₁`, `m̂₁₁² − |m̂₁₂|² − 1`.
    pub structure_residual: f64,
    /// Deviation of `det v` from `Re E₀(x)` resp. `Re E₁(y)`.
    pub jump_det_residual: f64,
    /// Disagreement between the two recovery formulas, when both are defined.
    pub recovery_residual: f64,
    pub solve_residual: f64,
    pub condition_number: f64,
    pub w_norm: f64,
    /// `‖C₋‖_disc·‖w‖_∞`.
    pub norm_bound: f64,
    pub small_norm_flag: bool,
}

#[derive(Clone, Debug)]
pub struct RHSolution {
    pub point: (f64, f64),
    pub mu: Density,
    /// `μ·w` at the nodes; `m = I + C(μw)` off the contour.
    pub mu_w: Density,
    pub m_hat: Mat2,
    pub ernst: C64,
    pub diagnostics: Diagnostics,
}

/// `m(z) = I + C(μw)(z)` for `z` off the contour.
pub fn evaluate_m(sol: &RHSolution, contours: &ContourSystem, z: C64) -> Result<Mat2> {
    if sol.mu_w.is_empty() {
        return Err(Error::Config("closed-form boundary solutions carry no density".into()));
    }
    Ok(Mat2::identity() + cauchy_eval(&sol.mu_w, contours, z)?)
}

/// `E = (1 + m̂₁₁ − m̂₂₁)/(1 + m̂₁₁ + m̂₂₁)`.
pub fn recover_ernst(m_hat: &Mat2) -> Result<C64> {
    let (a, c) = (m_hat[(0, 0)], m_hat[(1, 0)]);
    let den = 1.0 + a + c;
    if den.norm() <= 1e-12 * (1.0 + a.norm() + c.norm()) {
        return Err(Error::Degenerate);
    }
    Ok((1.0 + a - c) / den)
}

/// `conj E` from the second recovery formula, when its denominator is not small.
fn recover_conjugate(m_hat: &Mat2) -> Option<C64> {
    let (a, c) = (m_hat[(0, 0)], m_hat[(1, 0)]);
    let den = 1.0 - a - c;
    (den.norm() > 1e-6 * (1.0 + a.norm() + c.norm())).then(|| -(1.0 - a + c) / den)
}

fn structure_residual(m: &Mat2) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s = 1.0 + a.norm();
    [
        (a - d).norm(),
        a.im.abs(),
        (b - c.conj()).norm(),
        (a.re * a.re - b.norm_sqr() - 1.0).abs() / s,
        (1.0 - a.re).max(0.0),
    ]
    .into_iter()
    .fold(0.0, f64::max)
        / s
}

/// Probe points in `Ω_∞` for the symmetry checks, as `(|z|, arg z)`; probes closer
/// to the contour than the local node spacing are skipped.
const SYMMETRY_PROBES: [(f64, f64); 5] = [(0.5, 1.52), (1.0, 1.62), (2.0, 1.55), (0.25, 1.6), (4.0, 1.5)];

fn m_symmetry_residual(sol: &RHSolution, contours: &ContourSystem) -> Result<f64> {
    let (s1, s3) = (sigma1(), sigma3());
    let mut worst: f64 = 0.0;
    for &(r, th) in &SYMMETRY_PROBES {
        let z = C64::from_polar(r, th);
        if [z, 1.0 / z, z.conj()].iter().any(|&p| contours.relative_distance(p) < 1.0) {
            continue;
        }
        let m = evaluate_m(sol, contours, z)?;
        let mi = evaluate_m(sol, contours, 1.0 / z)?;
        let mc = evaluate_m(sol, contours, z.conj())?;
        let scale = max_norm(&m).max(1.0);
        worst = worst
            .max(max_norm(&(m - sol.m_hat * s3 * mi * s3)) / scale)
            .max(max_norm(&(m - s1 * conj(&mc) * s1)) / scale);
    }
    Ok(worst)
}

/// Solves the RH problem at an interior or edge point of `D_δ` through the μ-equation.
pub fn solve_rh_point(x: f64, y: f64, data: &GoursatData, contours: &ContourSystem) -> Result<RHSolution> {
    let jump = assemble_jump(x, y, data, contours)?;
    solve_with_jump(&jump, contours)
}

pub fn solve_with_jump(jump: &JumpField, contours: &ContourSystem) -> Result<RHSolution> {
    let op: CwOperator = build_cw(&jump.w, contours);
    let solved = op.solve_identity()?;
    if solved.residual > SOLVE_RESIDUAL_TOL {
        return Err(Error::SingularSystem(solved.condition));
    }
    let mu_w: Density = solved.mu.iter().zip(&jump.w).map(|(m, w)| m * w).collect();
    let m_hat = Mat2::identity() + cauchy_eval(&mu_w, contours, C64::new(0.0, 0.0))?;
    let ernst = recover_ernst(&m_hat)?;
    let mut sol = RHSolution {
        point: jump.point,
        mu: solved.mu,
        mu_w,
        m_hat,
        ernst,
        diagnostics: Diagnostics {
            det_residual: (m_hat.determinant() - 1.0).norm(),
            structure_residual: structure_residual(&m_hat),
            jump_det_residual: jump.det_residual(contours),
            recovery_residual: recover_conjugate(&m_hat).map_or(0.0, |c| (c - ernst.conj()).norm() / ernst.norm().max(1.0)),
            solve_residual: solved.residual,
            condition_number: solved.condition,
            w_norm: op.w_norm_inf,
            norm_bound: op.norm_bound,
            small_norm_flag: op.small_norm_certificate(),
            ..Diagnostics::default()
        },
    };
    sol.diagnostics.symmetry_residual = m_symmetry_residual(&sol, contours)?.max(jump.symmetry_residual(contours));
    if sol.ernst.re.is_nan() || sol.ernst.re <= 0.0 {
        return Err(Error::Check(format!("Re E = {} at {:?}", sol.ernst.re, sol.point)));
    }
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeAxis {
    /// The row `y = 0`, parametrized by `x`.
    XAxis,
    /// The row `x = 0`, parametrized by `y`.
    YAxis,
}

/// Closed-form solution on a characteristic: `m̂ = Φ(∞⁺)⁻¹σ₃Φ(∞⁺)σ₃`.
pub fn boundary_row_solution(axis: EdgeAxis, coordinate: f64, data: &GoursatData, contours: &ContourSystem) -> Result<RHSolution> {
    let (x, y) = match axis {
        EdgeAxis::XAxis => (coordinate, 0.0),
        EdgeAxis::YAxis => (0.0, coordinate),
    };
    check_domain(x, y)?;
    if !contours.admits(x, y) {
        return Err(Error::OutsideDomain { x, y });
    }
    let inf = [SpectralPoint::Infinity(Sheet::Upper)];
    let phi = match axis {
        EdgeAxis::XAxis => integrate_phi0(&data.x, coordinate, &inf)?,
        EdgeAxis::YAxis => integrate_phi1(&data.y, coordinate, &inf)?,
    }[0]
    .matrix;
    let inv = phi.try_inverse().ok_or(Error::Degenerate)?;
    let s3 = sigma3();
    let m_hat = inv * s3 * phi * s3;
    let ernst = recover_ernst(&m_hat)?;
    let diagnostics = Diagnostics {
        det_residual: (m_hat.determinant() - 1.0).norm(),
        structure_residual: structure_residual(&m_hat),
        recovery_residual: recover_conjugate(&m_hat).map_or(0.0, |c| (c - ernst.conj()).norm() / ernst.norm().max(1.0)),
        condition_number: 1.0,
        small_norm_flag: true,
        ..Diagnostics::default()
    };
    Ok(RHSolution {
        point: (x, y),
        mu: Vec::new(),
        mu_w: Vec::new(),
        m_hat,
        ernst,
        diagnostics,
    })
}

/// Dispatches edge points to the closed form and everything else to the linear solve.
pub fn solve_point(x: f64, y: f64, data: &GoursatData, contours: &ContourSystem) -> Result<RHSolution> {
    if y == 0.0 {
        boundary_row_solution(EdgeAxis::XAxis, x, data, contours)
    } else if x == 0.0 {
        boundary_row_solution(EdgeAxis::YAxis, y, data, contours)
    } else {
        solve_rh_point(x, y, data, contours)
    }
}

/// Tensor grid `x_i = x_min + i·(x_max − x_min)/(nx − 1)`, likewise in `y`.
/// Points outside `D_δ` are masked.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl GridConfig {
    /// Cell-centred `nx × ny` grid on the square `[0, (1−δ)/2]²`, which lies inside `D_δ`.
    pub fn interior(delta: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta = {delta} must lie in (0, 1)")));
        }
        let s = 0.5 * (1.0 - delta);
        let hx = s / nx as f64;
        let hy = s / ny as f64;
        GridConfig::new(nx, ny, (0.5 * hx, s - 0.5 * hx), (0.5 * hy, s - 0.5 * hy))
    }

    pub fn new(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("grid {nx}x{ny} needs at least 2 points per axis")));
        }
        if !(x_range.0 >= 0.0 && x_range.1 > x_range.0 && y_range.0 >= 0.0 && y_range.1 > y_range.0) {
            return Err(Error::Config(format!("bad grid ranges {x_range:?}, {y_range:?}")));
        }
        Ok(GridConfig { nx, ny, x_range, y_range })
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_range, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y_range, self.ny)
    }
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub ernst: C64,
    pub diagnostics: Diagnostics,
}

/// Solved field; `values[j * nx + i]` belongs to `(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErnstField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `None` for points outside `D_δ` or failed solves.
    pub values: Vec<Option<PointValue>>,
    pub failures: Vec<PointFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub x: f64,
    pub y: f64,
    pub message: String,
}

impl ErnstField {
    pub fn at(&self, i: usize, j: usize) -> Option<&PointValue> {
        self.values[j * self.xs.len() + i].as_ref()
    }

    pub fn ernst(&self, i: usize, j: usize) -> Option<C64> {
        self.at(i, j).map(|p| p.ernst)
    }

    /// `(x, y, value)` for every solved point in row-major order.
    pub fn solved(&self) -> impl Iterator<Item = (f64, f64, &PointValue)> + '_ {
        let nx = self.xs.len();
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(k, v)| v.as_ref().map(|v| (self.xs[k % nx], self.ys[k / nx], v)))
    }
}

pub fn solve_grid(config: &GridConfig, data: &GoursatData, contours: &ContourSystem) -> ErnstField {
    let xs = config.xs();
    let ys = config.ys();
    let nx = xs.len();
    let results: Vec<Option<Result<RHSolution>>> = (0..nx * ys.len())
        .into_par_iter()
        .map(|k| {
            let (x, y) = (xs[k % nx], ys[k / nx]);
            contours.admits(x, y).then(|| solve_point(x, y, data, contours))
        })
        .collect();
    let mut failures = Vec::new();
    let values = results
        .into_iter()
        .enumerate()
        .map(|(k, r)| match r {
            None => None,
            Some(Ok(s)) => Some(PointValue {
                ernst: s.ernst,
                diagnostics: s.diagnostics,
            }),
            Some(Err(e)) => {
                failures.push(PointFailure {
                    x: xs[k % nx],
                    y: ys[k / nx],
                    message: e.to_string(),
                });
                None
            }
        })
        .collect();
    ErnstField { xs, ys, values, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::{make_boundary_datum, Axis, DatumSpec};
    use crate::exact_solutions::{boundary_data_of, evaluate_exact, ExactId};
    use crate::geometry::build_contour_system;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn exact(id: ExactId) -> GoursatData {
        let (x, y) = boundary_data_of(id);
        GoursatData::new(x, y)
    }

    fn unit() -> GoursatData {
        let spec = DatumSpec::Unit { alpha: 0.5 };
        GoursatData::new(
            make_boundary_datum(&spec, Axis::X).unwrap(),
            make_boundary_datum(&spec, Axis::Y).unwrap(),
        )
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(recover_ernst(&Mat2::identity()).unwrap(), c(1.0, 0.0));
        let m = Mat2::new(c(1.5, 0.0), c(-0.5, 1.0), c(-0.5, -1.0), c(1.5, 0.0));
        assert!((recover_ernst(&m).unwrap() - c(1.0, 1.0)).norm() < 1e-15);
        assert!((recover_conjugate(&m).unwrap() - c(1.0, -1.0)).norm() < 1e-15);
        let bad = Mat2::new(c(0.5, 0.0), c(0.0, 0.0), c(-1.5, 0.0), c(0.5, 0.0));
        assert_eq!(recover_ernst(&bad), Err(Error::Degenerate));
    }

    #[test]
    fn entry_formulas_invert_recovery() {
        for e in [c(2.0, 0.3), c(0.4, -1.2), c(13.9, 0.0)] {
            let re2 = e + e.conj();
            let a = (1.0 + e * e.conj()) / re2;
            let b = (1.0 - e) * (1.0 + e.conj()) / re2;
            let m = Mat2::new(a, b.conj(), b, a);
            assert!((recover_ernst(&m).unwrap() - e).norm() < 1e-13);
            assert!((m.determinant() - 1.0).norm() < 1e-13);
            assert!(structure_residual(&m) < 1e-13);
        }
    }

    #[test]
    fn origin_is_trivial() {
        let cs = build_contour_system(0.2, 32).unwrap();
        let kp = exact(ExactId::KhanPenrose);
        let jump = assemble_jump(0.0, 0.0, &kp, &cs).unwrap();
        assert!(jump.v.iter().all(|v| *v == Mat2::identity()));
        let s = solve_rh_point(0.0, 0.0, &kp, &cs).unwrap();
        assert_eq!(s.m_hat, Mat2::identity());
        assert_eq!(s.ernst, c(1.0, 0.0));
    }

    #[test]
    fn edge_jump_is_identity_on_the_idle_loop() {
        let cs = build_contour_system(0.2, 32).unwrap();
        let jump = assemble_jump(0.0, 0.3, &exact(ExactId::NutkuHalil), &cs).unwrap();
        let n = cs.nodes_per_loop();
        assert!(jump.v[..n].iter().all(|v| *v == Mat2::identity()));
        assert!(jump.v[n..].iter().any(|v| (v - Mat2::identity()).norm() > 1e-3));
    }

    #[test]
    fn khan_penrose_jump_determinants() {
        let cs = build_contour_system(0.2, 64).unwrap();
        let jump = assemble_jump(0.25, 0.25, &exact(ExactId::KhanPenrose), &cs).unwrap();
        assert!((jump.det0 - 3.0).norm() < 1e-12 && (jump.det1 - 3.0).norm() < 1e-12);
        assert!(jump.det_residual(&cs) < 1e-9, "{}", jump.det_residual(&cs));
        assert!(jump.symmetry_residual(&cs) < 1e-9, "{}", jump.symmetry_residual(&cs));
    }

    #[test]
    fn khan_penrose_point() {
        let cs = build_contour_system(0.2, 128).unwrap();
        let s = solve_rh_point(0.25, 0.25, &exact(ExactId::KhanPenrose), &cs).unwrap();
        let e = 7.0 + 4.0 * 3f64.sqrt();
        assert!((s.ernst - e).norm() < 1e-6 * e, "{} {:?}", s.ernst, s.diagnostics);
        assert!(s.diagnostics.det_residual < 1e-8);
        assert!(s.diagnostics.structure_residual < 1e-8);
        assert!(s.diagnostics.symmetry_residual < 1e-7, "{:?}", s.diagnostics);
    }

    #[test]
    fn nutku_halil_point() {
        let cs = build_contour_system(0.2, 128).unwrap();
        let s = solve_rh_point(0.2, 0.3, &exact(ExactId::NutkuHalil), &cs).unwrap();
        let e = evaluate_exact(ExactId::NutkuHalil, 0.2, 0.3).unwrap();
        assert!((s.ernst - e).norm() < 1e-6, "{} {e}", s.ernst);
        assert!((s.ernst.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn boundary_rows_reproduce_data() {
        let cs = build_contour_system(0.2, 64).unwrap();
        let kp = exact(ExactId::KhanPenrose);
        let s = boundary_row_solution(EdgeAxis::XAxis, 0.25, &kp, &cs).unwrap();
        assert!((s.ernst - 3.0).norm() < 1e-10);
        let nh = exact(ExactId::NutkuHalil);
        for t in [0.1, 0.4, 0.7] {
            let a = boundary_row_solution(EdgeAxis::YAxis, t, &nh, &cs).unwrap();
            assert!((a.ernst - nh.y.value(t)).norm() < 1e-10);
        }
        let u = boundary_row_solution(EdgeAxis::YAxis, 0.5, &unit(), &cs).unwrap();
        assert!((u.ernst - 1.0).norm() < 1e-14);
    }

    #[test]
    fn boundary_row_matches_linear_solve() {
        let cs = build_contour_system(0.2, 128).unwrap();
        let kp = exact(ExactId::KhanPenrose);
        let a = boundary_row_solution(EdgeAxis::XAxis, 0.3, &kp, &cs).unwrap();
        let b = solve_rh_point(0.3, 0.0, &kp, &cs).unwrap();
        assert!((a.ernst - b.ernst).norm() < 1e-8, "{} {}", a.ernst, b.ernst);
        assert!((a.m_hat - b.m_hat).norm() < 1e-8);
    }

    #[test]
    fn unit_grid_is_one() {
        let cs = build_contour_system(0.2, 32).unwrap();
        let g = GridConfig::new(2, 2, (0.0, 0.01), (0.0, 0.01)).unwrap();
        let f = solve_grid(&g, &unit(), &cs);
        assert!(f.failures.is_empty());
        for (_, _, v) in f.solved() {
            assert!((v.ernst - 1.0).norm() < 1e-14);
        }
        assert_eq!(f.solved().count(), 4);
    }

    #[test]
    fn grid_masks_points_outside_the_domain() {
        let cs = build_contour_system(0.5, 16).unwrap();
        let g = GridConfig::new(3, 3, (0.0, 0.4), (0.0, 0.4)).unwrap();
        let f = solve_grid(&g, &unit(), &cs);
        assert!(f.at(2, 2).is_none() && f.at(0, 0).is_some());
        let interior = GridConfig::interior(0.2, 10, 10).unwrap();
        for x in interior.xs() {
            for y in interior.ys() {
                assert!(cs.admits(x, y) || x + y >= 0.5);
                assert!(x + y < 0.8);
            }
        }
    }
}
