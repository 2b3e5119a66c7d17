//! Spectral geometry of the two-sheeted surface `λ² = (k − (1−y))/(k − x)`,
//! its uniformization onto the sphere and the fixed pair of contours.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

/// Relative width of the band around the unit circle where the sheet is undecidable.
const UNIT_CIRCLE_BAND: f64 = 1e-13;

/// Half-width of each loop in the logarithmic coordinate `u = ln(∓z)`.
pub const LOOP_HALF_WIDTH: f64 = 1.0;

/// Clearance factor of each loop relative to the bracketed interval, measured in `u`.
pub const LOOP_CLEARANCE: f64 = 1.2;

/// Safety factor applied to the exact ε bound over `D_δ`.
pub const EPSILON_SAFETY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    Upper,
    Lower,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Upper => 1.0,
            Sheet::Lower => -1.0,
        }
    }

    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Upper => Sheet::Lower,
            Sheet::Lower => Sheet::Upper,
        }
    }
}

/// A point of the surface: a projection `k` (possibly infinite) and a sheet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralPoint {
    Finite { k: C64, sheet: Sheet },
    Infinity(Sheet),
}

impl SpectralPoint {
    pub fn finite(k: C64, sheet: Sheet) -> Self {
        SpectralPoint::Finite { k, sheet }
    }

    pub fn sheet(&self) -> Sheet {
        match *self {
            SpectralPoint::Finite { sheet, .. } | SpectralPoint::Infinity(sheet) => sheet,
        }
    }

    /// Same projection, other sheet.
    pub fn flipped(&self) -> Self {
        match *self {
            SpectralPoint::Finite { k, sheet } => SpectralPoint::Finite { k, sheet: sheet.flip() },
            SpectralPoint::Infinity(s) => SpectralPoint::Infinity(s.flip()),
        }
    }

    /// Conjugate projection, same sheet.
    pub fn conj(&self) -> Self {
        match *self {
            SpectralPoint::Finite { k, sheet } => SpectralPoint::Finite { k: k.conj(), sheet },
            inf => inf,
        }
    }
}

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(C64),
    Infinity,
}

pub fn check_domain(x: f64, y: f64) -> Result<()> {
    if x >= 0.0 && y >= 0.0 && x + y < 1.0 && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideDomain { x, y })
    }
}

/// `λ(x, y, P)` with `Re λ > 0` on the upper sheet.
pub fn lambda(x: f64, y: f64, p: SpectralPoint) -> Result<C64> {
    check_domain(x, y)?;
    match p {
        SpectralPoint::Infinity(sheet) => Ok(C64::new(sheet.sign(), 0.0)),
        SpectralPoint::Finite { k, sheet } => {
            if k.im == 0.0 {
                if k.re == x {
                    return Err(Error::Pole);
                }
                if k.re > x && k.re < 1.0 - y {
                    return Err(Error::BranchCut(k));
                }
            }
            let ratio = (k - (1.0 - y)) / (k - x);
            Ok(ratio.sqrt() * sheet.sign())
        }
    }
}

/// Uniformizing map `z = (1+λ)/(1−λ)`.
pub fn to_sphere(x: f64, y: f64, p: SpectralPoint) -> Result<SpherePoint> {
    let l = match lambda(x, y, p) {
        Ok(l) => l,
        Err(Error::Pole) => return Ok(SpherePoint::Finite(C64::new(-1.0, 0.0))),
        Err(e) => return Err(e),
    };
    if l == C64::new(1.0, 0.0) {
        return Ok(SpherePoint::Infinity);
    }
    Ok(SpherePoint::Finite((1.0 + l) / (1.0 - l)))
}

/// Projection `k = −(x(z−1)² + (y−1)(z+1)²)/(4z)` of a finite nonzero sphere point.
pub fn k_projection(x: f64, y: f64, z: C64) -> C64 {
    let a = z - 1.0;
    let b = z + 1.0;
    -(a * a * x + b * b * (y - 1.0)) / (z * 4.0)
}

/// `(∂k/∂x, ∂k/∂y)` at fixed `z`.
pub fn k_derivatives(z: C64) -> (C64, C64) {
    let a = z - 1.0;
    let b = z + 1.0;
    (-(a * a) / (z * 4.0), -(b * b) / (z * 4.0))
}

/// Inverse of [`to_sphere`]; the sheet is upper iff `|z| > 1`.
pub fn from_sphere(x: f64, y: f64, z: SpherePoint) -> Result<SpectralPoint> {
    check_domain(x, y)?;
    let z = match z {
        SpherePoint::Infinity => return Ok(SpectralPoint::Infinity(Sheet::Upper)),
        SpherePoint::Finite(z) => z,
    };
    if z == C64::new(0.0, 0.0) {
        return Ok(SpectralPoint::Infinity(Sheet::Lower));
    }
    if z == C64::new(-1.0, 0.0) {
        return Ok(SpectralPoint::finite(C64::new(x, 0.0), Sheet::Upper));
    }
    if z == C64::new(1.0, 0.0) {
        return Ok(SpectralPoint::finite(C64::new(1.0 - y, 0.0), Sheet::Upper));
    }
    let r = z.norm();
    if (r - 1.0).abs() <= UNIT_CIRCLE_BAND {
        return Err(Error::SheetAmbiguity(z));
    }
    let sheet = if r > 1.0 { Sheet::Upper } else { Sheet::Lower };
    Ok(SpectralPoint::finite(k_projection(x, y, z), sheet))
}

/// Images `F(Σ₀) ⊂ (−∞, 0)` and `F(Σ₁) ⊂ (0, ∞)` of the two branch cuts, as ordered intervals.
pub fn branch_cut_images(x: f64, y: f64) -> Result<([f64; 2], [f64; 2])> {
    check_domain(x, y)?;
    let (sx, s1y) = (x.sqrt(), (1.0 - y).sqrt());
    let (sy, s1x) = (y.sqrt(), (1.0 - x).sqrt());
    let i0 = [-(s1y + sx) / (s1y - sx), -(s1y - sx) / (s1y + sx)];
    let i1 = [(s1x - sy) / (s1x + sy), (s1x + sy) / (s1x - sy)];
    Ok((i0, i1))
}

/// Exact minimum over `D_δ` of the inner endpoint magnitude of the branch-cut images.
pub fn epsilon_max(delta: f64) -> f64 {
    let r = (1.0 - delta).sqrt();
    (1.0 - r) / (1.0 + r)
}

/// Roots `b ± √(b²−1)` of `z² − 2bz + 1` for `b ≥ 1`, ordered.
fn reciprocal_roots(b: f64) -> (f64, f64) {
    let big = b + (b * b - 1.0).max(0.0).sqrt();
    (1.0 / big, big)
}

fn sqrt_pair(z: C64, r1: f64, r2: f64) -> C64 {
    (z - r1).sqrt() * (z - r2).sqrt()
}

/// Edge spectral functions `λ(x′, 0, ·)` and `1/λ(0, y′, ·)` written as functions
/// of the sphere coordinate of `S_(x,y)`.
///
/// Each is a ratio of two square-root pairs with cuts on real segments inside the
/// loops, so it is single valued near the contours, including where they cross
/// the unit circle.
#[derive(Clone, Copy, Debug)]
pub struct SphereEdges {
    x: f64,
    y: f64,
    gap: f64,
    p: (f64, f64),
    r: (f64, f64),
}

impl SphereEdges {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        check_domain(x, y)?;
        let gap = 1.0 - x - y;
        Ok(SphereEdges {
            x,
            y,
            gap,
            p: reciprocal_roots((1.0 - x + y) / gap),
            r: {
                let (a, b) = reciprocal_roots((1.0 + x - y) / gap);
                (-b, -a)
            },
        })
    }

    /// Numerator pair of `λ(x′, 0, z)`; independent of `x′`.
    pub fn x_numerator(&self, z: C64) -> C64 {
        sqrt_pair(z, self.p.0, self.p.1)
    }

    pub fn x_denominator(&self, xp: f64, z: C64) -> C64 {
        let (a, b) = reciprocal_roots(1.0 + 2.0 * (self.x - xp) / self.gap);
        sqrt_pair(z, -b, -a)
    }

    /// `λ(x′, 0, P)` for the point `P` of `S_(x,y)` with sphere coordinate `z`, `0 ≤ x′ ≤ x`.
    pub fn lambda_x_edge(&self, xp: f64, z: C64) -> C64 {
        self.x_numerator(z) / self.x_denominator(xp, z)
    }

    /// Numerator pair of `1/λ(0, y′, z)`; independent of `y′`.
    pub fn y_numerator(&self, z: C64) -> C64 {
        sqrt_pair(z, self.r.0, self.r.1)
    }

    pub fn y_denominator(&self, yp: f64, z: C64) -> C64 {
        let (a, b) = reciprocal_roots(1.0 + 2.0 * (self.y - yp) / self.gap);
        sqrt_pair(z, a, b)
    }

    /// `1/λ(0, y′, P)` for the point with sphere coordinate `z`, `0 ≤ y′ ≤ y`.
    pub fn inv_lambda_y_edge(&self, yp: f64, z: C64) -> C64 {
        self.y_numerator(z) / self.y_denominator(yp, z)
    }
}

/// One clockwise loop with trapezoid nodes in its parameter `t ∈ [0, 2π)`.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    /// `−1` for the loop on the negative axis, `+1` for the positive one.
    pub side: f64,
    pub params: Vec<f64>,
    pub nodes: Vec<C64>,
    /// `dz/dt` at the nodes.
    pub tangents: Vec<C64>,
    /// Trapezoid weight in `t`, identical for all nodes.
    pub weight: f64,
    semi_major: f64,
    semi_minor: f64,
}

impl ClosedLoop {
    fn new(side: f64, n: usize, semi_major: f64, semi_minor: f64) -> Self {
        let h = 2.0 * PI / n as f64;
        let mut params = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        for j in 0..n {
            let t = h * j as f64;
            let (u, du) = log_ellipse(semi_major, semi_minor, C64::new(t, 0.0));
            let z = u.exp() * side;
            params.push(t);
            nodes.push(z);
            tangents.push(z * du);
        }
        ClosedLoop {
            side,
            params,
            nodes,
            tangents,
            weight: h,
            semi_major,
            semi_minor,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Point and tangent at a complex parameter value; analytic continuation of the loop.
    pub fn point_at(&self, t: C64) -> (C64, C64) {
        let (u, du) = log_ellipse(self.semi_major, self.semi_minor, t);
        let z = u.exp() * self.side;
        (z, z * du)
    }

    /// Whether `z` lies in the bounded component enclosed by the loop.
    pub fn encloses(&self, z: C64) -> bool {
        let w = z * self.side;
        if w.im == 0.0 && w.re <= 0.0 {
            return false;
        }
        let u = w.ln();
        (u.re / self.semi_major).powi(2) + (u.im / self.semi_minor).powi(2) < 1.0
    }

    /// Local node spacing `|z′(t_j)|·h`.
    pub fn spacing(&self, j: usize) -> f64 {
        self.tangents[j].norm() * self.weight
    }
}

/// `u(t) = a cos t − i b sin t` and its derivative.
fn log_ellipse(a: f64, b: f64, t: C64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    (t.cos() * a - i * t.sin() * b, -t.sin() * a - i * t.cos() * b)
}

/// The two fixed loops `Γ₀` (around `[−1/ε, −ε]`) and `Γ₁` (around `[ε, 1/ε]`).
///
/// Each loop is an ellipse in the logarithmic coordinate `u = ln(∓z)`, so it is
/// mapped onto itself by `z ↦ 1/z` and by conjugation, and node sets are closed
/// under both maps.
#[derive(Clone, Debug)]
pub struct ContourSystem {
    pub delta: f64,
    pub epsilon: f64,
    pub loops: [ClosedLoop; 2],
    pub(crate) minus: Vec<C64>,
    pub(crate) minus_norm: f64,
}

/// Smallest admissible node count per loop.
pub const MIN_NODES: usize = 16;

/// Shape of both loops in the logarithmic coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopShape {
    /// Semi-axis along the real `u` direction as a multiple of `ln(1/ε)`.
    pub clearance: f64,
    /// Semi-axis along the imaginary `u` direction.
    pub half_width: f64,
}

impl Default for LoopShape {
    fn default() -> Self {
        LoopShape {
            clearance: LOOP_CLEARANCE,
            half_width: LOOP_HALF_WIDTH,
        }
    }
}

pub fn build_contour_system(delta: f64, nodes_per_loop: usize) -> Result<ContourSystem> {
    build_contour_system_with(delta, nodes_per_loop, LoopShape::default())
}

pub fn build_contour_system_with(delta: f64, nodes_per_loop: usize, shape: LoopShape) -> Result<ContourSystem> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta = {delta} must lie in (0, 1)")));
    }
    if nodes_per_loop < MIN_NODES || !nodes_per_loop.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "nodes_per_loop = {nodes_per_loop} must be even and at least {MIN_NODES}"
        )));
    }
    let epsilon = EPSILON_SAFETY * epsilon_max(delta);
    if !(shape.clearance > 1.0 && shape.half_width > 0.0 && shape.half_width < 0.5 * PI) {
        return Err(Error::Config(format!("loop shape {shape:?} does not separate the loops")));
    }
    let semi_major = shape.clearance * (1.0 / epsilon).ln();
    let loops = [
        ClosedLoop::new(-1.0, nodes_per_loop, semi_major, shape.half_width),
        ClosedLoop::new(1.0, nodes_per_loop, semi_major, shape.half_width),
    ];
    let mut system = ContourSystem {
        delta,
        epsilon,
        loops,
        minus: Vec::new(),
        minus_norm: 0.0,
    };
    let corners = [(0.0, 0.0), (1.0 - delta, 0.0), (0.0, 1.0 - delta)];
    for (x, y) in corners {
        let x = x * (1.0 - 1e-12);
        let y = y * (1.0 - 1e-12);
        if !system.contains_cuts(x, y)? {
            return Err(Error::Config(format!("branch-cut images at ({x}, {y}) escape the loops")));
        }
    }
    system.minus = crate::cauchy::minus_matrix(&system.loops);
    system.minus_norm = crate::cauchy::weighted_norm(&system.minus, &system.loops);
    Ok(system)
}

impl ContourSystem {
    pub fn nodes_per_loop(&self) -> usize {
        self.loops[0].len()
    }

    pub fn total_nodes(&self) -> usize {
        self.loops[0].len() + self.loops[1].len()
    }

    /// All nodes, `Γ₀` first.
    pub fn nodes(&self) -> impl Iterator<Item = C64> + '_ {
        self.loops.iter().flat_map(|l| l.nodes.iter().copied())
    }

    /// Whether `(x, y)` lies in `D_δ`.
    pub fn admits(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x + y < 1.0 - self.delta
    }

    /// Whether both branch-cut images at `(x, y)` lie strictly inside their loops.
    pub fn contains_cuts(&self, x: f64, y: f64) -> Result<bool> {
        let (i0, i1) = branch_cut_images(x, y)?;
        let inside = |l: &ClosedLoop, iv: [f64; 2]| l.encloses(C64::new(iv[0], 0.0)) && l.encloses(C64::new(iv[1], 0.0));
        Ok(inside(&self.loops[0], i0) && inside(&self.loops[1], i1))
    }

    /// Index of the node `1/z_j` within the flattened node list.
    pub fn inverse_index(&self, j: usize) -> usize {
        let n = self.nodes_per_loop();
        let (l, i) = (j / n, j % n);
        l * n + (i + n / 2) % n
    }

    /// Index of the node `conj(z_j)` within the flattened node list.
    pub fn conjugate_index(&self, j: usize) -> usize {
        let n = self.nodes_per_loop();
        let (l, i) = (j / n, j % n);
        l * n + (n - i) % n
    }

    /// Distance from `z` to the nearest node, relative to the local spacing there.
    pub fn relative_distance(&self, z: C64) -> f64 {
        let mut best = f64::INFINITY;
        for l in &self.loops {
            for (j, &s) in l.nodes.iter().enumerate() {
                best = best.min((z - s).norm() / l.spacing(j));
            }
        }
        best
    }

    /// The discrete operator norm of `C₋` in the arc-length weighted ℓ² norm.
    pub fn minus_norm(&self) -> f64 {
        self.minus_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_examples() {
        let inf = lambda(0.3, 0.2, SpectralPoint::Infinity(Sheet::Upper)).unwrap();
        assert_eq!(inf, C64::new(1.0, 0.0));
        let zero = lambda(0.3, 0.2, SpectralPoint::finite(C64::new(0.8, 0.0), Sheet::Lower)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let l = lambda(0.0, 0.0, SpectralPoint::finite(C64::new(2.0, 0.0), Sheet::Upper)).unwrap();
        assert_abs_diff_eq!(l.re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(
            lambda(0.3, 0.2, SpectralPoint::finite(C64::new(0.5, 0.0), Sheet::Upper)),
            Err(Error::BranchCut(C64::new(0.5, 0.0)))
        );
        assert_eq!(
            lambda(0.3, 0.2, SpectralPoint::finite(C64::new(0.3, 0.0), Sheet::Upper)),
            Err(Error::Pole)
        );
    }

    #[test]
    fn sphere_examples() {
        let z = to_sphere(0.1, 0.2, SpectralPoint::Infinity(Sheet::Lower)).unwrap();
        assert_eq!(z, SpherePoint::Finite(C64::new(0.0, 0.0)));
        let z = to_sphere(0.1, 0.2, SpectralPoint::finite(C64::new(0.1, 0.0), Sheet::Upper)).unwrap();
        assert_eq!(z, SpherePoint::Finite(C64::new(-1.0, 0.0)));
        let z = to_sphere(0.1, 0.2, SpectralPoint::finite(C64::new(0.8, 0.0), Sheet::Upper)).unwrap();
        assert_eq!(z, SpherePoint::Finite(C64::new(1.0, 0.0)));
        let p = from_sphere(0.25, 0.25, SpherePoint::Finite(C64::new(3.0, 0.0))).unwrap();
        match p {
            SpectralPoint::Finite { k, sheet } => {
                assert_abs_diff_eq!(k.re, 11.0 / 12.0, epsilon = 1e-15);
                assert_eq!(k.im, 0.0);
                assert_eq!(sheet, Sheet::Upper);
            }
            _ => panic!("expected a finite point"),
        }
        assert_eq!(
            from_sphere(0.1, 0.1, SpherePoint::Finite(C64::new(0.0, 0.0))).unwrap(),
            SpectralPoint::Infinity(Sheet::Lower)
        );
        let on_circle = C64::from_polar(1.0, 0.7);
        assert_eq!(
            from_sphere(0.1, 0.1, SpherePoint::Finite(on_circle)),
            Err(Error::SheetAmbiguity(on_circle))
        );
    }

    #[test]
    fn cut_images() {
        let (i0, i1) = branch_cut_images(0.0, 0.0).unwrap();
        assert_eq!(i0, [-1.0, -1.0]);
        assert_eq!(i1, [1.0, 1.0]);
        let (i0, _) = branch_cut_images(0.25, 0.25).unwrap();
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(i0[0], -(2.0 + r3), epsilon = 1e-14);
        assert_abs_diff_eq!(i0[1], -(2.0 - r3), epsilon = 1e-14);
        assert!(branch_cut_images(0.6, 0.4).is_err());
    }

    #[test]
    fn epsilon_for_delta_02() {
        assert_abs_diff_eq!(epsilon_max(0.2), 0.055728090000841, epsilon = 1e-12);
        let c = build_contour_system(0.2, 32).unwrap();
        assert_abs_diff_eq!(c.epsilon, 0.0278640450004205, epsilon = 1e-12);
        assert!(c.contains_cuts(0.4, 0.4 - 1e-12).unwrap());
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(build_contour_system(0.0, 64).is_err());
        assert!(build_contour_system(0.2, 15).is_err());
        assert!(build_contour_system(0.2, 34).is_ok());
        assert!(build_contour_system(0.2, 35).is_err());
    }

    #[test]
    fn node_sets_close_under_involutions() {
        let c = build_contour_system(0.2, 64).unwrap();
        let nodes: Vec<C64> = c.nodes().collect();
        for (j, &z) in nodes.iter().enumerate() {
            let inv = nodes[c.inverse_index(j)];
            let cj = nodes[c.conjugate_index(j)];
            assert!((inv - 1.0 / z).norm() <= 1e-12 * (1.0 + inv.norm()));
            assert!((cj - z.conj()).norm() <= 1e-12 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn loops_are_clockwise_and_separate() {
        let c = build_contour_system(0.2, 128).unwrap();
        for l in &c.loops {
            let mut area = 0.0;
            for j in 0..l.len() {
                let z = l.nodes[j];
                area += 0.5 * (z.conj() * l.tangents[j]).im * l.weight;
            }
            assert!(area < 0.0);
            assert!(!l.encloses(C64::new(0.0, 0.0)));
        }
        for &z in &c.loops[0].nodes {
            assert!(z.re < 0.0 && !c.loops[1].encloses(z));
        }
    }

    #[test]
    fn edge_functions_match_k_plane_branches() {
        let (x, y) = (0.3, 0.25);
        let e = SphereEdges::new(x, y).unwrap();
        for &z in &[C64::new(2.5, 1.7), C64::new(-0.3, 0.2), C64::new(0.1, -3.0), C64::new(-4.0, -0.5)] {
            let p = from_sphere(x, y, SpherePoint::Finite(z)).unwrap();
            let (k, s) = match p {
                SpectralPoint::Finite { k, sheet } => (k, sheet.sign()),
                _ => unreachable!(),
            };
            for &xp in &[0.0, 0.1, 0.3] {
                let direct = ((k - 1.0) / (k - xp)).sqrt() * s;
                assert!((e.lambda_x_edge(xp, z) - direct).norm() < 1e-12);
            }
            for &yp in &[0.0, 0.2, 0.25] {
                let direct = (k / (k - (1.0 - yp))).sqrt() * s;
                assert!((e.inv_lambda_y_edge(yp, z) - direct).norm() < 1e-12);
            }
            let lz = lambda(x, y, p).unwrap();
            assert!((lz - (z - 1.0) / (z + 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn k_derivatives_match_differences() {
        let z = C64::new(1.3, -0.7);
        let (dx, dy) = k_derivatives(z);
        let h = 1e-6;
        let fx = (k_projection(0.2 + h, 0.3, z) - k_projection(0.2 - h, 0.3, z)) / (2.0 * h);
        let fy = (k_projection(0.2, 0.3 + h, z) - k_projection(0.2, 0.3 - h, z)) / (2.0 * h);
        assert!((dx - fx).norm() < 1e-8 && (dy - fy).norm() < 1e-8);
    }
}
