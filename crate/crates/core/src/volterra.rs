//! Eigenfunctions `Φ₀(x, ·)` and `Φ₁(y, ·)` along the two characteristics.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::boundary_data::BoundaryDatum;
use crate::error::{Error, Result};
use crate::geometry::{SpectralPoint, SphereEdges};

type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Relative tolerance of the eigenfunction integration.
pub const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-14;
const MAX_STEPS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSample {
    pub at: SpectralPoint,
    pub matrix: Mat2,
}

/// Which characteristic the coefficient lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Edge {
    X,
    Y,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dΦ/dt = M(t, P)Φ`, `Φ(0) = I` for a stacked family of probes.
///
/// `coeff(t, out)` fills the off-diagonal multiplier (`λ` or `1/λ`) of every
/// probe at the characteristic parameter `t`.
fn integrate_family<F>(datum: &BoundaryDatum, target: f64, n: usize, coeff: F) -> Result<Vec<Mat2>>
where
    F: Fn(f64, &mut [C64]),
{
    let mut state = vec![Mat2::identity(); n];
    if target <= 0.0 || n == 0 || datum.is_zero() {
        return Ok(state);
    }
    let jac = 1.0 / (1.0 - datum.alpha);
    let tau_end = datum.tau_of(target);
    let mut mult = vec![C64::new(0.0, 0.0); n];
    let rhs = |tau: f64, y: &[Mat2], out: &mut [Mat2], mult: &mut [C64]| {
        let t = datum.t_of(tau).min(target);
        let r = datum.regular_part(t);
        let scale = jac / (2.0 * datum.value(t).re);
        let (rc, rr) = (r.conj() * scale, r * scale);
        coeff(t, mult);
        for ((o, phi), &l) in out.iter_mut().zip(y).zip(mult.iter()) {
            let m = Mat2::new(rc, rc * l, rr * l, rr);
            *o = m * phi;
        }
    };

    let mut k: Vec<Vec<Mat2>> = vec![vec![Mat2::zeros(); n]; 7];
    let mut stage = vec![Mat2::zeros(); n];
    let mut tau = 0.0;
    let mut h = tau_end / 64.0;
    rhs(tau, &state, &mut k[0], &mut mult);
    let mut steps = 0;
    while tau < tau_end {
        if steps >= MAX_STEPS {
            return Err(Error::Integrator(format!("step budget exhausted at tau = {tau}")));
        }
        steps += 1;
        let last = tau + h >= tau_end;
        if last {
            h = tau_end - tau;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = state[i];
                for (r, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        acc += k[r][i] * C64::new(h * a, 0.0);
                    }
                }
                stage[i] = acc;
            }
            rhs(tau + C[s] * h, &stage, &mut k[s], &mut mult);
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = Mat2::zeros();
            for (r, c) in E.iter().enumerate() {
                if *c != 0.0 {
                    e += k[r][i] * C64::new(h * c, 0.0);
                }
            }
            for (ev, yv) in e.iter().zip(stage[i].iter()) {
                err = err.max(ev.norm() / (ATOL + RTOL * yv.norm()));
            }
        }
        if !err.is_finite() {
            return Err(Error::Integrator(format!("non-finite state at tau = {tau}")));
        }
        if err <= 1.0 {
            tau = if last { tau_end } else { tau + h };
            state.copy_from_slice(&stage);
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * tau_end.max(1.0) && tau < tau_end {
            return Err(Error::Integrator(format!("step size underflow at tau = {tau}")));
        }
    }
    Ok(state)
}

fn check_off_interval(p: &SpectralPoint, lo: f64, hi: f64) -> Result<()> {
    if let SpectralPoint::Finite { k, .. } = *p {
        if k.im == 0.0 && k.re >= lo && k.re <= hi {
            return Err(Error::ForbiddenInterval(k));
        }
    }
    Ok(())
}

/// `Φ₀(x_target, P)` for points of `S_(x,0)`, from `dΦ₀/dx = U₀Φ₀`.
pub fn integrate_phi0(datum: &BoundaryDatum, x_target: f64, points: &[SpectralPoint]) -> Result<Vec<EigenSample>> {
    spectral_family(datum, x_target, points, Edge::X)
}

/// `Φ₁(y_target, P)` for points of `S_(0,y)`, from `dΦ₁/dy = V₁Φ₁`.
pub fn integrate_phi1(datum: &BoundaryDatum, y_target: f64, points: &[SpectralPoint]) -> Result<Vec<EigenSample>> {
    spectral_family(datum, y_target, points, Edge::Y)
}

fn spectral_family(datum: &BoundaryDatum, target: f64, points: &[SpectralPoint], edge: Edge) -> Result<Vec<EigenSample>> {
    for p in points {
        match edge {
            Edge::X => check_off_interval(p, 0.0, target)?,
            Edge::Y => check_off_interval(p, 1.0 - target, 1.0)?,
        }
    }
    let coeff = |t: f64, out: &mut [C64]| {
        for (o, p) in out.iter_mut().zip(points) {
            *o = match *p {
                SpectralPoint::Infinity(s) => C64::new(s.sign(), 0.0),
                SpectralPoint::Finite { k, sheet } => {
                    let q = match edge {
                        Edge::X => (k - 1.0) / (k - t),
                        Edge::Y => k / (k - (1.0 - t)),
                    };
                    q.sqrt() * sheet.sign()
                }
            };
        }
    };
    let mats = integrate_family(datum, target, points.len(), coeff)?;
    Ok(points.iter().zip(mats).map(|(&at, matrix)| EigenSample { at, matrix }).collect())
}

/// `Φ₀(x, F⁻¹(z))` at sphere points `z` of `S_(x,y)`.
pub fn phi0_on_sphere(datum: &BoundaryDatum, x: f64, y: f64, zs: &[C64]) -> Result<Vec<Mat2>> {
    let edges = SphereEdges::new(x, y)?;
    let num: Vec<C64> = zs.iter().map(|&z| edges.x_numerator(z)).collect();
    integrate_family(datum, x, zs.len(), |t, out| {
        for ((o, &z), &nu) in out.iter_mut().zip(zs).zip(&num) {
            *o = nu / edges.x_denominator(t, z);
        }
    })
}

/// `Φ₁(y, F⁻¹(z))` at sphere points `z` of `S_(x,y)`.
pub fn phi1_on_sphere(datum: &BoundaryDatum, x: f64, y: f64, zs: &[C64]) -> Result<Vec<Mat2>> {
    let edges = SphereEdges::new(x, y)?;
    let num: Vec<C64> = zs.iter().map(|&z| edges.y_numerator(z)).collect();
    integrate_family(datum, y, zs.len(), |t, out| {
        for ((o, &z), &nu) in out.iter_mut().zip(zs).zip(&num) {
            *o = nu / edges.y_denominator(t, z);
        }
    })
}

/// `Φ₁(y, 0) = diag(exp ∫ conj(E₁′)/(2 Re E₁), exp ∫ E₁′/(2 Re E₁))`.
pub fn phi1_at_branch_zero(datum: &BoundaryDatum, y: f64) -> Result<Mat2> {
    let b = datum.integrate_against(y, 1e-13, |r, v| r / (2.0 * v.re))?;
    Ok(Mat2::new(b.conj().exp(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), b.exp()))
}

/// `Φ(∞⁺) = ½ [[conj E, 1], [E, −1]]·[[1, 1], [1, −1]]`.
pub fn phi_at_infinity_closed_form(e: C64) -> Mat2 {
    let one = C64::new(1.0, 0.0);
    Mat2::new(e.conj() + one, e.conj() - one, e - one, e + one) * C64::new(0.5, 0.0)
}
