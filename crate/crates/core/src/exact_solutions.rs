//! Closed-form colliding-wave solutions used as oracles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_data::{make_boundary_datum, Axis, BoundaryDatum, DatumSpec};
use crate::error::{Error, Result};
use crate::geometry::check_domain;

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactId {
    KhanPenrose,
    NutkuHalil,
}

impl ExactId {
    pub fn name(self) -> &'static str {
        match self {
            ExactId::KhanPenrose => "khan-penrose",
            ExactId::NutkuHalil => "nutku-halil",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "khan-penrose" => Some(ExactId::KhanPenrose),
            "nutku-halil" => Some(ExactId::NutkuHalil),
            _ => None,
        }
    }
}

/// `a = √x√(1−y)`, `b = √y√(1−x)` and their partial derivatives.
struct Mix {
    a: f64,
    b: f64,
    a_x: f64,
    a_y: f64,
    b_x: f64,
    b_y: f64,
}

fn mix(x: f64, y: f64) -> Mix {
    let (sx, sy, s1x, s1y) = (x.sqrt(), y.sqrt(), (1.0 - x).sqrt(), (1.0 - y).sqrt());
    Mix {
        a: sx * s1y,
        b: sy * s1x,
        a_x: s1y / (2.0 * sx),
        a_y: -sx / (2.0 * s1y),
        b_x: -sy / (2.0 * s1x),
        b_y: s1x / (2.0 * sy),
    }
}

pub fn evaluate_exact(id: ExactId, x: f64, y: f64) -> Result<C64> {
    check_domain(x, y)?;
    let m = mix(x, y);
    match id {
        ExactId::KhanPenrose => {
            let s = m.a + m.b;
            if s >= 1.0 {
                return Err(Error::Check(format!("Khan-Penrose pole at ({x}, {y})")));
            }
            Ok(C64::new((1.0 + s) / (1.0 - s), 0.0))
        }
        ExactId::NutkuHalil => {
            let t = C64::new(0.0, m.a - m.b);
            Ok((1.0 - t) / (1.0 + t))
        }
    }
}

/// `E_x` in closed form, for `x > 0`.
pub fn derivative_x(id: ExactId, x: f64, y: f64) -> Result<C64> {
    check_domain(x, y)?;
    let m = mix(x, y);
    Ok(match id {
        ExactId::KhanPenrose => {
            let s = m.a + m.b;
            C64::new(2.0 * (m.a_x + m.b_x) / (1.0 - s).powi(2), 0.0)
        }
        ExactId::NutkuHalil => {
            let d = C64::new(1.0, m.a - m.b);
            C64::new(0.0, -2.0 * (m.a_x - m.b_x)) / (d * d)
        }
    })
}

/// `E_y` in closed form, for `y > 0`.
pub fn derivative_y(id: ExactId, x: f64, y: f64) -> Result<C64> {
    check_domain(x, y)?;
    let m = mix(x, y);
    Ok(match id {
        ExactId::KhanPenrose => {
            let s = m.a + m.b;
            C64::new(2.0 * (m.a_y + m.b_y) / (1.0 - s).powi(2), 0.0)
        }
        ExactId::NutkuHalil => {
            let d = C64::new(1.0, m.a - m.b);
            C64::new(0.0, -2.0 * (m.a_y - m.b_y)) / (d * d)
        }
    })
}

/// Restrictions to `y = 0` and `x = 0`.
pub fn boundary_data_of(id: ExactId) -> (BoundaryDatum, BoundaryDatum) {
    let spec = match id {
        ExactId::KhanPenrose => DatumSpec::KhanPenrose,
        ExactId::NutkuHalil => DatumSpec::NutkuHalil,
    };
    (
        make_boundary_datum(&spec, Axis::X).expect("built-in family"),
        make_boundary_datum(&spec, Axis::Y).expect("built-in family"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::{corner_data, validate};

    #[test]
    fn reference_values() {
        assert_eq!(evaluate_exact(ExactId::KhanPenrose, 0.0, 0.0).unwrap(), C64::new(1.0, 0.0));
        let kp = evaluate_exact(ExactId::KhanPenrose, 0.25, 0.25).unwrap();
        assert!((kp.re - (7.0 + 4.0 * 3f64.sqrt())).abs() < 1e-12 && kp.im == 0.0);
        let nh = evaluate_exact(ExactId::NutkuHalil, 0.2, 0.3).unwrap();
        assert!((nh - C64::new(0.97362, 0.22843)).norm() < 1e-4, "{nh}");
        assert!((nh.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_differences() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            for i in 1..=20 {
                let x = 0.03 + 0.017 * i as f64;
                let y = 0.4 - 0.015 * i as f64;
                let h = 1e-6;
                let fx = (evaluate_exact(id, x + h, y).unwrap() - evaluate_exact(id, x - h, y).unwrap()) / (2.0 * h);
                let fy = (evaluate_exact(id, x, y + h).unwrap() - evaluate_exact(id, x, y - h).unwrap()) / (2.0 * h);
                let ex = derivative_x(id, x, y).unwrap();
                let ey = derivative_y(id, x, y).unwrap();
                assert!((fx - ex).norm() <= 1e-8 * ex.norm().max(1.0), "{id:?} x at ({x},{y})");
                assert!((fy - ey).norm() <= 1e-8 * ey.norm().max(1.0), "{id:?} y at ({x},{y})");
            }
        }
    }

    #[test]
    fn boundary_data_restrict_the_field() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            let (dx, dy) = boundary_data_of(id);
            for &t in &[0.0, 0.1, 0.5, 0.79] {
                assert!((dx.value(t) - evaluate_exact(id, t, 0.0).unwrap()).norm() < 1e-13);
                assert!((dy.value(t) - evaluate_exact(id, 0.0, t).unwrap()).norm() < 1e-13);
            }
            assert!(validate(&dx, 0.2).passed() && validate(&dy, 0.2).passed());
        }
        let (kx, ky) = boundary_data_of(ExactId::KhanPenrose);
        assert!((corner_data(&kx).unwrap().m - 1.0).norm() < 1e-8);
        assert!((corner_data(&ky).unwrap().m - 1.0).norm() < 1e-8);
        let (nx, ny) = boundary_data_of(ExactId::NutkuHalil);
        assert!((corner_data(&nx).unwrap().m - C64::new(0.0, -1.0)).norm() < 1e-8);
        assert!((corner_data(&ny).unwrap().m - C64::new(0.0, 1.0)).norm() < 1e-8);
    }

    #[test]
    fn real_part_positive_on_samples() {
        for id in [ExactId::KhanPenrose, ExactId::NutkuHalil] {
            for i in 0..40 {
                for j in 0..40 - i {
                    let (x, y) = (0.999 * i as f64 / 40.0, 0.999 * j as f64 / 40.0);
                    assert!(evaluate_exact(id, x, y).unwrap().re > 0.0);
                }
            }
        }
    }
}
