use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crate::boundary_data::{make_boundary_datum, Axis, BoundaryDatum, DatumKind, DatumSpec};
use crate::cauchy::cauchy_minus;
use crate::diagnostics::gw_admissibility;
use crate::euler_darboux::abel_solution;
use crate::exact_solutions::{boundary_data_of, ExactId};
use crate::geometry::build_contour_system;
use crate::rh_solver::{assemble_jump, GoursatData};
use crate::volterra::{phi0_on_sphere, phi1_on_sphere, Mat2};

fn exact_id() -> impl Strategy<Value = ExactId> {
    prop_oneof![Just(ExactId::KhanPenrose), Just(ExactId::NutkuHalil)]
}

/// `E = 1 + 2m√t` with complex corner coefficient `m`.
fn ramp(m: C64) -> BoundaryDatum {
    BoundaryDatum::from_fns(
        DatumKind::Ernst,
        0.5,
        Arc::new(move |t: f64| 1.0 + 2.0 * m * t.sqrt()),
        Arc::new(move |_| m),
        "ramp",
    )
    .unwrap()
}

fn poly(coeffs: Vec<f64>) -> BoundaryDatum {
    make_boundary_datum(&DatumSpec::CollinearPoly { coeffs, alpha: 0.0 }, Axis::X).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenfunction_determinant_is_real_part(id in exact_id(), s in 0.1f64..1.0, x in 0.01f64..0.35, y in 0.01f64..0.35, re in -3.0f64..3.0, im in 0.1f64..3.0) {
        let (dx, dy) = boundary_data_of(id);
        let (dx, dy) = (dx.powered(s).unwrap(), dy.powered(s).unwrap());
        let zs = [C64::new(re, im), C64::new(re, -im)];
        for m in phi0_on_sphere(&dx, x, y, &zs).unwrap() {
            prop_assert!((m.determinant() - dx.value(x).re).norm() < 1e-8);
        }
        for m in phi1_on_sphere(&dy, x, y, &zs).unwrap() {
            prop_assert!((m.determinant() - dy.value(y).re).norm() < 1e-8);
        }
    }

    #[test]
    fn jump_symmetries_hold(id in exact_id(), x in 0.01f64..0.39, y in 0.01f64..0.39) {
        let cs = build_contour_system(0.2, 32).unwrap();
        let (dx, dy) = boundary_data_of(id);
        let jump = assemble_jump(x, y, &GoursatData::new(dx, dy), &cs).unwrap();
        prop_assert!(jump.symmetry_residual(&cs) < 1e-8);
        prop_assert!(jump.det_residual(&cs) < 1e-8);
    }

    #[test]
    fn admissibility_depends_on_modulus_only(r in 0.5f64..2.0, theta in -3.1f64..3.1) {
        let kp = boundary_data_of(ExactId::KhanPenrose).1;
        let a = gw_admissibility(&ramp(C64::new(r, 0.0)), &kp).unwrap();
        let b = gw_admissibility(&ramp(C64::from_polar(r, theta)), &kp).unwrap();
        prop_assert_eq!(a.admissible, b.admissible);
        prop_assert!((a.k2 - b.k2).abs() < 1e-9 && (a.k2 - r * r / 2.0).abs() < 1e-6);
    }

    #[test]
    fn abel_solution_is_linear(a in prop::collection::vec(-1.0f64..1.0, 1..4), b in prop::collection::vec(-1.0f64..1.0, 1..4), s in -2.0f64..2.0, x in 0.0f64..0.4, y in 0.0f64..0.4) {
        let sum: Vec<f64> = (0..a.len().max(b.len())).map(|k| a.get(k).unwrap_or(&0.0) + s * b.get(k).unwrap_or(&0.0)).collect();
        let zero = make_boundary_datum(&DatumSpec::CollinearPoly { coeffs: vec![], alpha: 0.0 }, Axis::Y).unwrap();
        let va = abel_solution(x, y, &GoursatData::new(poly(a), zero.clone())).unwrap();
        let vb = abel_solution(x, y, &GoursatData::new(poly(b), zero.clone())).unwrap();
        let vs = abel_solution(x, y, &GoursatData::new(poly(sum), zero)).unwrap();
        prop_assert!((vs - va - s * vb).abs() < 1e-9);
    }

    #[test]
    fn cauchy_minus_is_linear(k in 0usize..256, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let cs = build_contour_system(0.2, 64).unwrap();
        let nodes: Vec<C64> = cs.nodes().collect();
        let f: Vec<Mat2> = nodes.iter().map(|&z| Mat2::identity() / (z - 3.0)).collect();
        let g: Vec<Mat2> = nodes.iter().map(|&z| Mat2::identity() * (z / (z + 2.5))).collect();
        let h: Vec<Mat2> = f.iter().zip(&g).map(|(f, g)| f * C64::new(a, 0.0) + g * C64::new(0.0, b)).collect();
        let (cf, cg, ch) = (cauchy_minus(&f, &cs), cauchy_minus(&g, &cs), cauchy_minus(&h, &cs));
        let k = k % nodes.len();
        prop_assert!((ch[k] - cf[k] * C64::new(a, 0.0) - cg[k] * C64::new(0.0, b)).norm() < 1e-12);
    }
}
