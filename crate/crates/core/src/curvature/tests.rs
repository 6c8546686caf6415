use std::f64::consts::{FRAC_PI_4, PI, TAU};

use super::*;
use crate::ambient::{AmbientModel, ModelKind, Potential, PotentialTerm};
use crate::lagmesh::shapes;

fn flat1() -> AmbientModel {
    AmbientModel::flat(1).unwrap()
}

fn sphere() -> AmbientModel {
    AmbientModel::round_sphere(1.0).unwrap()
}

fn circle(n: usize) -> LagrangianMesh {
    LagrangianMesh::build_loop(&flat1(), shapes::circle(0.0, 0.0, 1.0, 1), n).unwrap()
}

fn latitude(theta: f64, n: usize) -> LagrangianMesh {
    LagrangianMesh::build_loop(&sphere(), shapes::latitude(theta), n).unwrap()
}

fn potential_model() -> AmbientModel {
    let torus = AmbientModel::square_torus(2).unwrap();
    let ModelKind::FlatTorus { n, lattice } = torus.kind().clone() else { unreachable!() };
    AmbientModel::new(ModelKind::PotentialKahler {
        base: Box::new(ModelKind::FlatTorus { n, lattice }),
        potential: Potential(vec![
            PotentialTerm::Fourier { amplitude: 1.0, wavevector: vec![1.0, 0.0, 0.0, 1.0], phase: 0.3 },
            PotentialTerm::Fourier { amplitude: 0.6, wavevector: vec![0.0, 1.0, 1.0, 0.0], phase: -0.4 },
        ]),
        epsilon: 0.15,
    })
    .unwrap()
}

fn moser_torus(n: usize) -> LagrangianMesh {
    let model = potential_model();
    let flat = shapes::real_torus(&AmbientModel::square_torus(2).unwrap(), [0.2, -0.1]);
    LagrangianMesh::build_torus_grid(&model, shapes::moser_image(&model, flat, 24), n, n).unwrap()
}

#[test]
fn affine_plane_is_totally_geodesic() {
    let model = AmbientModel::square_torus(2).unwrap();
    let mesh = LagrangianMesh::build_torus_grid(&model, shapes::real_torus(&model, [0.0, 0.0]), 16, 16).unwrap();
    for s in second_fundamental_form(&mesh).unwrap() {
        assert!(s.components.iter().all(|c| c.amax() < 1e-12));
    }
    assert!(mean_curvature_one_form(&mesh).unwrap().max_abs() < 1e-12);
}

#[test]
fn unit_circle_has_unit_curvature() {
    let mesh = circle(256);
    let sff = second_fundamental_form(&mesh).unwrap();
    for s in &sff {
        // discrete curvature is 1 + h^2/4 + O(h^4)
        let h = TAU / 256.0;
        assert!((s.mean.norm() - 1.0 - h * h / 4.0).abs() < 1e-7);
        assert!(s.tangential < 1e-10);
    }
    let total: f64 = mean_curvature_one_form(&mesh).unwrap().values.iter().sum();
    assert!((total - TAU).abs() < 1e-3);
}

#[test]
fn equator_is_geodesic() {
    // the discrete mean curvature of the equator is h^2/4 + O(h^4)
    for n in [128, 256] {
        let h = TAU / n as f64;
        let mesh = latitude(PI / 2.0, n);
        let g = sphere().metric_at(&mesh.vertices()[0]).unwrap();
        for s in second_fundamental_form(&mesh).unwrap() {
            let norm = s.mean.dot(&(&g * &s.mean)).sqrt();
            assert!((norm - h * h / 4.0).abs() < h.powi(4), "{norm}");
        }
    }
}

#[test]
fn latitude_period_is_cosine() {
    let err = |n| {
        let total: f64 = mean_curvature_one_form(&latitude(FRAC_PI_4, n)).unwrap().values.iter().sum();
        (total - TAU * FRAC_PI_4.cos()).abs()
    };
    let (a, b) = (err(64), err(128));
    assert!(a < 1e-2);
    assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
}

#[test]
fn gauss_bonnet_on_a_wavy_sphere_loop() {
    // theta(phi) = pi/2 + 0.2 cos 3phi encloses (on its right, around the chart pole) area
    // int (1 - cos theta) dphi = 2 pi exactly, since int cos(theta) dphi vanishes by symmetry
    let total = |n| -> f64 {
        let mesh = LagrangianMesh::build_loop(&sphere(), shapes::perturbed_equator(0.2, 3), n).unwrap();
        mean_curvature_one_form(&mesh).unwrap().values.iter().sum()
    };
    let (a, b) = (total(128).abs(), total(256).abs());
    assert!(a < 1e-2, "{a}");
    assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
}

#[test]
fn circle_prop9_converges_at_second_order() {
    let a = verify_prop9(&circle(256)).unwrap();
    let b = verify_prop9(&circle(512)).unwrap();
    assert!(a.prop9_residual < 1e-3);
    let ratio = a.prop9_residual / b.prop9_residual;
    assert!((3.0..5.0).contains(&ratio), "{} {}", a.prop9_residual, b.prop9_residual);
    assert!(a.ricci_residual.is_none());
}

#[test]
fn equator_prop9_is_trivial() {
    let r = verify_prop9(&latitude(PI / 2.0, 256)).unwrap();
    assert!(r.alpha_h.max_abs() < 1e-5);
    assert!(r.eta.max_abs() < 1e-9);
    assert!(r.prop9_residual < 1e-3);
}

#[test]
fn wavy_sphere_loop_prop9_converges() {
    let res = |n| {
        let mesh = LagrangianMesh::build_loop(&sphere(), shapes::perturbed_equator(0.3, 2), n).unwrap();
        verify_prop9(&mesh).unwrap().prop9_residual
    };
    let (a, b) = (res(128), res(256));
    assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
}

#[test]
fn potential_torus_carries_ricci_curvature_and_matches() {
    let coarse = moser_torus(24);
    let fine = moser_torus(48);
    let rho = ricci_face_integrals(&fine).unwrap();
    assert!(rho.max_abs() > 1e-4, "Ricci form restricts to zero");
    let (a, b) = (verify_ricci_identity(&coarse).unwrap(), verify_ricci_identity(&fine).unwrap());
    assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
    let (p, q) = (verify_prop9(&coarse).unwrap().prop9_residual, verify_prop9(&fine).unwrap().prop9_residual);
    assert!((3.0..5.0).contains(&(p / q)), "{p} {q}");
}

#[test]
fn flat_tori_satisfy_the_ricci_identity_trivially() {
    let mesh =
        LagrangianMesh::build_torus_grid(&AmbientModel::flat(2).unwrap(), shapes::product_torus(1.0, 0.7), 32, 32)
            .unwrap();
    assert!(verify_ricci_identity(&mesh).unwrap() < 1e-10);
}

#[test]
fn ricci_identity_needs_faces() {
    assert!(matches!(verify_ricci_identity(&circle(32)), Err(Error::Degree(_))));
}

#[test]
fn minimality_classification_on_the_sphere() {
    let great = minimality_report(&latitude(PI / 2.0, 256)).unwrap();
    assert!(great.l_minimal && great.h_minimal);
    let lat = minimality_report(&latitude(1.0, 128)).unwrap();
    assert!(!lat.l_minimal && lat.h_minimal, "{lat:?}");
    let wavy = LagrangianMesh::build_loop(&sphere(), shapes::perturbed_equator(0.2, 3), 128).unwrap();
    let w = minimality_report(&wavy).unwrap();
    assert!(!w.l_minimal && !w.h_minimal);
}

#[test]
fn hodge_parts_match_the_connection() {
    let c = hodge_match(&circle(128), &DecomposeOptions::default()).unwrap();
    assert_eq!(c.maslov, vec![1]);
    assert!(c.period_residual < 1e-3);

    let model = AmbientModel::square_torus(1).unwrap();
    let line = LagrangianMesh::build_loop(&model, shapes::straight_line(&model, [0.0, 0.5], 1, 0), 32).unwrap();
    let l = hodge_match(&line, &DecomposeOptions::default()).unwrap();
    assert!(l.period_residual < 1e-12 && l.alpha_periods[0].abs() < 1e-12);

    let lat = hodge_match(&latitude(FRAC_PI_4, 128), &DecomposeOptions::default()).unwrap();
    assert_eq!(lat.maslov, vec![1]);
    assert!((lat.alpha_periods[0] - FRAC_PI_4.cos()).abs() < 1e-3);
    assert!(lat.period_residual < 1e-3);
}

#[test]
fn potential_torus_coexact_parts_agree() {
    let m = hodge_match(&moser_torus(32), &DecomposeOptions::default()).unwrap();
    assert!(m.coexact_residual < 5e-2, "{}", m.coexact_residual);
    assert!(m.period_residual < 1e-2, "{}", m.period_residual);
}

#[test]
fn curvature_report_serializes() {
    let r = verify_prop9(&circle(32)).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("prop9_residual"));
}
