use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DVector;

use super::basis::{polynomials, random_fourier, sphere_monomials, torus_fourier};
use super::*;
use crate::ambient::AmbientModel;
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

fn elliptic_line(n: usize) -> LagrangianMesh {
    let model = AmbientModel::square_torus(1).unwrap();
    LagrangianMesh::build_loop(&model, shapes::straight_line(&model, [0.0, 0.3], 1, 0), n).unwrap()
}

fn enclosed_area(mesh: &LagrangianMesh) -> f64 {
    let v = mesh.vertices();
    let n = v.len();
    0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
}

#[test]
fn constant_function_is_the_identity_flow() {
    let mesh = circle(32);
    let f = Hamiltonian(vec![HamiltonianTerm::Chart(crate::ambient::PotentialTerm::Monomial {
        coefficient: 3.0,
        powers: vec![0, 0],
    })]);
    let (out, trace) = hamiltonian_deform(&mesh, &f, 0.1, 3).unwrap();
    assert_eq!(out.id(), mesh.id());
    assert_eq!(trace.records.len(), 4);
}

#[test]
fn rotation_flow_rotates_the_circle() {
    // X_f for |z|^2/2 is the unit-speed rotation; after time T every vertex has turned by T
    let mesh = LagrangianMesh::build_loop(&flat1(), shapes::circle(0.3, 0.0, 1.0, 1), 64).unwrap();
    let (eps, steps) = (0.01, 50);
    let (out, trace) = hamiltonian_deform(&mesh, &Hamiltonian::rotation(), eps, steps).unwrap();
    let angle = eps * steps as f64;
    let (c, s) = (angle.cos(), angle.sin());
    let mut worst = 0.0_f64;
    for (a, b) in mesh.vertices().iter().zip(out.vertices()) {
        let plus = DVector::from_vec(vec![c * a[0] - s * a[1], s * a[0] + c * a[1]]);
        let minus = DVector::from_vec(vec![c * a[0] + s * a[1], -s * a[0] + c * a[1]]);
        worst = worst.max((b - plus).norm().min((b - minus).norm()));
    }
    // midpoint rule: phase error T eps^2 / 6
    assert!(worst < 2.0 * angle * eps * eps / 6.0, "{worst}");
    let v0 = trace.records[0].volume;
    for r in &trace.records {
        assert!((r.volume - v0).abs() < 1e-6 * v0);
        assert_eq!(r.maslov.as_deref(), Some(&[1][..]));
    }
}

#[test]
fn random_flows_keep_the_elliptic_maslov_class() {
    let mesh = elliptic_line(64);
    let f = random_fourier(mesh.model(), 2, 3, 0.02, 7).unwrap();
    let (_, trace) = hamiltonian_deform(&mesh, &f, 0.05, 50).unwrap();
    assert_eq!(trace.records.len(), 51);
    assert_eq!(trace.maslov_values(), vec![vec![0]]);
    assert!(trace.records.iter().all(|r| r.bohr_sommerfeld.is_some()));
}

#[test]
fn elliptic_invariance_experiment() {
    let mesh = elliptic_line(64);
    let family: Vec<Generator> =
        (0..5).map(|s| Generator::hamiltonian(random_fourier(mesh.model(), 2, 3, 0.02, 100 + s).unwrap())).collect();
    let report = invariance_experiment(&mesh, &family, 50, 0.05, &FlowOptions::default()).unwrap();
    assert!(report.maslov_invariant && !report.aborted);
    assert_eq!(report.runs.len(), 5);
    for run in &report.runs {
        assert_eq!(run.steps_completed, 50);
        // flat ambient: periods are fixed by isodrasticity alone
        assert!(run.period_drift < 1e-6, "{}", run.period_drift);
    }
}

#[test]
fn area_preserving_flow_keeps_the_equator_bohr_sommerfeld() {
    let mesh = LagrangianMesh::build_loop(&sphere(), shapes::latitude(FRAC_PI_2), 128).unwrap();
    let f = Hamiltonian(vec![HamiltonianTerm::Embedding { embedding: [1, 0, 1], coefficient: 1.0 }]);
    let report = invariance_experiment(&mesh, &[Generator::hamiltonian(f)], 20, 0.02, &FlowOptions::default()).unwrap();
    let run = &report.runs[0];
    assert!(run.constant);
    // swept area is zero, so the period drift is only discretization error
    assert!(run.period_drift < 1e-3, "{}", run.period_drift);
    assert!(run.trace.records.iter().all(|r| r.bohr_sommerfeld == Some(true) || r.fractional.is_some()));
    let moved = run.trace.last().unwrap();
    assert!(moved.l_norm > 1e-3, "the flow should bend the loop");
}

#[test]
fn flux_flow_matches_the_swept_area() {
    let mesh = circle(128);
    let rate = 0.4;
    let (out, _) = deform(&mesh, &Generator::Flux { cycle: 0, rate }, 0.05, 10, &FlowOptions::default()).unwrap();
    let swept = enclosed_area(&out) - enclosed_area(&mesh);
    assert!((swept.abs() - rate * 0.5).abs() < 1e-3, "{swept}");
}

#[test]
fn sphere_flux_drift_equals_swept_area() {
    // on the unit sphere the period of a loop is 2 pi minus the area on its right
    let mesh = LagrangianMesh::build_loop(&sphere(), shapes::latitude(0.8), 128).unwrap();
    let (out, trace) =
        deform(&mesh, &Generator::Flux { cycle: 0, rate: 0.3 }, 0.05, 4, &FlowOptions::default()).unwrap();
    let theta = |m: &LagrangianMesh| 2.0 * m.vertices()[0].norm().atan();
    let area = |t: f64| TAU * (1.0 - t.cos());
    let swept = area(theta(&out)) - area(theta(&mesh));
    let drift = trace.last().unwrap().periods.as_ref().unwrap()[0] - trace.records[0].periods.as_ref().unwrap()[0];
    assert!((drift + swept).abs() < 5e-3, "{drift} {swept}");
    assert!((swept.abs() - 0.3 * 0.2).abs() < 5e-3, "{swept}");
}

#[test]
fn non_isodrastic_flow_crosses_the_half_integer_boundary() {
    let mesh = LagrangianMesh::build_loop(&sphere(), shapes::latitude(0.85), 128).unwrap();
    let family = [Generator::Flux { cycle: 0, rate: 1.0 }, Generator::Flux { cycle: 0, rate: -1.0 }];
    let report = invariance_experiment(&mesh, &family, 60, 0.05, &FlowOptions::default()).unwrap();
    assert!(report.aborted);
    let tripped: Vec<_> = report.runs.iter().filter(|r| r.guard_trip.is_some()).collect();
    assert_eq!(tripped.len(), 1);
    let run = tripped[0];
    assert!(run.constant);
    assert_eq!(run.initial_maslov, vec![1]);
    let reentry = run.reentry.as_ref().expect("flow should leave the margin again");
    assert_eq!(reentry.jump.iter().map(|j| j.abs()).sum::<i64>(), 1);
    assert!(run.trace.records.iter().any(|r| r.maslov.is_none()));
}

#[test]
fn large_steps_on_a_torus_are_rejected() {
    let model = AmbientModel::flat(2).unwrap();
    let mesh = LagrangianMesh::build_torus_grid(&model, shapes::product_torus(1.0, 1.0), 32, 32).unwrap();
    let f = Hamiltonian(vec![HamiltonianTerm::Chart(crate::ambient::PotentialTerm::Monomial {
        coefficient: 1.0,
        powers: vec![2, 0, 1, 1],
    })]);
    match deform(&mesh, &Generator::hamiltonian(f.clone()), 0.3, 3, &FlowOptions::default()) {
        Err(Error::StepRejected { suggested, .. }) => assert!((suggested - 0.15).abs() < 1e-15),
        other => panic!("expected a rejected step, got {other:?}"),
    }
    assert!(deform(&mesh, &Generator::hamiltonian(f), 1e-4, 2, &FlowOptions::default()).is_ok());
}

#[test]
fn embedding_gradients_match_differences() {
    let f = Hamiltonian(vec![
        HamiltonianTerm::Embedding { embedding: [2, 1, 1], coefficient: 0.7 },
        HamiltonianTerm::Embedding { embedding: [0, 3, 0], coefficient: -1.1 },
    ]);
    for chart in [Chart::Standard, Chart::Antipodal] {
        let p = DVector::from_vec(vec![0.4, -0.7]);
        let g = f.gradient(chart, &p);
        for i in 0..2 {
            let h = 1e-6;
            let mut a = p.clone();
            let mut b = p.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (f.value(chart, &a) - f.value(chart, &b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
    // w = 1/z describes the same point
    let z = DVector::from_vec(vec![0.4, -0.7]);
    let r2 = z.norm_squared();
    let w = DVector::from_vec(vec![z[0] / r2, -z[1] / r2]);
    assert!((f.value(Chart::Standard, &z) - f.value(Chart::Antipodal, &w)).abs() < 1e-12);
}

#[test]
fn basis_sizes() {
    assert_eq!(sphere_monomials(8).len(), 80);
    assert_eq!(polynomials(2, 8).len(), 44);
    let torus = AmbientModel::square_torus(1).unwrap();
    assert_eq!(torus_fourier(&torus, 2).unwrap().len(), 24);
    for f in torus_fourier(&torus, 2).unwrap() {
        let p = DVector::from_vec(vec![0.3, 0.8]);
        let q = &p + torus.lattice().unwrap().column(1);
        assert!((f.value(Chart::Standard, &p) - f.value(Chart::Standard, &q)).abs() < 1e-12);
    }
    assert!(torus_fourier(&flat1(), 1).is_err());
}

#[test]
fn embedding_terms_need_a_sphere() {
    let f = sphere_monomials(1).remove(0);
    assert!(matches!(hamiltonian_deform(&circle(16), &f, 0.1, 1), Err(Error::UnsupportedModel(_))));
}

#[test]
fn perturbed_great_circle_descends_to_a_geodesic() {
    let start = shapes::sphere_curve(|phi| FRAC_PI_2 + 0.05 * (2.0 * phi).cos());
    let mesh = LagrangianMesh::build_loop(&sphere(), start, 256).unwrap();
    let out = volume_descent(&mesh, &sphere_monomials(8), &DescentOptions::default()).unwrap();
    assert!(out.converged, "L = {}", out.final_l_norm);
    assert!(out.final_l_norm < 1e-3);
    assert!(out.iterations <= 200, "{}", out.iterations);
    assert!((out.final_volume - TAU).abs() < 1e-3, "{}", out.final_volume);
    let vols: Vec<f64> = out.trace.records.iter().map(|r| r.volume).collect();
    assert!(vols.windows(2).all(|w| w[1] <= w[0] + 1e-10));
}

#[test]
fn latitude_is_stationary_for_isodrastic_descent() {
    let mesh = LagrangianMesh::build_loop(&sphere(), shapes::latitude(1.0), 128).unwrap();
    let out = volume_descent(&mesh, &sphere_monomials(6), &DescentOptions::default()).unwrap();
    assert!(out.stationary && !out.converged);
    assert_eq!(out.iterations, 0);
    assert!(out.final_l_norm > 0.1);
}

#[test]
fn circle_collapses_under_lagrangian_descent() {
    let options = DescentOptions { mode: DescentMode::Lagrangian, max_iterations: 1000, ..DescentOptions::default() };
    let out = volume_descent(&circle(64), &polynomials(2, 3), &options).unwrap();
    assert!(out.collapsed && !out.converged && !out.stagnated);
    assert!(out.final_volume < 0.05 * TAU);
    let vols: Vec<f64> = out.trace.records.iter().map(|r| r.volume).collect();
    assert!(vols.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    // the Maslov class never changes on the way down
    assert!(out.trace.maslov_values() == vec![vec![1]]);
    // isodrastic descent keeps the circle: it is already H-minimal
    let iso = volume_descent(&circle(64), &polynomials(2, 3), &DescentOptions::default()).unwrap();
    assert!(iso.stationary);
}

#[test]
fn trace_exports() {
    let (_, trace) = hamiltonian_deform(&circle(32), &Hamiltonian::rotation(), 0.1, 2).unwrap();
    let csv = trace.to_csv();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().contains(",1,"));
    let back: FlowTrace = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
    assert_eq!(back, trace);
    let json = serde_json::to_string(&Hamiltonian::rotation()).unwrap();
    let f: Hamiltonian = serde_json::from_str(&json).unwrap();
    assert_eq!(f, Hamiltonian::rotation());
    let g: Hamiltonian = serde_json::from_str(r#"[{"embedding":[1,0,1],"coefficient":2.0}]"#).unwrap();
    assert!(matches!(g.0[0], HamiltonianTerm::Embedding { .. }));
}
