use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use serde_json::json;

use super::svg::{Chart, Series};
use super::{observed_order, scenario_names, Check, Outcome, ScenarioConfig};
use crate::ambient::{AmbientModel, ModelKind, Potential, PotentialTerm};
use crate::curvature::{
    hodge_match, mean_curvature_one_form, minimality_report, ricci_face_integrals, verify_prop9, verify_ricci_identity,
};
use crate::dec::Dec;
use crate::error::{Error, Result};
use crate::flow::basis::{polynomials, random_fourier, sphere_monomials};
use crate::flow::{
    invariance_experiment, volume_descent, DescentMode, DescentOptions, DescentOutcome, FlowOptions, FlowTrace,
    Generator,
};
use crate::lagmesh::{shapes, LagrangianMesh, Parametrization};
use crate::transport::{
    decompose_connection, half_weight, imtheta_zero_set, is_bohr_sommerfeld, relative_connection, DecomposeOptions,
    MaslovReport,
};

const ORDER_RANGE: (f64, f64) = (1.7, 2.3);

pub(super) fn dispatch(name: &str, cfg: &ScenarioConfig) -> Result<Outcome> {
    match name {
        "flat-circle" => flat_circle(cfg),
        "flat-product-torus" => flat_product_torus(cfg),
        "elliptic-line" => elliptic_line(cfg),
        "elliptic-invariance" => elliptic_invariance(cfg),
        "sphere-latitude" => sphere_latitude(cfg),
        "sphere-descent" => sphere_descent(cfg),
        "football-descent" => football_descent(cfg),
        "potential-torus-ricci" => potential_torus_ricci(cfg),
        "halfweight-demo" => halfweight_demo(cfg),
        "convergence" => convergence(cfg),
        other => Err(Error::NotApplicable(format!(
            "unknown scenario {other:?}; valid scenarios: {}",
            scenario_names().join(", ")
        ))),
    }
}

fn model_or(cfg: &ScenarioConfig, default: ModelKind) -> Result<AmbientModel> {
    AmbientModel::new(cfg.model.clone().unwrap_or(default))
}

fn decompose(mesh: &LagrangianMesh, options: &DecomposeOptions, power: u32) -> Result<MaslovReport> {
    let conn = relative_connection(mesh)?;
    decompose_connection(mesh, &conn, &DecomposeOptions { power, ..*options })
}

/// Turning number of the edge chords of cycle `axis`, projected to complex plane `plane`.
/// Clockwise turning counts as positive, matching the orientation of the built-in loops.
fn chord_winding(mesh: &LagrangianMesh, axis: usize, plane: usize) -> i64 {
    let cycle = &mesh.h1_basis()[axis];
    let angles: Vec<f64> = cycle
        .edges
        .iter()
        .map(|&(e, _)| {
            let (p, q) = mesh.edge_points(e);
            (q[2 * plane + 1] - p[2 * plane + 1]).atan2(q[2 * plane] - p[2 * plane])
        })
        .collect();
    let m = angles.len();
    let turning: f64 = (0..m)
        .map(|k| {
            let d = angles[(k + 1) % m] - angles[k];
            (d + PI).rem_euclid(TAU) - PI
        })
        .sum();
    (-turning / TAU).round() as i64
}

/// Residuals of `f` along a ladder, with table and chart.
struct Ladder {
    ns: Vec<usize>,
    columns: BTreeMap<&'static str, Vec<f64>>,
}

impl Ladder {
    fn run(ns: &[usize], mut f: impl FnMut(usize) -> Result<Vec<(&'static str, f64)>>) -> Result<Self> {
        let mut columns: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for &n in ns {
            for (name, value) in f(n)? {
                columns.entry(name).or_default().push(value);
            }
        }
        Ok(Ladder { ns: ns.to_vec(), columns })
    }

    fn order(&self, column: &str) -> f64 {
        observed_order(&self.ns, &self.columns[column])
    }

    fn last(&self, column: &str) -> f64 {
        *self.columns[column].last().unwrap()
    }

    fn csv(&self) -> String {
        let names: Vec<&str> = self.columns.keys().copied().collect();
        let mut out = format!("n,{}\n", names.join(","));
        for (i, n) in self.ns.iter().enumerate() {
            let row: Vec<String> = names.iter().map(|c| self.columns[c][i].to_string()).collect();
            let _ = writeln!(out, "{n},{}", row.join(","));
        }
        let orders: Vec<String> = names.iter().map(|c| self.order(c).to_string()).collect();
        let _ = writeln!(out, "order,{}", orders.join(","));
        out
    }

    fn chart(&self, title: &str) -> String {
        let mut chart = Chart::new(title, "resolution N", "max residual").log_log();
        for (name, values) in &self.columns {
            let pts = self.ns.iter().zip(values).map(|(&n, &r)| (n as f64, r)).collect();
            chart = chart.with(Series::new(format!("{name} (order {:.2})", self.order(name)), pts));
        }
        chart.render()
    }

    fn json(&self) -> serde_json::Value {
        let orders: BTreeMap<&str, f64> = self.columns.keys().map(|c| (*c, self.order(c))).collect();
        json!({ "resolutions": self.ns, "residuals": self.columns, "orders": orders })
    }

    fn record(&self, out: &mut Outcome, label: &str, title: &str) {
        out.data.insert(format!("{label}_ladder"), self.json());
        out.tables.push((format!("{label}-ladder"), self.csv()));
        out.charts.push((format!("{label}-ladder"), self.chart(title)));
    }
}

fn trace_chart(trace: &FlowTrace, title: &str) -> String {
    let steps = |f: &dyn Fn(&crate::flow::FlowRecord) -> f64| -> Vec<(f64, f64)> {
        trace.records.iter().map(|r| (r.step as f64, f(r))).collect()
    };
    let v0 = trace.records.first().map(|r| r.volume).unwrap_or(1.0);
    Chart::new(title, "step", "value")
        .with(Series::new("volume / initial", steps(&|r| r.volume / v0)))
        .with(Series::new("L2 norm of alpha_H", steps(&|r| r.l_norm)))
        .render()
}

fn monotone(trace: &FlowTrace) -> bool {
    trace.records.windows(2).all(|w| w[1].volume <= w[0].volume + 1e-10)
}

fn record_descent(out: &mut Outcome, label: &str, d: &DescentOutcome) -> Result<()> {
    out.put(label, d)?;
    out.tables.push((format!("{label}-trace"), d.trace.to_csv()));
    out.charts.push((format!("{label}-trace"), trace_chart(&d.trace, &d.trace.description)));
    Ok(())
}

fn loop_ladder(cfg: &ScenarioConfig) -> Vec<usize> {
    cfg.ladder.clone().unwrap_or_else(|| vec![64, 128, 256, 512])
}

fn prop9_ladder(ns: &[usize], build: impl Fn(usize) -> Result<LagrangianMesh>) -> Result<Ladder> {
    Ladder::run(ns, |n| Ok(vec![("connection", verify_prop9(&build(n)?)?.prop9_residual)]))
}

fn order_check(out: &mut Outcome, name: &str, order: f64) {
    out.check(Check::within(name, order, ORDER_RANGE.0, ORDER_RANGE.1));
}

fn flat_circle(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = cfg.n.unwrap_or(256);
    let tol = cfg.tolerances();
    let model = model_or(cfg, ModelKind::FlatComplex { n: 1 })?;
    let build = |n| LagrangianMesh::build_loop(&model, shapes::circle(0.0, 0.0, 1.0, 1), n);
    let mesh = build(n)?;

    let k1 = decompose(&mesh, &tol, 1)?;
    let k2 = decompose(&mesh, &tol, 2)?;
    let winding = chord_winding(&mesh, 0, 0);
    out.check(Check::equal("maslov (k=1)", &k1.maslov, &vec![1]));
    out.check(Check::equal("maslov (k=2)", &k2.maslov, &vec![2]));
    out.check(Check::equal("tangent winding", &k1.maslov, &vec![winding]));
    out.check(Check::equal("Im theta zero set", &imtheta_zero_set(&mesh)?, &k1.maslov));

    let curvature = verify_prop9(&mesh)?;
    out.check(Check::below("connection vs alpha_H", curvature.prop9_residual, 1e-3));
    let hm = hodge_match(&mesh, &tol)?;
    out.check(Check::equal("integer part of alpha_H", &hm.maslov, &vec![1]));
    out.check(Check::below("harmonic period match", hm.period_residual, 1e-3));

    let ladder = prop9_ladder(&loop_ladder(cfg), build)?;
    order_check(&mut out, "connection vs alpha_H order", ladder.order("connection"));
    ladder.record(&mut out, "connection", "flat circle: |eta - alpha_H| / length");

    // no minimizer in the class: the loop shrinks until the collapse guard fires
    let small = build(cfg.n1.unwrap_or(64))?;
    let options = DescentOptions {
        mode: DescentMode::Lagrangian,
        max_iterations: cfg.max_iterations.unwrap_or(1000),
        decompose: tol,
        ..DescentOptions::default()
    };
    let descent = volume_descent(&small, &polynomials(2, cfg.degree.unwrap_or(3)), &options)?;
    out.check(Check::new(
        "descent hits the collapse guard",
        descent.collapsed && !descent.converged,
        format!("volume {:.3e} of {:.3e}", descent.final_volume, descent.initial_volume),
    ));
    out.check(Check::new("descent volume monotone", monotone(&descent.trace), ""));
    record_descent(&mut out, "descent", &descent)?;

    out.put("tangent_winding", &winding)?;
    out.put("maslov_k1", &k1)?;
    out.put("maslov_k2", &k2)?;
    out.put("curvature", &curvature)?;
    out.put("hodge_match", &hm)?;
    Ok(out)
}

fn flat_product_torus(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (n1, n2) = (cfg.n1.or(cfg.n).unwrap_or(32), cfg.n2.or(cfg.n).unwrap_or(32));
    let tol = cfg.tolerances();
    let model = model_or(cfg, ModelKind::FlatComplex { n: 2 })?;
    let mesh = LagrangianMesh::build_torus_grid(&model, shapes::product_torus(1.0, 0.7), n1, n2)?;
    let k1 = decompose(&mesh, &tol, 1)?;
    let k2 = decompose(&mesh, &tol, 2)?;
    let winding = vec![chord_winding(&mesh, 0, 0), chord_winding(&mesh, 1, 1)];
    out.check(Check::equal("maslov (k=1)", &k1.maslov, &vec![1, 1]));
    out.check(Check::equal("maslov (k=2)", &k2.maslov, &vec![2, 2]));
    out.check(Check::equal("tangent winding", &k1.maslov, &winding));
    out.check(Check::equal("Im theta zero set", &imtheta_zero_set(&mesh)?, &k1.maslov));
    out.check(Check::new("flat connection", k1.is_flat, format!("{:.3e}", k1.curvature_max)));
    let ricci = verify_ricci_identity(&mesh)?;
    out.check(Check::below("Ricci identity", ricci, 1e-6));
    let curvature = verify_prop9(&mesh)?;
    out.put("maslov_k1", &k1)?;
    out.put("maslov_k2", &k2)?;
    out.put("curvature", &curvature)?;
    Ok(out)
}

fn square_elliptic(cfg: &ScenarioConfig) -> Result<AmbientModel> {
    match &cfg.model {
        Some(kind) => AmbientModel::new(kind.clone()),
        None => AmbientModel::square_torus(1),
    }
}

fn elliptic_line(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tol = cfg.tolerances();
    let model = square_elliptic(cfg)?;
    let n = cfg.n.unwrap_or(64);
    let mut summary = Vec::new();
    for (p, q) in [(1, 0), (1, 1)] {
        let mesh = LagrangianMesh::build_loop(&model, shapes::straight_line(&model, [0.0, 0.3], p, q), n)?;
        let r = decompose(&mesh, &tol, 1)?;
        let zeros = imtheta_zero_set(&mesh)?;
        let label = format!("({p},{q}) line");
        out.check(Check::equal(format!("{label} maslov"), &r.maslov, &vec![0]));
        out.check(Check::equal(format!("{label} Im theta zero set"), &zeros, &r.maslov));
        out.check(Check::new(
            format!("{label} special"),
            r.is_special,
            format!("phase variation {:.3e}", r.phase_variation),
        ));
        out.check(Check::new(format!("{label} Bohr-Sommerfeld"), r.is_bohr_sommerfeld, format!("{:?}", r.periods)));
        summary.push(json!({ "class": [p, q], "report": r }));
    }
    let wiggly =
        LagrangianMesh::build_loop(&model, shapes::wiggly_line(&model, [0.0, 0.3], 1, 0, 0.05, 3), n.max(128))?;
    let w = decompose(&wiggly, &tol, 1)?;
    out.check(Check::equal("wiggly line Im theta zero set", &imtheta_zero_set(&wiggly)?, &w.maslov));
    out.check(Check::new(
        "wiggly line is not special",
        !w.is_special,
        format!("phase variation {:.3e}", w.phase_variation),
    ));
    out.put("lines", &summary)?;
    out.put("wiggly", &w)?;
    Ok(out)
}

fn elliptic_invariance(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let model = square_elliptic(cfg)?;
    let n = cfg.n.unwrap_or(64);
    let mesh = LagrangianMesh::build_loop(&model, shapes::straight_line(&model, [0.0, 0.3], 1, 0), n)?;
    let seed = cfg.seed.unwrap_or(2024);
    let family = (0..cfg.functions.unwrap_or(5) as u64)
        .map(|i| Ok(Generator::hamiltonian(random_fourier(&model, 2, 3, 0.02, seed + i)?)))
        .collect::<Result<Vec<_>>>()?;
    let options = FlowOptions { decompose: cfg.tolerances(), ..FlowOptions::default() };
    let steps = cfg.steps.unwrap_or(50);
    let report = invariance_experiment(&mesh, &family, steps, cfg.epsilon.unwrap_or(0.05), &options)?;
    out.check(Check::new("maslov constant on every trace", report.maslov_invariant, ""));
    out.check(Check::new("no half-integer guard trips", !report.aborted, ""));
    let drift = report.runs.iter().map(|r| r.fractional_drift).fold(0.0, f64::max);
    out.check(Check::below("fractional period drift", drift, 1e-3));
    out.check(Check::new("all steps completed", report.runs.iter().all(|r| r.steps_completed == steps), ""));
    for (i, run) in report.runs.iter().enumerate() {
        if let Some(m) = &run.final_mesh {
            out.check(Check::equal(format!("run {i} Im theta zero set"), &imtheta_zero_set(m)?, &run.initial_maslov));
        }
        out.tables.push((format!("run-{i}"), run.trace.to_csv()));
    }
    let mut chart = Chart::new("elliptic invariance: fractional period", "step", "fractional period (units of 2 pi)");
    for (i, run) in report.runs.iter().enumerate() {
        let pts =
            run.trace.records.iter().filter_map(|r| r.fractional.as_ref().map(|f| (r.step as f64, f[0]))).collect();
        chart = chart.with(Series::new(format!("f{i}"), pts));
    }
    out.charts.push(("fractional".into(), chart.render()));
    out.put("invariance", &report)?;
    Ok(out)
}

fn sphere_model(cfg: &ScenarioConfig) -> Result<AmbientModel> {
    model_or(cfg, ModelKind::RoundSphere { radius: 1.0 })
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn sphere_latitude(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tol = cfg.tolerances();
    let model = sphere_model(cfg)?;
    let n = cfg.n.unwrap_or(256);
    let theta = cfg.theta.unwrap_or(PI / 3.0);
    let build = |n: usize, t: f64| LagrangianMesh::build_loop(&model, shapes::latitude(t), n);

    let mesh = build(n, theta)?;
    let conn = relative_connection(&mesh)?;
    let bs = is_bohr_sommerfeld(&mesh, &conn, 1, tol.period_tolerance)?;
    let oracle = wrap(TAU * theta.cos()).abs();
    out.check(Check::below("period defect vs enclosed area", (bs.defects[0] - oracle).abs(), 1e-3));
    let minimality = minimality_report(&mesh)?;
    out.check(Check::new("H-minimal", minimality.h_minimal, format!("{:.3e}", minimality.h_norm)));
    match decompose_connection(&mesh, &conn, &tol) {
        Ok(r) => out.put("maslov", &r)?,
        Err(e @ Error::HalfIntegerBoundary { .. }) => out.put("maslov_refused", &e.to_string())?,
        Err(e) => return Err(e),
    }
    out.put("bohr_sommerfeld", &bs)?;
    out.put("minimality", &minimality)?;

    // classification over cos theta in {0, 1/2, -1/2}
    let mut rows = Vec::new();
    let mut table = String::from("cos_theta,bohr_sommerfeld,defect,l_norm,h_norm,l_minimal,h_minimal\n");
    for (c, want_bs, want_defect, want_l) in [(0.0, true, 0.0, true), (0.5, false, PI, false), (-0.5, false, PI, false)]
    {
        let m = build(n, f64::acos(c))?;
        let b = is_bohr_sommerfeld(&m, &relative_connection(&m)?, 1, tol.period_tolerance)?;
        let min = minimality_report(&m)?;
        let defect = b.defects[0];
        let defect_ok = if want_bs { defect < 1e-6 } else { (defect - want_defect).abs() < 1e-3 };
        out.check(Check::new(
            format!("cos {c}: Bohr-Sommerfeld"),
            b.is_bohr_sommerfeld == want_bs,
            format!("{}", b.is_bohr_sommerfeld),
        ));
        out.check(Check::new(format!("cos {c}: defect"), defect_ok, format!("{defect:.6}")));
        out.check(Check::new(format!("cos {c}: L-minimal"), min.l_minimal == want_l, format!("{:.3e}", min.l_norm)));
        out.check(Check::below(format!("cos {c}: H-minimal"), min.h_norm, 1e-6));
        let _ = writeln!(
            table,
            "{c},{},{defect},{},{},{},{}",
            b.is_bohr_sommerfeld, min.l_norm, min.h_norm, min.l_minimal, min.h_minimal
        );
        rows.push(
            json!({ "cos_theta": c, "bohr_sommerfeld": b.is_bohr_sommerfeld, "defect": defect, "minimality": min }),
        );
    }
    out.tables.push(("classification".into(), table));
    out.put("classification", &rows)?;

    let ladder = prop9_ladder(&loop_ladder(cfg), |n| build(n, theta))?;
    order_check(&mut out, "connection vs alpha_H order", ladder.order("connection"));
    out.check(Check::below("connection vs alpha_H (finest)", ladder.last("connection"), 1e-3));
    ladder.record(&mut out, "connection", "sphere latitude: |eta - alpha_H| / length");
    Ok(out)
}

fn perturbed_great_circle() -> Parametrization {
    shapes::sphere_curve(|phi| FRAC_PI_2 + 0.05 * (2.0 * phi).cos())
}

fn sphere_descent_on(cfg: &ScenarioConfig, model: &AmbientModel) -> Result<(LagrangianMesh, DescentOutcome)> {
    let mesh = LagrangianMesh::build_loop(model, perturbed_great_circle(), cfg.n.unwrap_or(256))?;
    let options = DescentOptions {
        max_iterations: cfg.max_iterations.unwrap_or(200),
        decompose: cfg.tolerances(),
        ..DescentOptions::default()
    };
    let outcome = volume_descent(&mesh, &sphere_monomials(cfg.degree.unwrap_or(8)), &options)?;
    Ok((mesh, outcome))
}

fn equator_distance(mesh: &LagrangianMesh) -> f64 {
    mesh.vertices().iter().map(|p| (2.0 * p.norm().atan() - FRAC_PI_2).abs()).fold(0.0, f64::max)
}

fn sphere_descent(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let model = sphere_model(cfg)?;
    let (start, d) = sphere_descent_on(cfg, &model)?;
    let end = d.mesh.clone().expect("descent returns its mesh");
    out.check(Check::new("converged", d.converged, format!("{} iterations", d.iterations)));
    out.check(Check::below("final L2 norm of alpha_H", d.final_l_norm, 1e-3));
    out.check(Check::new("volume monotone", monotone(&d.trace), ""));
    let radius = match model.kind() {
        ModelKind::RoundSphere { radius } => *radius,
        _ => 1.0,
    };
    out.check(Check::below("length of a great circle", (d.final_volume - TAU * radius).abs(), 1e-3));
    let first = decompose(&start, &cfg.tolerances(), 1)?;
    let last = decompose(&end, &cfg.tolerances(), 1)?;
    let drift = (last.periods[0] - first.periods[0]).abs();
    out.check(Check::below("period drift along the descent", drift, 1e-4));
    out.check(Check::new("starts Bohr-Sommerfeld", first.is_bohr_sommerfeld, format!("{:.3e}", first.periods[0])));
    out.put("equator_distance", &equator_distance(&end))?;
    record_descent(&mut out, "descent", &d)?;
    Ok(out)
}

fn football_descent(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let model = model_or(cfg, ModelKind::FootballSphere { radius: 1.0, amplitude: cfg.amplitude.unwrap_or(0.3) })?;
    let (_, d) = sphere_descent_on(cfg, &model)?;
    out.check(Check::new("volume monotone", monotone(&d.trace), ""));
    out.check(Check::new("no collapse", !d.collapsed, ""));
    let end = d.mesh.clone().expect("descent returns its mesh");
    out.put("equator_distance", &equator_distance(&end))?;
    out.put("minimality", &minimality_report(&end)?)?;
    record_descent(&mut out, "descent", &d)?;
    Ok(out)
}

pub(super) fn potential_model(epsilon: f64) -> Result<AmbientModel> {
    let torus = AmbientModel::square_torus(2)?;
    AmbientModel::new(ModelKind::PotentialKahler {
        base: Box::new(torus.kind().clone()),
        potential: Potential(vec![
            PotentialTerm::Fourier { amplitude: 1.0, wavevector: vec![1.0, 0.0, 0.0, 1.0], phase: 0.3 },
            PotentialTerm::Fourier { amplitude: 0.6, wavevector: vec![0.0, 1.0, 1.0, 0.0], phase: -0.4 },
        ]),
        epsilon,
    })
}

fn potential_torus(model: &AmbientModel, n: usize) -> Result<LagrangianMesh> {
    let flat = shapes::real_torus(&AmbientModel::square_torus(2)?, [0.2, -0.1]);
    LagrangianMesh::build_torus_grid(model, shapes::moser_image(model, flat, 24), n, n)
}

fn torus_ladder(cfg: &ScenarioConfig) -> Vec<usize> {
    cfg.ladder.clone().unwrap_or_else(|| vec![24, 32, 48, 64])
}

fn potential_ladder(model: &AmbientModel, ns: &[usize]) -> Result<(Ladder, BTreeMap<usize, LagrangianMesh>)> {
    let mut meshes = BTreeMap::new();
    let ladder = Ladder::run(ns, |n| {
        let mesh = potential_torus(model, n)?;
        let report = verify_prop9(&mesh)?;
        meshes.insert(n, mesh);
        Ok(vec![("connection", report.prop9_residual), ("ricci", report.ricci_residual.unwrap_or(f64::NAN))])
    })?;
    Ok((ladder, meshes))
}

fn potential_torus_ricci(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let model = match &cfg.model {
        Some(kind) => AmbientModel::new(kind.clone())?,
        None => potential_model(cfg.amplitude.unwrap_or(0.05))?,
    };
    let n = cfg.n.unwrap_or(64);
    let mut ns = torus_ladder(cfg);
    let (ladder, meshes) = potential_ladder(&model, &ns)?;
    let mesh = match meshes.get(&n) {
        Some(m) => m.clone(),
        None => {
            ns.push(n);
            potential_torus(&model, n)?
        }
    };
    let ricci = verify_ricci_identity(&mesh)?;
    out.check(Check::below("Ricci identity", ricci, 5e-3));
    let rho = ricci_face_integrals(&mesh)?;
    let areas = mesh.face_areas()?;
    let rho_max = rho.values.iter().zip(&areas).map(|(r, a)| (r / a).abs()).fold(0.0, f64::max);
    out.check(Check::new("Ricci form restricts nontrivially", rho_max > 1e-4, format!("{rho_max:.3e}")));
    order_check(&mut out, "Ricci identity order", ladder.order("ricci"));
    order_check(&mut out, "connection vs alpha_H order", ladder.order("connection"));
    out.check(Check::below("connection vs alpha_H (finest)", ladder.last("connection"), 1e-3));
    ladder.record(&mut out, "potential", "potential torus: residuals");

    // Ricci-flat comparison: both sides vanish
    let flat = LagrangianMesh::build_torus_grid(&AmbientModel::flat(2)?, shapes::product_torus(1.0, 0.7), 32, 32)?;
    let d_alpha = Dec::new(&flat)?.d(&mean_curvature_one_form(&flat)?)?;
    let flat_areas = flat.face_areas()?;
    let lhs = d_alpha.values.iter().zip(&flat_areas).map(|(v, a)| (v / a).abs()).fold(0.0, f64::max);
    let rhs = ricci_face_integrals(&flat)?.max_abs();
    out.check(Check::below("flat ambient: d alpha_H", lhs, 1e-6));
    out.check(Check::below("flat ambient: Ricci form", rhs, 1e-6));

    out.put("ricci_residual", &ricci)?;
    out.put("ricci_density_max", &rho_max)?;
    out.put("maslov", &decompose(&mesh, &cfg.tolerances(), 1).map_err(|e| e.to_string()).ok())?;
    Ok(out)
}

fn halfweight_demo(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tol = cfg.tolerances();
    let model = square_elliptic(cfg)?;
    let n = cfg.n.unwrap_or(64);
    let line = LagrangianMesh::build_loop(&model, shapes::straight_line(&model, [0.0, 0.3], 1, 0), n)?;
    let report = decompose(&line, &tol, 1)?;
    out.check(Check::new("elliptic line is special", report.is_special, ""));
    let mut weights = Vec::new();
    for r in [0.5, 1.0, 10.0] {
        let hw = half_weight(&report, &line, r)?;
        out.check(Check::below(format!("total mass {r}"), (hw.integral - r).abs(), 1e-8));
        let (lo, hi) =
            hw.density.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(*d), b.max(*d)));
        out.check(Check::below(format!("density constant (r = {r})"), (hi - lo) / hi.abs(), 1e-6));
        weights.push(json!({ "r": r, "integral": hw.integral, "density_min": lo, "density_max": hi }));
    }
    out.put("special_line", &weights)?;

    let wiggly =
        LagrangianMesh::build_loop(&model, shapes::wiggly_line(&model, [0.0, 0.3], 1, 0, 0.05, 3), n.max(128))?;
    let w = decompose(&wiggly, &tol, 1)?;
    let hw = half_weight(&w, &wiggly, 1.0)?;
    out.check(Check::below("wiggly line total mass", (hw.integral - 1.0).abs(), 1e-8));
    out.put(
        "wiggly_line",
        &json!({ "phase_variation": w.phase_variation, "sign_warning": hw.sign_warning, "density": hw.density.values }),
    )?;

    let circle = LagrangianMesh::build_loop(&AmbientModel::flat(1)?, shapes::circle(0.0, 0.0, 1.0, 1), 64)?;
    let refused = matches!(half_weight(&decompose(&circle, &tol, 1)?, &circle, 1.0), Err(Error::NotApplicable(_)));
    out.check(Check::new("nontrivial Maslov class refused", refused, ""));
    Ok(out)
}

fn convergence(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let target = cfg.target.clone().unwrap_or_else(|| "flat-circle".into());
    let ladder = match target.as_str() {
        "flat-circle" => {
            let model = model_or(cfg, ModelKind::FlatComplex { n: 1 })?;
            prop9_ladder(&loop_ladder(cfg), |n| {
                LagrangianMesh::build_loop(&model, shapes::circle(0.0, 0.0, 1.0, 1), n)
            })?
        }
        "sphere-latitude" => {
            let model = sphere_model(cfg)?;
            let theta = cfg.theta.unwrap_or(PI / 3.0);
            prop9_ladder(&loop_ladder(cfg), |n| LagrangianMesh::build_loop(&model, shapes::latitude(theta), n))?
        }
        "potential-torus-ricci" => {
            let model = match &cfg.model {
                Some(kind) => AmbientModel::new(kind.clone())?,
                None => potential_model(cfg.amplitude.unwrap_or(0.05))?,
            };
            potential_ladder(&model, &torus_ladder(cfg))?.0
        }
        other => {
            return Err(Error::NotApplicable(format!(
                "convergence supports flat-circle, sphere-latitude and potential-torus-ricci, not {other:?}"
            )))
        }
    };
    if ladder.ns.len() < 2 {
        return Err(Error::NotApplicable("a ladder needs at least two resolutions".into()));
    }
    for column in ladder.columns.keys() {
        order_check(&mut out, &format!("{column} order"), ladder.order(column));
    }
    out.put("target", &target)?;
    ladder.record(&mut out, "residual", &format!("{target}: refinement"));
    Ok(out)
}
