//! Hamiltonian deformations, invariance experiments and volume descent.
//!
//! A deformation is driven by a [`Generator`]: either an ambient function `f`
//! with `omega(X_f, .) = df`, or a flux field that sweeps symplectic area
//! across one `H_1` cycle at a prescribed rate. Hamiltonian generators are
//! isodrastic; flux generators are not.

pub mod basis;
mod descent;
mod invariance;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientModel, Point, PotentialTerm};
use crate::curvature::minimality_report;
use crate::dec::Dec;
use crate::error::{Error, Result};
use crate::lagmesh::{Chart, LagrangianMesh};
use crate::transport::{decompose_connection, relative_connection, DecomposeOptions};

pub use descent::{volume_descent, DescentMode, DescentOptions, DescentOutcome};
pub use invariance::{invariance_experiment, GuardTrip, InvarianceReport, InvarianceRun, Reentry};

/// One term of an ambient function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianTerm {
    /// Function of the chart coordinates.
    Chart(PotentialTerm),
    /// `coefficient * X^a Y^b Z^c` on a sphere model, `(X, Y, Z)` the unit embedding.
    Embedding { embedding: [u32; 3], coefficient: f64 },
}

impl HamiltonianTerm {
    fn scaled(&self, c: f64) -> Self {
        match self.clone() {
            HamiltonianTerm::Chart(PotentialTerm::Fourier { amplitude, wavevector, phase }) => {
                HamiltonianTerm::Chart(PotentialTerm::Fourier { amplitude: amplitude * c, wavevector, phase })
            }
            HamiltonianTerm::Chart(PotentialTerm::Monomial { coefficient, powers }) => {
                HamiltonianTerm::Chart(PotentialTerm::Monomial { coefficient: coefficient * c, powers })
            }
            HamiltonianTerm::Embedding { embedding, coefficient } => {
                HamiltonianTerm::Embedding { embedding, coefficient: coefficient * c }
            }
        }
    }
}

/// Unit-sphere embedding and its chart gradient at `p`.
fn embedding(chart: Chart, p: &Point) -> ([f64; 3], [[f64; 2]; 3]) {
    let (x, y) = (p[0], p[1]);
    let s = 1.0 + x * x + y * y;
    let s2 = s * s;
    let mut e = [2.0 * x / s, 2.0 * y / s, (2.0 - s) / s];
    let mut grad = [
        [2.0 * (s - 2.0 * x * x) / s2, -4.0 * x * y / s2],
        [-4.0 * x * y / s2, 2.0 * (s - 2.0 * y * y) / s2],
        [-4.0 * x / s2, -4.0 * y / s2],
    ];
    // w = 1/z flips Y and Z
    if chart == Chart::Antipodal {
        for k in 1..3 {
            e[k] = -e[k];
            grad[k] = [-grad[k][0], -grad[k][1]];
        }
    }
    (e, grad)
}

/// Ambient function as a sum of terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hamiltonian(pub Vec<HamiltonianTerm>);

impl Hamiltonian {
    pub fn new(terms: Vec<HamiltonianTerm>) -> Self {
        Hamiltonian(terms)
    }

    /// `|z|^2 / 2` on a one-dimensional chart: rotation about the origin.
    pub fn rotation() -> Self {
        let half = |powers: Vec<u32>| HamiltonianTerm::Chart(PotentialTerm::Monomial { coefficient: 0.5, powers });
        Hamiltonian(vec![half(vec![2, 0]), half(vec![0, 2])])
    }

    /// `sum_k c_k f_k`.
    pub fn combination(coefficients: &[f64], functions: &[Hamiltonian]) -> Self {
        Hamiltonian(
            coefficients
                .iter()
                .zip(functions)
                .filter(|(c, _)| **c != 0.0)
                .flat_map(|(c, f)| f.0.iter().map(move |t| t.scaled(*c)))
                .collect(),
        )
    }

    pub fn validate(&self, model: &AmbientModel) -> Result<()> {
        for term in &self.0 {
            match term {
                HamiltonianTerm::Chart(t) if t.dim() != model.real_dim() => {
                    return Err(Error::Dimension(format!(
                        "function term has {} coordinates, model has {}",
                        t.dim(),
                        model.real_dim()
                    )))
                }
                HamiltonianTerm::Embedding { .. } if !model.is_sphere() => {
                    return Err(Error::UnsupportedModel("embedding monomials need a sphere model".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn value(&self, chart: Chart, p: &Point) -> f64 {
        self.0
            .iter()
            .map(|term| match term {
                HamiltonianTerm::Chart(t) => t.derivative(p.as_slice(), &[]),
                HamiltonianTerm::Embedding { embedding: k, coefficient } => {
                    let (e, _) = embedding(chart, p);
                    coefficient * (0..3).map(|i| e[i].powi(k[i] as i32)).product::<f64>()
                }
            })
            .sum()
    }

    pub fn gradient(&self, chart: Chart, p: &Point) -> DVector<f64> {
        let mut g = DVector::zeros(p.len());
        for term in &self.0 {
            match term {
                HamiltonianTerm::Chart(t) => {
                    for i in 0..p.len() {
                        g[i] += t.derivative(p.as_slice(), &[i]);
                    }
                }
                HamiltonianTerm::Embedding { embedding: k, coefficient } => {
                    let (e, de) = embedding(chart, p);
                    for i in 0..3 {
                        if k[i] == 0 {
                            continue;
                        }
                        let rest: f64 = (0..3).filter(|&j| j != i).map(|j| e[j].powi(k[j] as i32)).product();
                        let factor = coefficient * k[i] as f64 * e[i].powi(k[i] as i32 - 1) * rest;
                        g[0] += factor * de[i][0];
                        g[1] += factor * de[i][1];
                    }
                }
            }
        }
        g
    }

    pub fn vector_field(&self, model: &AmbientModel, chart: Chart, p: &Point) -> Result<DVector<f64>> {
        model.hamiltonian_vector(p, &self.gradient(chart, p))
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (k, term) in self.0.iter().enumerate() {
            if k > 0 {
                out.push_str(" + ");
            }
            match term {
                HamiltonianTerm::Chart(PotentialTerm::Fourier { amplitude, wavevector, phase }) => {
                    let _ = write!(out, "{amplitude:.4} cos({wavevector:?}.x + {phase:.4})");
                }
                HamiltonianTerm::Chart(PotentialTerm::Monomial { coefficient, powers }) => {
                    let _ = write!(out, "{coefficient:.4} x^{powers:?}");
                }
                HamiltonianTerm::Embedding { embedding, coefficient } => {
                    let _ = write!(out, "{coefficient:.4} XYZ^{embedding:?}");
                }
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Source of a deformation vector field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Generator {
    Hamiltonian {
        function: Hamiltonian,
    },
    /// Sweeps `rate` units of symplectic area per unit time across cycle `cycle`.
    Flux {
        cycle: usize,
        rate: f64,
    },
}

impl Generator {
    pub fn hamiltonian(f: Hamiltonian) -> Self {
        Generator::Hamiltonian { function: f }
    }

    pub fn describe(&self) -> String {
        match self {
            Generator::Hamiltonian { function } => function.describe(),
            Generator::Flux { cycle, rate } => format!("flux {rate:.4} across cycle {cycle}"),
        }
    }

    pub fn is_isodrastic(&self) -> bool {
        matches!(self, Generator::Hamiltonian { .. })
    }
}

/// Per-vertex velocity of a generator on the current mesh.
pub fn velocity_field(mesh: &LagrangianMesh, generator: &Generator) -> Result<Vec<DVector<f64>>> {
    match generator {
        Generator::Hamiltonian { function } => {
            function.validate(mesh.model())?;
            mesh.vertices().par_iter().map(|p| function.vector_field(mesh.model(), mesh.chart(), p)).collect()
        }
        Generator::Flux { cycle, rate } => {
            let dec = Dec::new(mesh)?;
            let basis = dec.harmonic_basis()?;
            let h = basis
                .get(*cycle)
                .ok_or_else(|| Error::Cycle(format!("no cycle {cycle} on a mesh with b1 = {}", basis.len())))?;
            let scale = -rate / std::f64::consts::TAU;
            let i = mesh.model().complex_structure();
            (0..mesh.num_vertices())
                .into_par_iter()
                .map(|v| {
                    let w = dual_vector(mesh, &h.values, v)?;
                    Ok(&i * w * scale)
                })
                .collect()
        }
    }
}

/// Tangent vector metric-dual to a 1-form at vertex `v`, from averaged incident edge values.
fn dual_vector(mesh: &LagrangianMesh, values: &[f64], v: usize) -> Result<DVector<f64>> {
    let (n1, n2) = mesh.grid_size();
    let (i, j) = mesh.vertex_grid(v);
    let t = mesh.tangents(v);
    let dim = t.len();
    let covector: Vec<f64> = (0..dim)
        .map(|axis| {
            let back = if axis == 0 {
                mesh.edge_index(0, (i + n1 - 1) % n1, j)
            } else {
                mesh.edge_index(1, i, (j + n2 - 1) % n2)
            };
            0.5 * (values[mesh.edge_index(axis, i, j)] + values[back])
        })
        .collect();
    let inv = mesh
        .induced_metric(v)?
        .try_inverse()
        .ok_or_else(|| Error::Mesh(format!("degenerate induced metric at vertex {v}")))?;
    let mut w = DVector::zeros(t[0].len());
    for a in 0..dim {
        for b in 0..dim {
            w += &t[b] * (inv[(a, b)] * covector[a]);
        }
    }
    Ok(w)
}

fn advance(mesh: &LagrangianMesh, velocity: &[DVector<f64>], dt: f64) -> Result<LagrangianMesh> {
    mesh.with_vertices(mesh.vertices().iter().zip(velocity).map(|(x, v)| x + v * dt).collect())
}

/// One explicit midpoint step.
pub fn midpoint_step(mesh: &LagrangianMesh, generator: &Generator, dt: f64) -> Result<LagrangianMesh> {
    let k1 = velocity_field(mesh, generator)?;
    let mid = advance(mesh, &k1, 0.5 * dt)?;
    let k2 = velocity_field(&mid, generator)?;
    advance(mesh, &k2, dt)
}

/// Snapshot of the invariants along a flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub step: usize,
    pub mesh_id: String,
    pub volume: f64,
    pub lagrangian_residual: f64,
    /// Absent while the bounded-periods guard is tripped.
    pub maslov: Option<Vec<i64>>,
    /// Fractional periods in units of `2 pi`.
    pub fractional: Option<Vec<f64>>,
    /// Periods of `eta` minus its coexact part, radians.
    pub periods: Option<Vec<f64>>,
    pub bohr_sommerfeld: Option<bool>,
    pub phase_variation: Option<f64>,
    /// Spread `max f - min f` of the driving function over the vertices.
    pub function_spread: Option<f64>,
    pub l_norm: f64,
    pub h_norm: f64,
    pub step_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub description: String,
    pub step_size: f64,
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    pub fn new(description: impl Into<String>, step_size: f64) -> Self {
        FlowTrace { description: description.into(), step_size, records: Vec::new() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per record; vector fields are `;`-separated.
    pub fn to_csv(&self) -> String {
        fn list<T: ToString>(v: &Option<Vec<T>>) -> String {
            v.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")).unwrap_or_default()
        }
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from(
            "step,mesh_id,volume,lagrangian_residual,maslov,fractional,bohr_sommerfeld,l_norm,h_norm,phase_variation,step_size\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.mesh_id,
                r.volume,
                r.lagrangian_residual,
                list(&r.maslov),
                list(&r.fractional),
                opt(&r.bohr_sommerfeld),
                r.l_norm,
                r.h_norm,
                opt(&r.phase_variation),
                r.step_size
            );
        }
        out
    }

    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }

    /// Distinct Maslov vectors seen while the guard held.
    pub fn maslov_values(&self) -> Vec<Vec<i64>> {
        let mut seen: Vec<Vec<i64>> = Vec::new();
        for m in self.records.iter().filter_map(|r| r.maslov.clone()) {
            if !seen.contains(&m) {
                seen.push(m);
            }
        }
        seen
    }
}

/// Measure one mesh. A tripped half-integer guard leaves the Maslov fields empty.
pub fn measure(
    mesh: &LagrangianMesh,
    step: usize,
    step_size: f64,
    function: Option<&Hamiltonian>,
    options: &DecomposeOptions,
) -> Result<FlowRecord> {
    let conn = relative_connection(mesh)?;
    let (maslov, fractional, periods, bs, phase) = match decompose_connection(mesh, &conn, options) {
        Ok(r) => {
            (Some(r.maslov), Some(r.fractional), Some(r.periods), Some(r.is_bohr_sommerfeld), Some(r.phase_variation))
        }
        Err(Error::HalfIntegerBoundary { .. }) => (None, None, None, None, None),
        Err(e) => return Err(e),
    };
    let min = minimality_report(mesh)?;
    let function_spread = function.map(|f| {
        let values: Vec<f64> = mesh.vertices().iter().map(|p| f.value(mesh.chart(), p)).collect();
        values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min)
    });
    Ok(FlowRecord {
        step,
        mesh_id: mesh.id().to_string(),
        volume: mesh.induced_volume()?.0,
        lagrangian_residual: mesh.lagrangian_residual_discrete()?.0,
        maslov,
        fractional,
        periods,
        bohr_sommerfeld: bs,
        phase_variation: phase,
        function_spread,
        l_norm: min.l_norm,
        h_norm: min.h_norm,
        step_size,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    pub decompose: DecomposeOptions,
    /// Reject once the Lagrangian residual exceeds this multiple of its starting value.
    pub residual_factor: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { decompose: DecomposeOptions::default(), residual_factor: 10.0 }
    }
}

fn residual_limit(mesh: &LagrangianMesh, factor: f64) -> Result<f64> {
    let initial = mesh.lagrangian_residual_discrete()?.0;
    Ok((factor * initial).max(mesh.lagrangian_tolerance()))
}

/// Flow along a generator for `steps` midpoint steps of size `step`, recording every step.
pub fn deform(
    mesh: &LagrangianMesh,
    generator: &Generator,
    step: f64,
    steps: usize,
    options: &FlowOptions,
) -> Result<(LagrangianMesh, FlowTrace)> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::NotApplicable(format!("step size must be positive, got {step}")));
    }
    let function = match generator {
        Generator::Hamiltonian { function } => Some(function),
        _ => None,
    };
    let limit = residual_limit(mesh, options.residual_factor)?;
    let mut trace = FlowTrace::new(generator.describe(), step);
    trace.records.push(measure(mesh, 0, step, function, &options.decompose)?);
    let mut current = mesh.clone();
    for k in 1..=steps {
        current = midpoint_step(&current, generator, step)?;
        let residual = current.lagrangian_residual_discrete()?.0;
        if residual > limit {
            return Err(Error::StepRejected { residual, limit, suggested: 0.5 * step });
        }
        trace.records.push(measure(&current, k, step, function, &options.decompose)?);
    }
    Ok((current, trace))
}

/// Flow along `X_f`.
pub fn hamiltonian_deform(
    mesh: &LagrangianMesh,
    f: &Hamiltonian,
    step: f64,
    steps: usize,
) -> Result<(LagrangianMesh, FlowTrace)> {
    deform(mesh, &Generator::hamiltonian(f.clone()), step, steps, &FlowOptions::default())
}

/// Normal projection `V - sum t_a g^{ab} G(t_b, V)` at vertex `v`.
fn normal_part(
    mesh: &LagrangianMesh,
    v: usize,
    g: &DMatrix<f64>,
    inv: &DMatrix<f64>,
    x: &DVector<f64>,
) -> DVector<f64> {
    let t = mesh.tangents(v);
    let mut out = x.clone();
    for a in 0..t.len() {
        for b in 0..t.len() {
            out -= &t[a] * (inv[(a, b)] * t[b].dot(&(g * x)));
        }
    }
    out
}

#[cfg(test)]
mod tests;
