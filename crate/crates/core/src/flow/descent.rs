use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{measure, normal_part, velocity_field, FlowTrace, Generator, Hamiltonian};
use crate::curvature::{second_fundamental_form, L_MINIMAL_TOLERANCE};
use crate::error::{Error, Result};
use crate::lagmesh::LagrangianMesh;
use crate::transport::DecomposeOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentMode {
    /// Hamiltonian directions only; symplectic periods are preserved.
    Isodrastic,
    /// Hamiltonian directions plus one flux direction per cycle.
    Lagrangian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    pub mode: DescentMode,
    pub max_iterations: usize,
    /// Stop once the `L^2` norm of `alpha_H` drops below this.
    pub tolerance: f64,
    pub armijo: f64,
    /// Largest vertex displacement per step, as a fraction of the shortest edge.
    pub max_displacement: f64,
    /// Abort once the volume falls below this fraction of the initial volume.
    pub collapse_fraction: f64,
    /// First-variation capture `<H, V> / |H|^2` below which the mesh counts as stationary.
    pub stationary_ratio: f64,
    pub decompose: DecomposeOptions,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            mode: DescentMode::Isodrastic,
            max_iterations: 200,
            tolerance: L_MINIMAL_TOLERANCE,
            armijo: 1e-4,
            max_displacement: 0.5,
            collapse_fraction: 0.01,
            stationary_ratio: 1e-6,
            decompose: DecomposeOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescentOutcome {
    #[serde(skip)]
    pub mesh: Option<LagrangianMesh>,
    pub trace: FlowTrace,
    pub converged: bool,
    /// Stopped above tolerance without collapsing.
    pub stagnated: bool,
    /// Volume fell below the collapse fraction: no minimizer in the class.
    pub collapsed: bool,
    /// The first variation vanishes on the search space.
    pub stationary: bool,
    pub iterations: usize,
    pub initial_volume: f64,
    pub final_volume: f64,
    pub final_l_norm: f64,
}

struct Direction {
    /// Least-squares fit of `H` by the normal parts of the fields.
    coefficients: DVector<f64>,
    /// First variations `int G(H, V_k) dmu`.
    rhs: DVector<f64>,
    /// `int |H|^2 dmu`.
    h_squared: f64,
    flux_fields: Vec<Vec<DVector<f64>>>,
}

fn direction(mesh: &LagrangianMesh, basis: &[Hamiltonian], mode: DescentMode) -> Result<Direction> {
    let model = mesh.model();
    let sff = second_fundamental_form(mesh)?;
    let dmu = mesh.vertex_volumes()?;
    let mut fields: Vec<Vec<DVector<f64>>> =
        basis.iter().map(|f| velocity_field(mesh, &Generator::hamiltonian(f.clone()))).collect::<Result<_>>()?;
    let hamiltonian_count = fields.len();
    if mode == DescentMode::Lagrangian {
        for cycle in 0..mesh.topology().b1() {
            fields.push(velocity_field(mesh, &Generator::Flux { cycle, rate: 1.0 })?);
        }
    }
    let k = fields.len();
    // per-vertex normal parts of every field, and G-weighted inner products
    let per_vertex: Vec<(DMatrix<f64>, DVector<f64>, f64)> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let g = model.metric_at(&mesh.vertices()[v])?;
            let inv = mesh
                .induced_metric(v)?
                .try_inverse()
                .ok_or_else(|| Error::Mesh(format!("degenerate induced metric at vertex {v}")))?;
            let normals: Vec<DVector<f64>> = fields.iter().map(|f| normal_part(mesh, v, &g, &inv, &f[v])).collect();
            let gn: Vec<DVector<f64>> = normals.iter().map(|n| &g * n).collect();
            let h = &sff[v].mean;
            let gram = DMatrix::from_fn(k, k, |a, b| normals[a].dot(&gn[b]) * dmu[v]);
            let rhs = DVector::from_fn(k, |a, _| gn[a].dot(h) * dmu[v]);
            Ok((gram, rhs, h.dot(&(&g * h)) * dmu[v]))
        })
        .collect::<Result<_>>()?;
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let mut h_squared = 0.0;
    for (m, r, h) in per_vertex {
        gram += m;
        rhs += r;
        h_squared += h;
    }
    let svd = gram.svd(true, true);
    let cutoff = 1e-9 * svd.singular_values.max().max(1e-300);
    let coefficients = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::Numerical { message: format!("descent fit failed: {e}"), residual: f64::NAN })?;
    Ok(Direction { coefficients, rhs, h_squared, flux_fields: fields.split_off(hamiltonian_count) })
}

fn field(mesh: &LagrangianMesh, f: &Hamiltonian, flux: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    mesh.vertices().par_iter().zip(flux).map(|(x, w)| Ok(f.vector_field(mesh.model(), mesh.chart(), x)? + w)).collect()
}

/// Midpoint step; the flux part is frozen at the start mesh.
fn trial(
    mesh: &LagrangianMesh,
    f: &Hamiltonian,
    flux: &[DVector<f64>],
    k1: &[DVector<f64>],
    tau: f64,
) -> Result<LagrangianMesh> {
    let shift = |m: &LagrangianMesh, k: &[DVector<f64>], dt: f64| {
        m.with_vertices(mesh.vertices().iter().zip(k).map(|(x, v)| x + v * dt).collect())
    };
    let mid = shift(mesh, k1, 0.5 * tau)?;
    let k2 = field(&mid, f, flux)?;
    shift(mesh, &k2, tau)
}

fn max_speed(mesh: &LagrangianMesh, velocity: &[DVector<f64>]) -> Result<f64> {
    let mut top = 0.0_f64;
    for (x, v) in mesh.vertices().iter().zip(velocity) {
        let g = mesh.model().metric_at(x)?;
        top = top.max(v.dot(&(&g * v)).sqrt());
    }
    Ok(top)
}

/// Line-search descent of the induced volume over the span of `basis` (and flux directions).
pub fn volume_descent(
    mesh: &LagrangianMesh,
    basis: &[Hamiltonian],
    options: &DescentOptions,
) -> Result<DescentOutcome> {
    for f in basis {
        f.validate(mesh.model())?;
    }
    let label = match options.mode {
        DescentMode::Isodrastic => "isodrastic",
        DescentMode::Lagrangian => "lagrangian",
    };
    let mut trace = FlowTrace::new(format!("volume descent ({label}, {} functions)", basis.len()), 0.0);
    let mut current = mesh.clone();
    let first = measure(&current, 0, 0.0, None, &options.decompose)?;
    let initial_volume = first.volume;
    let mut volume = initial_volume;
    let mut l_norm = first.l_norm;
    trace.records.push(first);

    let mut outcome = DescentOutcome {
        mesh: None,
        trace: FlowTrace::new("", 0.0),
        converged: l_norm < options.tolerance,
        stagnated: false,
        collapsed: false,
        stationary: false,
        iterations: 0,
        initial_volume,
        final_volume: volume,
        final_l_norm: l_norm,
    };
    let mut tau_prev = f64::INFINITY;
    // Polak-Ribiere conjugate directions in coefficient space, preconditioned by the fit
    let mut previous: Option<(DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    while !outcome.converged && outcome.iterations < options.max_iterations {
        let dir = direction(&current, basis, options.mode)?;
        let steepest = dir.coefficients.dot(&dir.rhs);
        if steepest <= options.stationary_ratio * dir.h_squared {
            outcome.stationary = true;
            break;
        }
        let mut search = dir.coefficients.clone();
        if let Some((b_old, s_old, p_old)) = &previous {
            let beta = (dir.coefficients.dot(&(&dir.rhs - b_old)) / s_old.dot(b_old)).max(0.0);
            let candidate = &search + p_old * beta;
            if candidate.dot(&dir.rhs) > 0.5 * steepest {
                search = candidate;
            }
        }
        let slope = search.dot(&dir.rhs);
        let f = Hamiltonian::combination(&search.as_slice()[..basis.len()], basis);
        let flux: Vec<DVector<f64>> = (0..current.num_vertices())
            .map(|v| {
                let mut acc = DVector::zeros(current.model().real_dim());
                for (c, fc) in dir.flux_fields.iter().enumerate() {
                    acc += &fc[v] * search[basis.len() + c];
                }
                acc
            })
            .collect();
        let shortest = current.edge_lengths()?.into_iter().fold(f64::INFINITY, f64::min);
        let k1 = field(&current, &f, &flux)?;
        let speed = max_speed(&current, &k1)?;
        let cap = options.max_displacement * shortest / speed.max(1e-300);
        let mut tau = cap.min(2.0 * tau_prev);
        let accepted = loop {
            if tau * speed < 1e-14 {
                break None;
            }
            match trial(&current, &f, &flux, &k1, tau) {
                Ok(next) => {
                    // tangential drift only reparametrizes a loop; undo it
                    let next = if next.dim() == 1 { next.resample_uniform()? } else { next };
                    let v = next.induced_volume()?.0;
                    if v <= volume - options.armijo * tau * slope {
                        break Some((next, v));
                    }
                }
                Err(Error::Domain(_) | Error::Mesh(_)) => {}
                Err(e) => return Err(e),
            }
            tau *= 0.5;
        };
        let Some((next, v)) = accepted else {
            break;
        };
        previous = Some((dir.rhs, dir.coefficients, search));
        outcome.iterations += 1;
        tau_prev = tau;
        current = next;
        volume = v;
        let record = match measure(&current, outcome.iterations, tau, None, &options.decompose) {
            Ok(r) => r,
            // a collapsing loop eventually outruns the resolution of curvature and transport
            Err(Error::Refinement(_) | Error::UnresolvedMesh { .. }) if volume < 0.05 * initial_volume => {
                outcome.collapsed = true;
                break;
            }
            Err(e) => return Err(e),
        };
        l_norm = record.l_norm;
        trace.records.push(record);
        if volume < options.collapse_fraction * initial_volume {
            outcome.collapsed = true;
            break;
        }
        outcome.converged = l_norm < options.tolerance;
    }
    outcome.stagnated = !outcome.converged && !outcome.collapsed && !outcome.stationary;
    outcome.final_volume = volume;
    outcome.final_l_norm = l_norm;
    outcome.trace = trace;
    outcome.mesh = Some(current);
    Ok(outcome)
}
