use serde::{Deserialize, Serialize};

use super::{measure, midpoint_step, residual_limit, FlowOptions, FlowTrace, Generator};
use crate::error::{Error, Result};
use crate::lagmesh::LagrangianMesh;
use crate::transport::{decompose_connection, relative_connection};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardTrip {
    pub step: usize,
    pub cycle: usize,
    /// Fractional period in units of `2 pi`.
    pub fraction: f64,
}

/// First step after a guard trip at which the periods are bounded again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reentry {
    pub step: usize,
    pub maslov: Vec<i64>,
    /// `maslov - initial maslov`.
    pub jump: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceRun {
    pub label: String,
    pub isodrastic: bool,
    pub steps_completed: usize,
    pub initial_maslov: Vec<i64>,
    /// Maslov integers unchanged on every step before any guard trip.
    pub constant: bool,
    /// Largest change of a fractional period, units of `2 pi`.
    pub fractional_drift: f64,
    /// Largest change of a period, radians.
    pub period_drift: f64,
    pub guard_trip: Option<GuardTrip>,
    pub reentry: Option<Reentry>,
    pub trace: FlowTrace,
    #[serde(skip)]
    pub final_mesh: Option<LagrangianMesh>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub mesh_id: String,
    pub steps: usize,
    pub step_size: f64,
    pub runs: Vec<InvarianceRun>,
    /// Every run kept its Maslov integers while the guard held.
    pub maslov_invariant: bool,
    /// Some run hit the half-integer guard.
    pub aborted: bool,
}

/// Run every generator from the same starting mesh and compare Maslov integers step by step.
///
/// A guard trip stops the comparison; the flow continues until the periods are bounded
/// again so the integer jump across the boundary is recorded.
pub fn invariance_experiment(
    mesh: &LagrangianMesh,
    family: &[Generator],
    steps: usize,
    step: f64,
    options: &FlowOptions,
) -> Result<InvarianceReport> {
    let conn = relative_connection(mesh)?;
    let initial = decompose_connection(mesh, &conn, &options.decompose)?;
    let limit = residual_limit(mesh, options.residual_factor)?;
    let mut runs = Vec::with_capacity(family.len());
    for generator in family {
        let function = match generator {
            Generator::Hamiltonian { function } => Some(function),
            _ => None,
        };
        let mut trace = FlowTrace::new(generator.describe(), step);
        trace.records.push(measure(mesh, 0, step, function, &options.decompose)?);
        let mut run = InvarianceRun {
            label: generator.describe(),
            isodrastic: generator.is_isodrastic(),
            steps_completed: 0,
            initial_maslov: initial.maslov.clone(),
            constant: true,
            fractional_drift: 0.0,
            period_drift: 0.0,
            guard_trip: None,
            reentry: None,
            trace: FlowTrace::new("", step),
            final_mesh: None,
        };
        let mut current = mesh.clone();
        for k in 1..=steps {
            current = midpoint_step(&current, generator, step)?;
            let residual = current.lagrangian_residual_discrete()?.0;
            if residual > limit {
                return Err(Error::StepRejected { residual, limit, suggested: 0.5 * step });
            }
            run.steps_completed = k;
            let conn = relative_connection(&current)?;
            match decompose_connection(&current, &conn, &options.decompose) {
                Err(Error::HalfIntegerBoundary { cycle, fraction }) => {
                    if run.guard_trip.is_none() {
                        run.guard_trip = Some(GuardTrip { step: k, cycle, fraction });
                    }
                }
                Err(e) => return Err(e),
                Ok(report) => {
                    if run.guard_trip.is_some() {
                        let jump = report.maslov.iter().zip(&initial.maslov).map(|(a, b)| a - b).collect();
                        run.reentry = Some(Reentry { step: k, maslov: report.maslov.clone(), jump });
                    } else {
                        run.constant &= report.maslov == initial.maslov;
                        for c in 0..report.periods.len() {
                            run.fractional_drift =
                                run.fractional_drift.max((report.fractional[c] - initial.fractional[c]).abs());
                            run.period_drift = run.period_drift.max((report.periods[c] - initial.periods[c]).abs());
                        }
                    }
                }
            }
            trace.records.push(measure(&current, k, step, function, &options.decompose)?);
            if run.reentry.is_some() {
                break;
            }
        }
        run.trace = trace;
        run.final_mesh = Some(current);
        runs.push(run);
    }
    Ok(InvarianceReport {
        mesh_id: mesh.id().to_string(),
        steps,
        step_size: step,
        maslov_invariant: runs.iter().all(|r| r.constant),
        aborted: runs.iter().any(|r| r.guard_trip.is_some()),
        runs,
    })
}
