use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{connection_curvature, RelativeConnection};
use crate::dec::Dec;
use crate::error::{Error, Result};
use crate::lagmesh::{DiscreteForm, LagrangianMesh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeOptions {
    /// Power of the determinant bundle; 2 gives the classical Maslov class.
    pub power: u32,
    /// Refusal margin around half-integer periods, as a fraction of `2 pi`.
    pub margin: f64,
    /// Bound on the Ricci density `|d eta| / area` for the connection to count as flat.
    pub flat_tolerance: f64,
    /// Bound on fractional periods (radians) to count as trivial.
    pub period_tolerance: f64,
    /// Bound on `max phi - min phi` for a constant phase.
    pub phase_tolerance: f64,
    /// Bohr-Sommerfeld level.
    pub level: u32,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            power: 1,
            margin: 0.05,
            flat_tolerance: 1e-6,
            period_tolerance: 1e-6,
            phase_tolerance: 1e-6,
            level: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaslovReport {
    pub mesh_id: String,
    pub power: u32,
    /// Periods of `k eta - Delta_1` over the `H_1` basis.
    pub periods: Vec<f64>,
    pub maslov: Vec<i64>,
    /// Fractional periods in units of `2 pi`, in `(-1/2, 1/2]`.
    pub fractional: Vec<f64>,
    /// Largest `|d eta| / area` over faces (0 on loops).
    pub curvature_max: f64,
    pub delta1_norm: f64,
    pub is_flat: bool,
    pub trivial_periods: bool,
    pub bounded_periods: bool,
    pub level: u32,
    pub is_bohr_sommerfeld: bool,
    pub is_special: bool,
    pub phase_variation: f64,
    pub phase: DiscreteForm,
    pub delta1: DiscreteForm,
    pub delta2: DiscreteForm,
    pub solver_residual: f64,
}

fn curvature_max(mesh: &LagrangianMesh, conn: &RelativeConnection, power: f64) -> Result<f64> {
    if mesh.dim() != 2 {
        return Ok(0.0);
    }
    let f = connection_curvature(mesh, conn)?;
    let areas = mesh.face_areas()?;
    Ok(f.values.iter().zip(&areas).fold(0.0_f64, |m, (v, a)| m.max((power * v / a).abs())))
}

fn reduce(period: f64) -> (i64, f64) {
    let m = (period / TAU).round();
    (m as i64, period - m * TAU)
}

pub fn decompose_connection(
    mesh: &LagrangianMesh,
    conn: &RelativeConnection,
    options: &DecomposeOptions,
) -> Result<MaslovReport> {
    conn.eta.check_on(mesh)?;
    if options.power == 0 {
        return Err(Error::NotApplicable("power must be positive".into()));
    }
    let k = options.power as f64;
    let dec = Dec::new(mesh)?;
    let eta = conn.eta.scaled(k);
    let split = dec.hodge_decompose(&eta)?;
    let closed = eta.minus(&split.coexact);
    let periods = dec.periods(&closed)?;

    let mut maslov = Vec::with_capacity(periods.len());
    let mut frac = Vec::with_capacity(periods.len());
    for (c, &p) in periods.iter().enumerate() {
        let (m, f) = reduce(p);
        if PI - f.abs() < options.margin * TAU {
            return Err(Error::HalfIntegerBoundary { cycle: c, fraction: f / TAU });
        }
        let distance = ((p - f) / TAU - m as f64).abs();
        assert!(distance < 0.1, "Maslov integer off by {distance}");
        maslov.push(m);
        frac.push(f);
    }

    let basis = dec.harmonic_basis()?;
    let mut delta2 = DiscreteForm::zeros(mesh, 1)?;
    let mut winding = DiscreteForm::zeros(mesh, 1)?;
    for (c, h) in basis.iter().enumerate() {
        delta2 = delta2.plus(&h.scaled(frac[c] / TAU));
        winding = winding.plus(&h.scaled(maslov[c] as f64));
    }
    let exact = closed.minus(&delta2).minus(&winding);
    let raw = dec.integrate_exact(&exact)?;
    let mean = dec.weighted_mean(&raw);
    let phase = DiscreteForm::from_values(mesh, 0, raw.values.iter().map(|v| v - mean).collect())?;
    let (lo, hi) = phase.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let phase_variation = hi - lo;

    let curvature_max = curvature_max(mesh, conn, k)?;
    let is_flat = curvature_max < options.flat_tolerance;
    let trivial_periods = frac.iter().all(|f| f.abs() < options.period_tolerance);
    let is_bohr_sommerfeld =
        is_flat && bs_defects(&periods, options.level).iter().all(|d| *d < options.period_tolerance);
    let is_special =
        is_flat && trivial_periods && maslov.iter().all(|m| *m == 0) && phase_variation < options.phase_tolerance;

    Ok(MaslovReport {
        mesh_id: mesh.id().to_string(),
        power: options.power,
        periods,
        maslov,
        fractional: frac.iter().map(|f| f / TAU).collect(),
        curvature_max,
        delta1_norm: dec.norm(&split.coexact)?,
        is_flat,
        trivial_periods,
        bounded_periods: true,
        level: options.level,
        is_bohr_sommerfeld,
        is_special,
        phase_variation,
        phase,
        delta1: split.coexact,
        delta2,
        solver_residual: split.residual,
    })
}

fn bs_defects(periods: &[f64], level: u32) -> Vec<f64> {
    periods.iter().map(|p| reduce(level as f64 * p).1.abs()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BohrSommerfeld {
    pub level: u32,
    pub is_bohr_sommerfeld: bool,
    /// Distance of each period of `k eta` from `2 pi Z`.
    pub defects: Vec<f64>,
    pub periods: Vec<f64>,
}

/// Bohr-Sommerfeld test at level `k`; requires a flat connection.
pub fn is_bohr_sommerfeld(
    mesh: &LagrangianMesh,
    conn: &RelativeConnection,
    level: u32,
    tol: f64,
) -> Result<BohrSommerfeld> {
    conn.eta.check_on(mesh)?;
    if level == 0 {
        return Err(Error::NotApplicable("level must be positive".into()));
    }
    let curvature = curvature_max(mesh, conn, 1.0)?;
    if curvature >= tol {
        return Err(Error::NotApplicable(format!(
            "connection is not flat (curvature density {curvature:.3e}), Bohr-Sommerfeld periods are undefined"
        )));
    }
    let periods = Dec::new(mesh)?.periods(&conn.eta)?;
    let defects = bs_defects(&periods, level);
    Ok(BohrSommerfeld { level, is_bohr_sommerfeld: defects.iter().all(|d| *d < tol), defects, periods })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalfWeight {
    /// Density coefficient relative to the Riemannian volume, per vertex.
    pub density: DiscreteForm,
    /// Per-vertex masses `density * dual volume`.
    pub masses: Vec<f64>,
    pub integral: f64,
    pub sign_warning: bool,
}

/// Phase-weighted density `(phi + c) dmu` with total mass `r`.
pub fn half_weight(report: &MaslovReport, mesh: &LagrangianMesh, r: f64) -> Result<HalfWeight> {
    report.phase.check_on(mesh)?;
    if report.maslov.iter().any(|m| *m != 0) {
        return Err(Error::NotApplicable(format!(
            "half weighting needs a trivial Maslov class, got {:?}",
            report.maslov
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::NotApplicable(format!("total weight must be positive, got {r}")));
    }
    let dual = mesh.vertex_volumes()?;
    let vol: f64 = dual.iter().sum();
    let mean = report.phase.values.iter().zip(&dual).map(|(p, w)| p * w).sum::<f64>() / vol;
    let density: Vec<f64> = report.phase.values.iter().map(|p| p - mean + r / vol).collect();
    let masses: Vec<f64> = density.iter().zip(&dual).map(|(d, w)| d * w).collect();
    Ok(HalfWeight {
        sign_warning: density.iter().any(|d| *d < 0.0),
        integral: masses.iter().sum(),
        masses,
        density: DiscreteForm::from_values(mesh, 0, density)?,
    })
}
