//! Second fundamental form, the mean curvature 1-form `alpha_H = omega(H, .)`
//! and cross-checks against the transport pipeline.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dec::{Dec, HodgeSplit};
use crate::error::{Error, Result};
use crate::lagmesh::{DiscreteForm, LagrangianMesh};
use crate::transport::{decompose_connection, relative_connection, DecomposeOptions, RelativeConnection};

pub const L_MINIMAL_TOLERANCE: f64 = 1e-3;
pub const H_MINIMAL_TOLERANCE: f64 = 1e-6;

/// Second fundamental form at one vertex, in grid-index units.
#[derive(Clone, Debug)]
pub struct SecondFundamentalForm {
    /// Normal components `II(t_a, t_b)`: `[ss]` on loops, `[ss, st, tt]` on tori.
    pub components: Vec<DVector<f64>>,
    /// Mean curvature vector `g^{ab} II_ab`.
    pub mean: DVector<f64>,
    /// Tangential part removed by the projection, relative to the raw second derivative.
    pub tangential: f64,
}

fn pair_index(dim: usize, a: usize, b: usize) -> usize {
    if dim == 1 {
        0
    } else {
        a + b
    }
}

fn vertex_sff(mesh: &LagrangianMesh, v: usize) -> Result<SecondFundamentalForm> {
    let model = mesh.model();
    let x = &mesh.vertices()[v];
    let g = model.metric_at(x)?;
    let gamma = model.christoffels_at(x)?;
    let t = mesh.tangents(v);
    let dim = t.len();
    let induced = DMatrix::from_fn(dim, dim, |a, b| t[a].dot(&(&g * &t[b])));
    let inv =
        induced.clone().try_inverse().ok_or_else(|| Error::Mesh(format!("degenerate induced metric at vertex {v}")))?;
    let second = mesh.second_differences(v);
    let gt: Vec<DVector<f64>> = t.iter().map(|ta| &g * ta).collect();
    let project = |w: &DVector<f64>| -> (DVector<f64>, f64) {
        let mut tangential = DVector::zeros(w.len());
        for a in 0..dim {
            for b in 0..dim {
                tangential += &t[a] * (inv[(a, b)] * gt[b].dot(w));
            }
        }
        let norm = |u: &DVector<f64>| u.dot(&(&g * u)).sqrt();
        let ratio = norm(&tangential) / norm(w).max(1e-300);
        (w - tangential, ratio)
    };
    let mut components = Vec::with_capacity(second.len());
    let mut tangential = 0.0_f64;
    let mut mean = DVector::zeros(x.len());
    for (a, b) in (0..dim).flat_map(|a| (a..dim).map(move |b| (a, b))) {
        let raw = &second[pair_index(dim, a, b)] + gamma.contract(&t[a], &t[b]);
        let (normal, ratio) = project(&raw);
        tangential = tangential.max(ratio);
        let weight = if a == b { inv[(a, a)] } else { 2.0 * inv[(a, b)] };
        mean += &normal * weight;
        components.push(normal);
    }
    // curvature radius must exceed the local edge length
    let edge = induced.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.sqrt()));
    let curvature = mean.dot(&(&g * &mean)).sqrt();
    if curvature * edge > 0.5 {
        return Err(Error::Refinement(format!(
            "vertex {v}: mean curvature {curvature:.3e} is not resolved by edge length {edge:.3e}"
        )));
    }
    Ok(SecondFundamentalForm { components, mean, tangential })
}

pub fn second_fundamental_form(mesh: &LagrangianMesh) -> Result<Vec<SecondFundamentalForm>> {
    (0..mesh.num_vertices()).into_par_iter().map(|v| vertex_sff(mesh, v)).collect()
}

/// Covector `omega(H, .)` at every vertex.
fn alpha_covectors(mesh: &LagrangianMesh) -> Result<Vec<DVector<f64>>> {
    let sff = second_fundamental_form(mesh)?;
    sff.par_iter()
        .enumerate()
        .map(|(v, s)| {
            let w = mesh.model().symplectic_at(&mesh.vertices()[v])?;
            Ok(w.transpose() * &s.mean)
        })
        .collect()
}

/// Edge integrals of `alpha_H`, trapezoidal along each chord.
pub fn mean_curvature_one_form(mesh: &LagrangianMesh) -> Result<DiscreteForm> {
    let cov = alpha_covectors(mesh)?;
    let values = (0..mesh.num_edges())
        .map(|e| {
            let (a, b) = mesh.edge_vertices(e);
            let (p, q) = mesh.edge_points(e);
            0.5 * (&cov[a] + &cov[b]).dot(&(q - p))
        })
        .collect();
    DiscreteForm::from_values(mesh, 1, values)
}

/// Ricci form integrated over each face, `rho(centre)(u, v)` for the averaged sides.
pub fn ricci_face_integrals(mesh: &LagrangianMesh) -> Result<DiscreteForm> {
    if mesh.dim() != 2 {
        return Err(Error::Degree("Ricci face integrals need a torus grid".into()));
    }
    let values = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let (i, j) = mesh.vertex_grid(f);
            let (i, j) = (i as isize, j as isize);
            let p00 = mesh.position(i, j);
            let p10 = mesh.position(i + 1, j);
            let p01 = mesh.position(i, j + 1);
            let p11 = mesh.position(i + 1, j + 1);
            let u = (&p10 - &p00 + &p11 - &p01) * 0.5;
            let w = (&p01 - &p00 + &p11 - &p10) * 0.5;
            let rho = mesh.model().ricci_form_at(&((p00 + p10 + p01 + p11) * 0.25))?;
            Ok(u.dot(&(rho * w)))
        })
        .collect::<Result<Vec<f64>>>()?;
    DiscreteForm::from_values(mesh, 2, values)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub mesh_id: String,
    /// Largest edge length.
    pub resolution: f64,
    pub alpha_h: DiscreteForm,
    pub eta: DiscreteForm,
    /// `max_e |eta_e - alpha_H(e)| / length_e`.
    pub prop9_residual: f64,
    pub prop9_edge: usize,
    /// `max_f |d alpha_H - rho|_f / area_f` on tori.
    pub ricci_residual: Option<f64>,
    pub l_norm: f64,
    pub h_norm: f64,
    pub hodge_split: HodgeSplit,
}

fn prop9(mesh: &LagrangianMesh, conn: &RelativeConnection, alpha: &DiscreteForm) -> Result<(f64, usize)> {
    let lengths = mesh.edge_lengths()?;
    Ok((0..mesh.num_edges())
        .map(|e| (wrap(conn.eta.values[e] - alpha.values[e]).abs() / lengths[e], e))
        .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best }))
}

/// Compare the transport angles with the mean curvature form edge by edge.
pub fn verify_prop9(mesh: &LagrangianMesh) -> Result<CurvatureReport> {
    let conn = relative_connection(mesh)?;
    let alpha = mean_curvature_one_form(mesh)?;
    let dec = Dec::new(mesh)?;
    let (prop9_residual, prop9_edge) = prop9(mesh, &conn, &alpha)?;
    let ricci_residual = if mesh.dim() == 2 { Some(verify_ricci_identity(mesh)?) } else { None };
    let resolution = mesh.edge_lengths()?.into_iter().fold(0.0, f64::max);
    Ok(CurvatureReport {
        mesh_id: mesh.id().to_string(),
        resolution,
        prop9_residual,
        prop9_edge,
        ricci_residual,
        l_norm: dec.norm(&alpha)?,
        h_norm: dec.norm(&dec.codifferential(&alpha)?)?,
        hodge_split: dec.hodge_decompose(&alpha)?,
        alpha_h: alpha,
        eta: conn.eta,
    })
}

/// `max_f |d alpha_H - rho|_f / area_f`.
pub fn verify_ricci_identity(mesh: &LagrangianMesh) -> Result<f64> {
    if mesh.dim() != 2 {
        return Err(Error::Degree("the Ricci identity is a statement about 2-forms; loops carry none".into()));
    }
    let dec = Dec::new(mesh)?;
    let d_alpha = dec.d(&mean_curvature_one_form(mesh)?)?;
    let rho = ricci_face_integrals(mesh)?;
    let areas = mesh.face_areas()?;
    Ok((0..mesh.num_faces()).map(|f| (d_alpha.values[f] - rho.values[f]).abs() / areas[f]).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimality {
    pub l_norm: f64,
    pub h_norm: f64,
    pub l_minimal: bool,
    pub h_minimal: bool,
}

pub fn minimality_report(mesh: &LagrangianMesh) -> Result<Minimality> {
    minimality_report_with(mesh, L_MINIMAL_TOLERANCE, H_MINIMAL_TOLERANCE)
}

pub fn minimality_report_with(mesh: &LagrangianMesh, l_tol: f64, h_tol: f64) -> Result<Minimality> {
    let dec = Dec::new(mesh)?;
    let alpha = mean_curvature_one_form(mesh)?;
    let l_norm = dec.norm(&alpha)?;
    let h_norm = dec.norm(&dec.codifferential(&alpha)?)?;
    let l_minimal = l_norm < l_tol;
    Ok(Minimality { l_norm, h_norm, l_minimal, h_minimal: l_minimal || h_norm < h_tol })
}

/// Agreement between the Hodge parts of `alpha_H` and the connection decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HodgeMatch {
    /// Normalized periods `(1/2pi) \oint (alpha_H - coexact part)`.
    pub alpha_periods: Vec<f64>,
    /// Fractional periods of the connection, units of `2 pi`.
    pub fractional: Vec<f64>,
    pub maslov: Vec<i64>,
    /// `max |alpha_periods - (fractional + maslov)|`.
    pub period_residual: f64,
    /// `max_e |coexact(alpha_H)_e - Delta_1_e| / length_e`.
    pub coexact_residual: f64,
}

pub fn hodge_match(mesh: &LagrangianMesh, options: &DecomposeOptions) -> Result<HodgeMatch> {
    let conn = relative_connection(mesh)?;
    let report = decompose_connection(mesh, &conn, options)?;
    let dec = Dec::new(mesh)?;
    let alpha = mean_curvature_one_form(mesh)?.scaled(options.power as f64);
    let split = dec.hodge_decompose(&alpha)?;
    let alpha_periods: Vec<f64> = dec.periods(&alpha.minus(&split.coexact))?.iter().map(|p| p / TAU).collect();
    let period_residual = alpha_periods
        .iter()
        .zip(report.fractional.iter().zip(&report.maslov))
        .map(|(a, (f, m))| (a - f - *m as f64).abs())
        .fold(0.0, f64::max);
    let lengths = mesh.edge_lengths()?;
    let coexact_residual = (0..mesh.num_edges())
        .map(|e| (split.coexact.values[e] - report.delta1.values[e]).abs() / lengths[e])
        .fold(0.0, f64::max);
    Ok(HodgeMatch {
        alpha_periods,
        fractional: report.fractional,
        maslov: report.maslov,
        period_residual,
        coexact_residual,
    })
}

#[cfg(test)]
mod tests;
