//! Levi-Civita transport, the determinant connection relative to the tangent
//! frame trivialization, and everything read off from it: Maslov integers,
//! Bohr-Sommerfeld defects, the phase and the half-weighted density.
//!
//! Conventions. Along an edge `a -> b` the tail frame is transported to `b` and
//! written in the head frame as a unitary matrix `U`; the edge angle is
//! `eta_e = arg det U`. With this choice `eta` integrates `alpha_H = omega(H, .)`
//! and its face sums integrate the Ricci form. A clockwise unit circle in the
//! plane has `sum eta = 2 pi` and Maslov integer 1.

mod report;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientModel, Point};
use crate::dec::Dec;
use crate::error::{Error, Result};
use crate::lagmesh::{orthonormalize, DiscreteForm, Frames, LagrangianMesh};
pub use report::{
    decompose_connection, half_weight, is_bohr_sommerfeld, BohrSommerfeld, DecomposeOptions, HalfWeight, MaslovReport,
};

/// Edge angles at or beyond this bound mean the mesh is too coarse.
pub const UNRESOLVED_ANGLE: f64 = std::f64::consts::FRAC_PI_2;

/// RK4 steps per edge.
const SUBSTEPS: usize = 4;

/// Edge angles of the determinant connection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelativeConnection {
    pub eta: DiscreteForm,
    pub max_angle: f64,
    /// Whether every `|eta_e|` is below [`UNRESOLVED_ANGLE`]; always true for a returned value.
    pub resolved: bool,
}

fn transport_ode(
    model: &AmbientModel,
    x: &Point,
    velocity: &DVector<f64>,
    frame: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let gamma = model.christoffels_at(x)?;
    let mut out = DMatrix::zeros(frame.nrows(), frame.ncols());
    for (k, col) in frame.column_iter().enumerate() {
        out.set_column(k, &-gamma.contract(velocity, &col.into_owned()));
    }
    Ok(out)
}

/// RK4 transport of `frame` along `curve(s)`, `s in [0, 1]`, with derivative `speed(s)`.
fn transport_along(
    model: &AmbientModel,
    curve: impl Fn(f64) -> Point,
    speed: impl Fn(f64) -> DVector<f64>,
    frame: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if model.is_flat() {
        return Ok(frame.clone());
    }
    let h = 1.0 / SUBSTEPS as f64;
    let mut v = frame.clone();
    for step in 0..SUBSTEPS {
        let s = step as f64 * h;
        let f = |t: f64, v: &DMatrix<f64>| transport_ode(model, &curve(t), &speed(t), v);
        let k1 = f(s, &v)?;
        let k2 = f(s + 0.5 * h, &(&v + &k1 * (0.5 * h)))?;
        let k3 = f(s + 0.5 * h, &(&v + &k2 * (0.5 * h)))?;
        let k4 = f(s + h, &(&v + &k3 * h))?;
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(v)
}

fn check_step(model: &AmbientModel, p: &Point, q: &Point) -> Result<()> {
    if model.is_flat() {
        return Ok(());
    }
    // the metric must not change by more than a factor 2 across one edge
    let gp = model.metric_at(p)?;
    let gq = model.metric_at(q)?;
    let ratio = gq.trace() / gp.trace();
    if !(0.5..=2.0).contains(&ratio) {
        return Err(Error::Refinement(format!("metric changes by a factor {ratio:.3} across one edge")));
    }
    Ok(())
}

/// Transport a frame along the chord `p -> q` and re-orthonormalize at `q`.
pub fn parallel_transport_edge(
    model: &AmbientModel,
    p: &Point,
    q: &Point,
    frame: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    model.check_point(p)?;
    model.check_point(q)?;
    if frame.nrows() != model.real_dim() {
        return Err(Error::Dimension(format!("frame has {} rows, model needs {}", frame.nrows(), model.real_dim())));
    }
    if (q - p).norm() == 0.0 {
        return Ok(frame.clone());
    }
    check_step(model, p, q)?;
    let d = q - p;
    let out = transport_along(model, |s| p + &d * s, |_| d.clone(), frame)?;
    let g = model.metric_at(q)?;
    let cols: Vec<DVector<f64>> = out.column_iter().map(|c| c.into_owned()).collect();
    Ok(orthonormalize(&g, &cols).0)
}

/// Complex coordinates of the columns of `moved` in the unitary frame `head`.
fn unitary_coordinates(
    model: &AmbientModel,
    x: &Point,
    head: &DMatrix<f64>,
    moved: &DMatrix<f64>,
) -> Result<DMatrix<Complex<f64>>> {
    let g = model.metric_at(x)?;
    let i = model.complex_structure();
    let n = head.ncols();
    let gm = &g * moved;
    let ih = &i * head;
    Ok(DMatrix::from_fn(n, n, |j, k| Complex::new(head.column(j).dot(&gm.column(k)), ih.column(j).dot(&gm.column(k)))))
}

/// Cubic Hermite curve through the edge endpoints with smooth end tangents.
struct EdgeCurve {
    p: Point,
    q: Point,
    m0: DVector<f64>,
    m1: DVector<f64>,
}

impl EdgeCurve {
    fn at(&self, s: f64) -> Point {
        let (s2, s3) = (s * s, s * s * s);
        &self.p * (2.0 * s3 - 3.0 * s2 + 1.0)
            + &self.m0 * (s3 - 2.0 * s2 + s)
            + &self.q * (-2.0 * s3 + 3.0 * s2)
            + &self.m1 * (s3 - s2)
    }

    fn speed(&self, s: f64) -> DVector<f64> {
        let s2 = s * s;
        &self.p * (6.0 * s2 - 6.0 * s)
            + &self.m0 * (3.0 * s2 - 4.0 * s + 1.0)
            + &self.q * (-6.0 * s2 + 6.0 * s)
            + &self.m1 * (3.0 * s2 - 2.0 * s)
    }
}

fn edge_angle(mesh: &LagrangianMesh, frames: &Frames, e: usize) -> Result<f64> {
    let model = mesh.model();
    let (tail, head) = mesh.edge_vertices(e);
    let (p, q) = mesh.edge_points(e);
    let moved = if model.is_flat() {
        frames.frames[tail].clone()
    } else {
        check_step(model, &p, &q)?;
        let (axis, _, _) = mesh.edge_grid(e);
        let curve = EdgeCurve {
            m0: mesh.smooth_derivative(tail, axis),
            m1: mesh.smooth_derivative(head, axis),
            p,
            q: q.clone(),
        };
        transport_along(model, |s| curve.at(s), |s| curve.speed(s), &frames.frames[tail])?
    };
    let u = unitary_coordinates(model, &q, &frames.frames[head], &moved)?;
    Ok(u.determinant().arg())
}

/// Edge angles for given frames; see [`relative_connection`].
pub fn relative_connection_with_frames(mesh: &LagrangianMesh, frames: &Frames) -> Result<RelativeConnection> {
    let values =
        (0..mesh.num_edges()).into_par_iter().map(|e| edge_angle(mesh, frames, e)).collect::<Result<Vec<f64>>>()?;
    let (edge, max_angle) =
        values
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(be, bm), (e, v)| if v.abs() > bm { (e, v.abs()) } else { (be, bm) });
    if max_angle >= UNRESOLVED_ANGLE {
        return Err(Error::UnresolvedMesh { edge, angle: values[edge] });
    }
    Ok(RelativeConnection { eta: DiscreteForm::from_values(mesh, 1, values)?, max_angle, resolved: true })
}

/// Determinant connection of the mesh relative to its tangent frames.
pub fn relative_connection(mesh: &LagrangianMesh) -> Result<RelativeConnection> {
    relative_connection_with_frames(mesh, &mesh.orthonormal_tangent_frames()?)
}

/// Face sums of `eta`; integrals of the restricted Ricci form over the faces.
pub fn connection_curvature(mesh: &LagrangianMesh, conn: &RelativeConnection) -> Result<DiscreteForm> {
    if mesh.dim() != 2 {
        return Err(Error::Degree("connection curvature needs faces (torus grid)".into()));
    }
    conn.eta.check_on(mesh)?;
    Dec::new(mesh)?.d(&conn.eta)
}

/// `conj(theta(tau))` per vertex for the holomorphic volume form `theta`.
pub fn theta_bar(mesh: &LagrangianMesh) -> Result<Vec<Complex<f64>>> {
    let model = mesh.model();
    let frames = mesh.orthonormal_tangent_frames()?;
    (0..mesh.num_vertices())
        .map(|v| {
            let theta = model.holomorphic_volume_at(&mesh.vertices()[v])? * frames.complex_det(v);
            Ok(theta.conj())
        })
        .collect()
}

/// Signed count of zeros of `Im conj(theta(tau))` along each `H_1` basis cycle, halved.
pub fn imtheta_zero_set(mesh: &LagrangianMesh) -> Result<Vec<i64>> {
    let values = theta_bar(mesh)?;
    let cycles = mesh.h1_basis();
    let mut out = Vec::with_capacity(cycles.len());
    for (c, cycle) in cycles.iter().enumerate() {
        let path: Vec<usize> = cycle
            .edges
            .iter()
            .map(|&(e, s)| {
                let (a, b) = mesh.edge_vertices(e);
                if s >= 0 {
                    a
                } else {
                    b
                }
            })
            .collect();
        let mut count = None;
        for attempt in 0..8 {
            let rot = Complex::from_polar(1.0, 0.137 * attempt as f64);
            let z: Vec<Complex<f64>> = path.iter().map(|&v| values[v] * rot).collect();
            if z.iter().any(|w| w.im.abs() < 1e-12) {
                continue;
            }
            let mut signed = 0i64;
            for k in 0..z.len() {
                let (a, b) = (z[k], z[(k + 1) % z.len()]);
                if a.im.signum() != b.im.signum() {
                    let t = a.im / (a.im - b.im);
                    let re = a.re + t * (b.re - a.re);
                    signed += if (b.im > a.im) == (re > 0.0) { 1 } else { -1 };
                }
            }
            count = Some(signed / 2);
            break;
        }
        out.push(count.ok_or(Error::DegenerateZeroSet(c))?);
    }
    Ok(out)
}
