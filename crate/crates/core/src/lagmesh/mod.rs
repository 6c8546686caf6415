//! Discretized oriented Lagrangian submanifolds: loops in surfaces and periodic
//! quad grids (tori) in complex surfaces.
//!
//! Vertices live in chart coordinates of the ambient model. Closed loops on a
//! flat torus are stored in the universal cover together with the deck
//! translation (`shifts`) that closes them up, so every edge vector is an
//! honest chart displacement.

mod form;
pub mod io;
pub mod shapes;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{to_complex, AmbientModel, Point};
use crate::error::{Error, Result};
pub use form::DiscreteForm;

/// Map from parameters in `[0, 1)^dim` to chart points.
pub type Parametrization = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;

pub const MIN_RESOLUTION: usize = 16;
pub const FLAT_LAGRANGIAN_TOLERANCE: f64 = 1e-8;
pub const CURVED_LAGRANGIAN_TOLERANCE: f64 = 1e-6;

/// Beyond this modulus a sphere loop is moved to the antipodal chart.
const SPHERE_REMAP_RADIUS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Topology {
    Loop { n: usize },
    TorusGrid { n1: usize, n2: usize },
}

impl Topology {
    pub fn num_vertices(&self) -> usize {
        match *self {
            Topology::Loop { n } => n,
            Topology::TorusGrid { n1, n2 } => n1 * n2,
        }
    }

    pub fn num_edges(&self) -> usize {
        match *self {
            Topology::Loop { n } => n,
            Topology::TorusGrid { n1, n2 } => 2 * n1 * n2,
        }
    }

    pub fn num_faces(&self) -> usize {
        match *self {
            Topology::Loop { .. } => 0,
            Topology::TorusGrid { n1, n2 } => n1 * n2,
        }
    }

    /// Dimension of the submanifold, which is also the top form degree.
    pub fn dim(&self) -> usize {
        match self {
            Topology::Loop { .. } => 1,
            Topology::TorusGrid { .. } => 2,
        }
    }

    /// First Betti number.
    pub fn b1(&self) -> usize {
        self.dim()
    }

    fn sizes(&self) -> (usize, usize) {
        match *self {
            Topology::Loop { n } => (n, 1),
            Topology::TorusGrid { n1, n2 } => (n1, n2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    #[default]
    Standard,
    /// Sphere chart `w = 1/z` around the other pole.
    Antipodal,
}

/// Closed chain of oriented edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub edges: Vec<(usize, i8)>,
}

/// Oriented orthonormal tangent frames, one `2n x n` matrix per vertex.
#[derive(Clone, Debug)]
pub struct Frames {
    pub frames: Vec<DMatrix<f64>>,
    /// Vertices whose induced metric is nearly degenerate.
    pub ill_conditioned: Vec<usize>,
}

impl Frames {
    /// Complex determinant of the frame columns read as vectors of `C^n`.
    pub fn complex_det(&self, v: usize) -> Complex<f64> {
        complex_det(&self.frames[v])
    }
}

pub fn complex_det(frame: &DMatrix<f64>) -> Complex<f64> {
    let n = frame.ncols();
    let cols: Vec<DVector<Complex<f64>>> = (0..n).map(|k| to_complex(&frame.column(k).into_owned())).collect();
    let m = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
    m.determinant()
}

#[derive(Clone)]
pub struct LagrangianMesh {
    model: AmbientModel,
    topology: Topology,
    vertices: Vec<Point>,
    shifts: Vec<Point>,
    chart: Chart,
    parametrization: Option<Parametrization>,
    lagrangian_tolerance: f64,
    id: String,
}

impl fmt::Debug for LagrangianMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianMesh")
            .field("id", &self.id)
            .field("topology", &self.topology)
            .field("chart", &self.chart)
            .field("model", self.model.kind())
            .finish_non_exhaustive()
    }
}

fn default_tolerance(model: &AmbientModel) -> f64 {
    if model.is_flat() {
        FLAT_LAGRANGIAN_TOLERANCE
    } else {
        CURVED_LAGRANGIAN_TOLERANCE
    }
}

/// Sixth-order central derivative of a parametrization along one parameter axis.
fn param_derivative(param: &Parametrization, u: &[f64], axis: usize) -> Point {
    const STEP: f64 = 2e-3;
    const WEIGHTS: [(f64, f64); 3] = [(1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
    let eval = |offset: f64| {
        let mut q = u.to_vec();
        q[axis] += offset;
        param(&q)
    };
    let mut acc = eval(0.0) * 0.0;
    for (k, w) in WEIGHTS {
        acc += (eval(k * STEP) - eval(-k * STEP)) * w;
    }
    acc / (60.0 * STEP)
}

fn antipodal(p: &Point) -> Point {
    let r2 = p[0] * p[0] + p[1] * p[1];
    DVector::from_vec(vec![p[0] / r2, -p[1] / r2])
}

/// Gram-Schmidt in the metric `g`, keeping the orientation of `tangents`.
pub fn orthonormalize(g: &DMatrix<f64>, tangents: &[DVector<f64>]) -> (DMatrix<f64>, f64) {
    let dim = g.nrows();
    let mut out = DMatrix::zeros(dim, tangents.len());
    let norms: f64 = tangents.iter().map(|t| t.dot(&(g * t)).sqrt()).product();
    let gram = DMatrix::from_fn(tangents.len(), tangents.len(), |a, b| tangents[a].dot(&(g * &tangents[b])));
    let conditioning = if norms > 0.0 { gram.determinant().max(0.0).sqrt() / norms } else { 0.0 };
    for (k, t) in tangents.iter().enumerate() {
        let mut v = t.clone();
        for j in 0..k {
            let e = out.column(j).into_owned();
            let c = e.dot(&(g * &v));
            v -= e * c;
        }
        let norm = v.dot(&(g * &v)).sqrt();
        out.set_column(k, &(v / norm));
    }
    (out, conditioning)
}

impl LagrangianMesh {
    /// Closed loop from a parametrization of `[0, 1)`.
    pub fn build_loop(model: &AmbientModel, param: Parametrization, n: usize) -> Result<Self> {
        if model.n() != 1 {
            return Err(Error::Dimension(format!(
                "loops are Lagrangian only in complex dimension 1, model has n = {}",
                model.n()
            )));
        }
        if n < MIN_RESOLUTION {
            return Err(Error::Mesh(format!("loop needs at least {MIN_RESOLUTION} vertices, got {n}")));
        }
        let vertices = (0..n).map(|i| param(&[i as f64 / n as f64])).collect();
        let shift = param(&[1.0]) - param(&[0.0]);
        Self::assemble(model, Topology::Loop { n }, vertices, vec![shift], Some(param), default_tolerance(model))
    }

    /// Periodic quad grid from a parametrization of `[0, 1)^2`.
    pub fn build_torus_grid(model: &AmbientModel, param: Parametrization, n1: usize, n2: usize) -> Result<Self> {
        Self::build_torus_grid_with_tolerance(model, param, n1, n2, default_tolerance(model))
    }

    pub fn build_torus_grid_with_tolerance(
        model: &AmbientModel,
        param: Parametrization,
        n1: usize,
        n2: usize,
        tolerance: f64,
    ) -> Result<Self> {
        if model.n() != 2 {
            return Err(Error::Dimension(format!("torus grids need complex dimension 2, model has n = {}", model.n())));
        }
        if n1 < MIN_RESOLUTION || n2 < MIN_RESOLUTION {
            return Err(Error::Mesh(format!("torus grid needs at least {MIN_RESOLUTION} vertices per axis")));
        }
        let vertices = (0..n1 * n2)
            .into_par_iter()
            .map(|v| param(&[(v % n1) as f64 / n1 as f64, (v / n1) as f64 / n2 as f64]))
            .collect();
        let s0 = param(&[1.0, 0.0]) - param(&[0.0, 0.0]);
        let s1 = param(&[0.0, 1.0]) - param(&[0.0, 0.0]);
        Self::assemble(model, Topology::TorusGrid { n1, n2 }, vertices, vec![s0, s1], Some(param), tolerance)
    }

    /// Mesh from raw vertex data; the Lagrangian condition is checked with discrete tangents.
    pub fn from_vertices(
        model: &AmbientModel,
        topology: Topology,
        vertices: Vec<Point>,
        shifts: Vec<Point>,
        chart: Chart,
        tolerance: f64,
    ) -> Result<Self> {
        let mut mesh = Self::assemble(model, topology, vertices, shifts, None, tolerance)?;
        if chart == Chart::Antipodal && mesh.chart == Chart::Standard {
            mesh.chart = Chart::Antipodal;
        }
        Ok(mesh)
    }

    fn assemble(
        model: &AmbientModel,
        topology: Topology,
        mut vertices: Vec<Point>,
        shifts: Vec<Point>,
        mut parametrization: Option<Parametrization>,
        tolerance: f64,
    ) -> Result<Self> {
        if vertices.len() != topology.num_vertices() {
            return Err(Error::Mesh(format!(
                "topology {topology:?} needs {} vertices, got {}",
                topology.num_vertices(),
                vertices.len()
            )));
        }
        if shifts.len() != topology.dim() {
            return Err(Error::Mesh("one deck translation per periodic direction is required".into()));
        }
        for v in &vertices {
            model.check_point(v)?;
        }
        let shifts = shifts.into_iter().map(|s| snap_shift(model, s)).collect::<Result<Vec<_>>>()?;
        let mut chart = Chart::Standard;
        if model.is_sphere() {
            let max_z = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let min_z = vertices.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
            if max_z > SPHERE_REMAP_RADIUS && min_z > 0.0 && 1.0 / min_z < max_z {
                vertices = vertices.iter().map(antipodal).collect();
                parametrization =
                    parametrization.map(|p| -> Parametrization { Arc::new(move |u: &[f64]| antipodal(&p(u))) });
                chart = Chart::Antipodal;
            }
        }
        let mut mesh = LagrangianMesh {
            model: model.clone(),
            topology,
            vertices,
            shifts,
            chart,
            parametrization,
            lagrangian_tolerance: tolerance,
            id: String::new(),
        };
        mesh.id = mesh.compute_id();
        mesh.check_degenerate()?;
        let (residual, vertex) = mesh.lagrangian_residual()?;
        if residual > tolerance {
            return Err(Error::NotLagrangian { vertex, residual, tolerance });
        }
        Ok(mesh)
    }

    fn compute_id(&self) -> String {
        let mut h = DefaultHasher::new();
        self.topology.hash(&mut h);
        serde_json::to_string(&self.model).unwrap_or_default().hash(&mut h);
        for v in self.vertices.iter().chain(&self.shifts) {
            for x in v.iter() {
                x.to_bits().hash(&mut h);
            }
        }
        format!("{:016x}", h.finish())
    }

    fn check_degenerate(&self) -> Result<()> {
        for e in 0..self.num_edges() {
            let (a, b) = self.edge_points(e);
            if (b - a).norm() < 1e-12 {
                let (t, hd) = self.edge_vertices(e);
                return Err(Error::Mesh(format!("degenerate edge {e} between vertices {t} and {hd}")));
            }
        }
        Ok(())
    }

    /// Same topology and deck translations with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Mesh("vertex count changed".into()));
        }
        for v in &vertices {
            self.model.check_point(v)?;
        }
        let mut mesh = LagrangianMesh {
            model: self.model.clone(),
            topology: self.topology,
            vertices,
            shifts: self.shifts.clone(),
            chart: self.chart,
            parametrization: None,
            lagrangian_tolerance: self.lagrangian_tolerance,
            id: String::new(),
        };
        mesh.id = mesh.compute_id();
        mesh.check_degenerate()?;
        Ok(mesh)
    }

    /// Loop vertices redistributed to equal induced spacing along cubic Hermite arcs; vertex 0 stays.
    pub fn resample_uniform(&self) -> Result<Self> {
        let mut mesh = self.resample_once()?;
        for _ in 0..3 {
            mesh = mesh.resample_once()?;
        }
        Ok(mesh)
    }

    fn resample_once(&self) -> Result<Self> {
        let Topology::Loop { n } = self.topology else {
            return Err(Error::Degree("uniform resampling is only defined for loops".into()));
        };
        let lengths = self.edge_lengths()?;
        let total: f64 = lengths.iter().sum();
        let tangents: Vec<DVector<f64>> = (0..n).map(|v| self.smooth_derivative(v, 0)).collect();
        let mut vertices = Vec::with_capacity(n);
        let (mut e, mut start) = (0usize, 0.0);
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while e + 1 < n && start + lengths[e] <= target {
                start += lengths[e];
                e += 1;
            }
            let t = ((target - start) / lengths[e]).clamp(0.0, 1.0);
            let (p, q) = self.edge_points(e);
            let (h00, h10, h01, h11) = (
                (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
                t * (1.0 - t) * (1.0 - t),
                t * t * (3.0 - 2.0 * t),
                t * t * (t - 1.0),
            );
            vertices.push(p * h00 + &tangents[e] * h10 + q * h01 + &tangents[(e + 1) % n] * h11);
        }
        self.with_vertices(vertices)
    }

    /// The same submanifold with the opposite orientation (first parameter reversed).
    pub fn reversed(&self) -> Self {
        let (n1, n2) = self.topology.sizes();
        let s0 = self.shifts[0].clone();
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for j in 0..n2 {
            for i in 0..n1 {
                let src = (n1 - i) % n1;
                let mut v = self.vertices[src + n1 * j].clone();
                if i > 0 {
                    v -= &s0;
                }
                vertices.push(v);
            }
        }
        let mut shifts = self.shifts.clone();
        shifts[0] = -s0.clone();
        let parametrization = self.parametrization.clone().map(|p| -> Parametrization {
            Arc::new(move |u: &[f64]| {
                let mut q = u.to_vec();
                q[0] = 1.0 - q[0];
                p(&q) - &s0
            })
        });
        let mut mesh = LagrangianMesh {
            model: self.model.clone(),
            topology: self.topology,
            vertices,
            shifts,
            chart: self.chart,
            parametrization,
            lagrangian_tolerance: self.lagrangian_tolerance,
            id: String::new(),
        };
        mesh.id = mesh.compute_id();
        mesh
    }

    pub fn model(&self) -> &AmbientModel {
        &self.model
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn shifts(&self) -> &[Point] {
        &self.shifts
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn parametrization(&self) -> Option<&Parametrization> {
        self.parametrization.as_ref()
    }

    pub fn lagrangian_tolerance(&self) -> f64 {
        self.lagrangian_tolerance
    }

    pub fn dim(&self) -> usize {
        self.topology.dim()
    }

    pub fn num_vertices(&self) -> usize {
        self.topology.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.topology.num_edges()
    }

    pub fn num_faces(&self) -> usize {
        self.topology.num_faces()
    }

    /// Number of cells of a given degree.
    pub fn cell_count(&self, degree: usize) -> Result<usize> {
        match degree {
            0 => Ok(self.num_vertices()),
            1 => Ok(self.num_edges()),
            2 if self.dim() == 2 => Ok(self.num_faces()),
            _ => Err(Error::Degree(format!("no degree-{degree} cells on a {}-dimensional mesh", self.dim()))),
        }
    }

    /// Grid size `(n1, n2)`; loops report `(n, 1)`.
    pub fn grid_size(&self) -> (usize, usize) {
        self.topology.sizes()
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        let (n1, _) = self.grid_size();
        i + n1 * j
    }

    pub fn vertex_grid(&self, v: usize) -> (usize, usize) {
        let (n1, _) = self.grid_size();
        (v % n1, v / n1)
    }

    /// Unwrapped chart position of grid vertex `(i, j)` with arbitrary integer indices.
    pub fn position(&self, i: isize, j: isize) -> Point {
        let (n1, n2) = self.grid_size();
        let (qi, ri) = (i.div_euclid(n1 as isize), i.rem_euclid(n1 as isize) as usize);
        let (qj, rj) = (j.div_euclid(n2 as isize), j.rem_euclid(n2 as isize) as usize);
        let mut p = self.vertices[ri + n1 * rj].clone();
        if qi != 0 {
            p += &self.shifts[0] * qi as f64;
        }
        if qj != 0 && self.dim() == 2 {
            p += &self.shifts[1] * qj as f64;
        }
        p
    }

    /// `(axis, i, j)` of an edge: it runs from `(i, j)` one step along `axis`.
    pub fn edge_grid(&self, e: usize) -> (usize, usize, usize) {
        let nv = self.num_vertices();
        let (axis, local) = if e < nv { (0, e) } else { (1, e - nv) };
        let (i, j) = self.vertex_grid(local);
        (axis, i, j)
    }

    pub fn edge_index(&self, axis: usize, i: usize, j: usize) -> usize {
        axis * self.num_vertices() + self.vertex_index(i, j)
    }

    /// Tail and head vertex indices.
    pub fn edge_vertices(&self, e: usize) -> (usize, usize) {
        let (n1, n2) = self.grid_size();
        let (axis, i, j) = self.edge_grid(e);
        let tail = self.vertex_index(i, j);
        let head = if axis == 0 { self.vertex_index((i + 1) % n1, j) } else { self.vertex_index(i, (j + 1) % n2) };
        (tail, head)
    }

    /// Tail position and the head position unwrapped next to it.
    pub fn edge_points(&self, e: usize) -> (Point, Point) {
        let (axis, i, j) = self.edge_grid(e);
        let (i, j) = (i as isize, j as isize);
        let head = if axis == 0 { self.position(i + 1, j) } else { self.position(i, j + 1) };
        (self.position(i, j), head)
    }

    /// Oriented boundary edges of face `(i, j)`.
    pub fn face_edges(&self, f: usize) -> [(usize, f64); 4] {
        let (n1, n2) = self.grid_size();
        let (i, j) = self.vertex_grid(f);
        [
            (self.edge_index(0, i, j), 1.0),
            (self.edge_index(1, (i + 1) % n1, j), 1.0),
            (self.edge_index(0, i, (j + 1) % n2), -1.0),
            (self.edge_index(1, i, j), -1.0),
        ]
    }

    /// Basis of `H_1`: the loop itself, or the two grid-axis cycles through vertex 0.
    pub fn h1_basis(&self) -> Vec<Cycle> {
        let (n1, n2) = self.grid_size();
        match self.topology {
            Topology::Loop { n } => vec![Cycle { edges: (0..n).map(|e| (e, 1)).collect() }],
            Topology::TorusGrid { .. } => vec![
                Cycle { edges: (0..n1).map(|i| (self.edge_index(0, i, 0), 1)).collect() },
                Cycle { edges: (0..n2).map(|j| (self.edge_index(1, 0, j), 1)).collect() },
            ],
        }
    }

    /// Central-difference tangents at a vertex, one per parameter axis (index units).
    pub fn tangents(&self, v: usize) -> Vec<DVector<f64>> {
        let (i, j) = self.vertex_grid(v);
        let (i, j) = (i as isize, j as isize);
        let mut out = vec![(self.position(i + 1, j) - self.position(i - 1, j)) * 0.5];
        if self.dim() == 2 {
            out.push((self.position(i, j + 1) - self.position(i, j - 1)) * 0.5);
        }
        out
    }

    /// Fourth-order derivative along one grid axis (index units), used for transport curves.
    pub fn smooth_derivative(&self, v: usize, axis: usize) -> DVector<f64> {
        let (i, j) = self.vertex_grid(v);
        let (i, j) = (i as isize, j as isize);
        let at = |k: isize| {
            if axis == 0 {
                self.position(i + k, j)
            } else {
                self.position(i, j + k)
            }
        };
        (at(-2) - at(2) + (at(1) - at(-1)) * 8.0) / 12.0
    }

    /// Second differences at a vertex: `[x_ss]` or `[x_ss, x_st, x_tt]` (index units).
    pub fn second_differences(&self, v: usize) -> Vec<DVector<f64>> {
        let (i, j) = self.vertex_grid(v);
        let (i, j) = (i as isize, j as isize);
        let c = self.position(i, j);
        let ss = self.position(i + 1, j) + self.position(i - 1, j) - &c * 2.0;
        if self.dim() == 1 {
            return vec![ss];
        }
        let tt = self.position(i, j + 1) + self.position(i, j - 1) - &c * 2.0;
        let st = (self.position(i + 1, j + 1) - self.position(i + 1, j - 1) - self.position(i - 1, j + 1)
            + self.position(i - 1, j - 1))
            * 0.25;
        vec![ss, st, tt]
    }

    /// Induced metric `g_ab = G(t_a, t_b)` at a vertex from discrete tangents.
    pub fn induced_metric(&self, v: usize) -> Result<DMatrix<f64>> {
        let g = self.model.metric_at(&self.vertices[v])?;
        let t = self.tangents(v);
        Ok(DMatrix::from_fn(t.len(), t.len(), |a, b| t[a].dot(&(&g * &t[b]))))
    }

    fn residual_of(&self, x: &Point, t: &[DVector<f64>]) -> Result<f64> {
        if t.len() < 2 {
            return Ok(0.0);
        }
        let w = self.model.symplectic_at(x)?;
        let g = self.model.metric_at(x)?;
        let norm = |v: &DVector<f64>| v.dot(&(&g * v)).sqrt();
        Ok((t[0].dot(&(&w * &t[1]))).abs() / (norm(&t[0]) * norm(&t[1])))
    }

    /// Worst normalized `|omega(t_1, t_2)|` over vertices, from discrete tangents.
    pub fn lagrangian_residual_discrete(&self) -> Result<(f64, usize)> {
        let mut worst = (0.0, 0);
        for v in 0..self.num_vertices() {
            let r = self.residual_of(&self.vertices[v], &self.tangents(v))?;
            if r > worst.0 {
                worst = (r, v);
            }
        }
        Ok(worst)
    }

    /// Worst normalized `|omega(t_1, t_2)|`, using parametrization derivatives when available.
    pub fn lagrangian_residual(&self) -> Result<(f64, usize)> {
        let Some(param) = &self.parametrization else {
            return self.lagrangian_residual_discrete();
        };
        if self.dim() == 1 {
            return Ok((0.0, 0));
        }
        let (n1, n2) = self.grid_size();
        let residuals = (0..self.num_vertices())
            .into_par_iter()
            .map(|v| {
                let (i, j) = self.vertex_grid(v);
                let u = [i as f64 / n1 as f64, j as f64 / n2 as f64];
                let t = [param_derivative(param, &u, 0), param_derivative(param, &u, 1)];
                self.residual_of(&self.vertices[v], &t)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(residuals.into_iter().enumerate().fold((0.0, 0), |w, (v, r)| if r > w.0 { (r, v) } else { w }))
    }

    /// Induced length of each edge: chord measured with the metric at its midpoint.
    pub fn edge_lengths(&self) -> Result<Vec<f64>> {
        (0..self.num_edges())
            .map(|e| {
                let (a, b) = self.edge_points(e);
                let d = &b - &a;
                let g = self.model.metric_at(&((a + b) * 0.5))?;
                Ok(d.dot(&(g * &d)).sqrt())
            })
            .collect()
    }

    /// Induced area of each face from its averaged side vectors.
    pub fn face_areas(&self) -> Result<Vec<f64>> {
        if self.dim() != 2 {
            return Ok(Vec::new());
        }
        (0..self.num_faces())
            .map(|f| {
                let (i, j) = self.vertex_grid(f);
                let (i, j) = (i as isize, j as isize);
                let p00 = self.position(i, j);
                let p10 = self.position(i + 1, j);
                let p01 = self.position(i, j + 1);
                let p11 = self.position(i + 1, j + 1);
                let u = (&p10 - &p00 + &p11 - &p01) * 0.5;
                let w = (&p01 - &p00 + &p11 - &p10) * 0.5;
                let g = self.model.metric_at(&((p00 + p10 + p01 + p11) * 0.25))?;
                let guu = u.dot(&(&g * &u));
                let gww = w.dot(&(&g * &w));
                let guw = u.dot(&(&g * &w));
                Ok((guu * gww - guw * guw).max(0.0).sqrt())
            })
            .collect()
    }

    /// Dual-cell volume of each vertex; sums to the total volume.
    pub fn vertex_volumes(&self) -> Result<Vec<f64>> {
        match self.topology {
            Topology::Loop { n } => {
                let l = self.edge_lengths()?;
                Ok((0..n).map(|i| 0.5 * (l[i] + l[(i + n - 1) % n])).collect())
            }
            Topology::TorusGrid { n1, n2 } => {
                let a = self.face_areas()?;
                Ok((0..self.num_vertices())
                    .map(|v| {
                        let (i, j) = self.vertex_grid(v);
                        let im = (i + n1 - 1) % n1;
                        let jm = (j + n2 - 1) % n2;
                        0.25 * (a[self.vertex_index(i, j)]
                            + a[self.vertex_index(im, j)]
                            + a[self.vertex_index(i, jm)]
                            + a[self.vertex_index(im, jm)])
                    })
                    .collect())
            }
        }
    }

    /// Total Riemannian volume and the top-degree volume cochain.
    pub fn induced_volume(&self) -> Result<(f64, DiscreteForm)> {
        let cells = if self.dim() == 1 { self.edge_lengths()? } else { self.face_areas()? };
        let total = cells.iter().sum();
        Ok((total, DiscreteForm::from_values(self, self.dim(), cells)?))
    }

    /// Diagonal Hodge-star weights on edges: `<a, b>_1 = sum w_e a_e b_e`.
    pub fn edge_star_weights(&self) -> Result<Vec<f64>> {
        if self.dim() == 1 {
            return Ok(self.edge_lengths()?.iter().map(|l| 1.0 / l).collect());
        }
        (0..self.num_edges())
            .map(|e| {
                let (axis, i, j) = self.edge_grid(e);
                let (i, j) = (i as isize, j as isize);
                let (a, b) = self.edge_points(e);
                let u = &b - &a;
                // transverse direction averaged over both endpoints
                let w = if axis == 0 {
                    (self.position(i, j + 1) - self.position(i, j - 1) + self.position(i + 1, j + 1)
                        - self.position(i + 1, j - 1))
                        * 0.25
                } else {
                    (self.position(i + 1, j) - self.position(i - 1, j) + self.position(i + 1, j + 1)
                        - self.position(i - 1, j + 1))
                        * 0.25
                };
                let g = self.model.metric_at(&((a + b) * 0.5))?;
                let guu = u.dot(&(&g * &u));
                let gww = w.dot(&(&g * &w));
                let guw = u.dot(&(&g * &w));
                let det = guu * gww - guw * guw;
                if det <= 0.0 {
                    return Err(Error::Mesh(format!("degenerate induced metric at edge {e}")));
                }
                // (gram^{-1})_{uu} * sqrt(det gram)
                Ok(gww / det * det.sqrt())
            })
            .collect()
    }

    /// Oriented orthonormal frames of `TS` at every vertex.
    pub fn orthonormal_tangent_frames(&self) -> Result<Frames> {
        let mut frames = Vec::with_capacity(self.num_vertices());
        let mut ill = Vec::new();
        for v in 0..self.num_vertices() {
            let g = self.model.metric_at(&self.vertices[v])?;
            let (frame, conditioning) = orthonormalize(&g, &self.tangents(v));
            if conditioning.is_nan() || conditioning <= 1e-6 {
                ill.push(v);
            }
            frames.push(frame);
        }
        Ok(Frames { frames, ill_conditioned: ill })
    }
}

/// Deck translations must vanish off tori and be lattice vectors on tori.
fn snap_shift(model: &AmbientModel, shift: Point) -> Result<Point> {
    match model.lattice() {
        None => {
            if shift.norm() > 1e-9 {
                return Err(Error::Mesh(format!("parametrization does not close up (gap {:.3e})", shift.norm())));
            }
            Ok(DVector::zeros(shift.len()))
        }
        Some(lattice) => {
            let inv = lattice.clone().try_inverse().expect("validated lattice");
            let coeffs = inv * &shift;
            if coeffs.iter().any(|c| (c - c.round()).abs() > 1e-8) {
                return Err(Error::Mesh("seam translation is not a lattice vector".into()));
            }
            Ok(lattice * coeffs.map(f64::round))
        }
    }
}
