//! Discrete exterior calculus on loop and torus meshes.
//!
//! Cochains are [`DiscreteForm`]s; `d` is the signed incidence matrix and the
//! inner products use diagonal Hodge stars built from the induced metric:
//! vertex dual volumes on 0-forms, [`LagrangianMesh::edge_star_weights`] on
//! 1-forms and inverse face areas on 2-forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagmesh::{Cycle, DiscreteForm, LagrangianMesh};
use crate::linalg::{dot, solve_deflated, CsrMatrix};

/// Relative residual for every Laplacian solve.
pub const SOLVER_TOLERANCE: f64 = 1e-12;

/// Assembled operators of one mesh.
#[derive(Clone, Debug)]
pub struct Dec {
    mesh_id: String,
    d0: CsrMatrix,
    d1: Option<CsrMatrix>,
    star0: Vec<f64>,
    star1: Vec<f64>,
    star2: Vec<f64>,
    cycles: Vec<Cycle>,
    edge_vertices: Vec<(usize, usize)>,
}

/// `exact + coexact + harmonic` splitting of a 1-form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HodgeSplit {
    pub potential: DiscreteForm,
    pub exact: DiscreteForm,
    pub coexact: DiscreteForm,
    pub harmonic: DiscreteForm,
    /// Largest relative residual of the two Laplacian solves.
    pub residual: f64,
}

impl Dec {
    pub fn new(mesh: &LagrangianMesh) -> Result<Self> {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let mut t0 = Vec::with_capacity(2 * ne);
        let mut edge_vertices = Vec::with_capacity(ne);
        for e in 0..ne {
            let (a, b) = mesh.edge_vertices(e);
            t0.push((e, a, -1.0));
            t0.push((e, b, 1.0));
            edge_vertices.push((a, b));
        }
        let d0 = CsrMatrix::from_triplets(ne, nv, t0);
        let d1 = (mesh.dim() == 2).then(|| {
            let mut t1 = Vec::with_capacity(4 * mesh.num_faces());
            for f in 0..mesh.num_faces() {
                for (e, s) in mesh.face_edges(f) {
                    t1.push((f, e, s));
                }
            }
            CsrMatrix::from_triplets(mesh.num_faces(), ne, t1)
        });
        let star2 = mesh.face_areas()?.iter().map(|a| 1.0 / a).collect();
        Ok(Dec {
            mesh_id: mesh.id().to_string(),
            d0,
            d1,
            star0: mesh.vertex_volumes()?,
            star1: mesh.edge_star_weights()?,
            star2,
            cycles: mesh.h1_basis(),
            edge_vertices,
        })
    }

    pub fn mesh_id(&self) -> &str {
        &self.mesh_id
    }

    pub fn top_degree(&self) -> usize {
        if self.d1.is_some() {
            2
        } else {
            1
        }
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    /// Diagonal Hodge star (mass matrix) on `degree`-forms.
    pub fn star(&self, degree: usize) -> Result<&[f64]> {
        match degree {
            0 => Ok(&self.star0),
            1 => Ok(&self.star1),
            2 if self.d1.is_some() => Ok(&self.star2),
            _ => Err(Error::Degree(format!("no degree-{degree} forms"))),
        }
    }

    fn check(&self, form: &DiscreteForm) -> Result<()> {
        if form.mesh_id != self.mesh_id {
            return Err(Error::Mesh(format!("form lives on mesh {}, operators on {}", form.mesh_id, self.mesh_id)));
        }
        Ok(())
    }

    fn wrap(&self, degree: usize, values: Vec<f64>) -> DiscreteForm {
        DiscreteForm { degree, mesh_id: self.mesh_id.clone(), values }
    }

    fn incidence(&self, degree: usize) -> Result<&CsrMatrix> {
        match degree {
            0 => Ok(&self.d0),
            1 => self.d1.as_ref().ok_or_else(|| Error::Degree("d of a top-degree form on a loop".into())),
            _ => Err(Error::Degree(format!("d of a top-degree ({degree}) form"))),
        }
    }

    pub fn d(&self, form: &DiscreteForm) -> Result<DiscreteForm> {
        self.check(form)?;
        let m = self.incidence(form.degree)?;
        Ok(self.wrap(form.degree + 1, m.mul_vec(&form.values)))
    }

    /// Adjoint of `d` for the Hodge-star inner products.
    pub fn codifferential(&self, form: &DiscreteForm) -> Result<DiscreteForm> {
        self.check(form)?;
        if form.degree == 0 {
            return Err(Error::Degree("codifferential of a 0-form".into()));
        }
        let k = form.degree - 1;
        let m = self.incidence(k)?;
        let hi = self.star(form.degree)?;
        let lo = self.star(k)?;
        let weighted: Vec<f64> = form.values.iter().zip(hi).map(|(v, w)| v * w).collect();
        let values = m.transpose().mul_vec(&weighted).iter().zip(lo).map(|(v, w)| v / w).collect();
        Ok(self.wrap(k, values))
    }

    /// `<a, b>` in the Hodge-star inner product.
    pub fn inner(&self, a: &DiscreteForm, b: &DiscreteForm) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if a.degree != b.degree {
            return Err(Error::Degree("inner product of forms of different degree".into()));
        }
        let w = self.star(a.degree)?;
        Ok(a.values.iter().zip(&b.values).zip(w).map(|((x, y), w)| x * y * w).sum())
    }

    pub fn norm(&self, a: &DiscreteForm) -> Result<f64> {
        Ok(self.inner(a, a)?.sqrt())
    }

    /// Weighted graph Laplacian `d0^T M1 d0` acting on vertex values.
    pub fn laplacian0(&self) -> CsrMatrix {
        self.d0.transpose().mul_diag_mul(&self.star1, &self.d0)
    }

    fn max_iterations(&self) -> usize {
        20 * self.d0.ncols() + 2000
    }

    pub fn hodge_decompose(&self, form: &DiscreteForm) -> Result<HodgeSplit> {
        self.check(form)?;
        if form.degree != 1 {
            return Err(Error::Degree(format!("Hodge decomposition of a {}-form", form.degree)));
        }
        let alpha = &form.values;
        let weighted: Vec<f64> = alpha.iter().zip(&self.star1).map(|(a, w)| a * w).collect();
        let rhs = self.d0.transpose().mul_vec(&weighted);
        let sol = solve_deflated(&self.laplacian0(), &rhs, SOLVER_TOLERANCE, self.max_iterations())?;
        let exact = self.d0.mul_vec(&sol.x);
        let mut residual = sol.relative_residual;

        let coexact = match &self.d1 {
            None => vec![0.0; alpha.len()],
            Some(d1) => {
                let inv: Vec<f64> = self.star1.iter().map(|w| 1.0 / w).collect();
                let lap2 = d1.mul_diag_mul(&inv, &d1.transpose());
                let rhs2 = d1.mul_vec(alpha);
                let sol2 = solve_deflated(&lap2, &rhs2, SOLVER_TOLERANCE, self.max_iterations())?;
                residual = residual.max(sol2.relative_residual);
                d1.transpose().mul_vec(&sol2.x).iter().zip(&inv).map(|(v, i)| v * i).collect()
            }
        };
        let harmonic = (0..alpha.len()).map(|e| alpha[e] - exact[e] - coexact[e]).collect();
        Ok(HodgeSplit {
            potential: self.wrap(0, sol.x),
            exact: self.wrap(1, exact),
            coexact: self.wrap(1, coexact),
            harmonic: self.wrap(1, harmonic),
            residual,
        })
    }

    fn check_cycle(&self, index: usize, cycle: &Cycle) -> Result<()> {
        if cycle.edges.is_empty() {
            return Err(Error::Cycle(format!("cycle {index} is empty")));
        }
        let ends = |&(e, s): &(usize, i8)| -> Result<(usize, usize)> {
            let &(a, b) = self
                .edge_vertices
                .get(e)
                .ok_or_else(|| Error::Cycle(format!("cycle {index} uses unknown edge {e}")))?;
            Ok(if s >= 0 { (a, b) } else { (b, a) })
        };
        let first = ends(&cycle.edges[0])?;
        let mut head = first.1;
        for step in &cycle.edges[1..] {
            let (t, h) = ends(step)?;
            if t != head {
                return Err(Error::Cycle(format!("cycle {index} is not connected at vertex {head}")));
            }
            head = h;
        }
        if head != first.0 {
            return Err(Error::Cycle(format!("cycle {index} is not closed")));
        }
        Ok(())
    }

    /// Integrals of a 1-form over cycles.
    pub fn periods_over(&self, form: &DiscreteForm, cycles: &[Cycle]) -> Result<Vec<f64>> {
        self.check(form)?;
        if form.degree != 1 {
            return Err(Error::Degree("periods of a non-1-form".into()));
        }
        cycles
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.check_cycle(i, c)?;
                Ok(c.edges.iter().map(|&(e, s)| s as f64 * form.values[e]).sum())
            })
            .collect()
    }

    /// Periods over the mesh's `H_1` basis.
    pub fn periods(&self, form: &DiscreteForm) -> Result<Vec<f64>> {
        self.periods_over(form, &self.cycles)
    }

    /// Harmonic forms `h_c` with periods `2 pi delta_{cc'}` over the `H_1` basis.
    pub fn harmonic_basis(&self) -> Result<Vec<DiscreteForm>> {
        let ne = self.star1.len();
        let b1 = self.cycles.len();
        // closed cocycles crossing the seam once: last column of s-edges, last row of t-edges
        let mut projected = Vec::with_capacity(b1);
        for c in 0..b1 {
            let mut values = vec![0.0; ne];
            let crossing = *self.cycles[c].edges.last().unwrap();
            let (tail, _) = self.edge_vertices[crossing.0];
            for (e, &(a, _)) in self.edge_vertices.iter().enumerate() {
                if self.seam_match(c, e, crossing.0, a, tail) {
                    values[e] = 1.0;
                }
            }
            projected.push(self.hodge_decompose(&self.wrap(1, values))?.harmonic);
        }
        let mut period = nalgebra::DMatrix::zeros(b1, b1);
        for (c, h) in projected.iter().enumerate() {
            for (r, p) in self.periods(h)?.into_iter().enumerate() {
                period[(r, c)] = p;
            }
        }
        let inv = period.try_inverse().ok_or_else(|| Error::Numerical {
            message: "singular harmonic period matrix".into(),
            residual: f64::NAN,
        })?;
        Ok((0..b1)
            .map(|c| {
                let values = (0..ne)
                    .map(|e| (0..b1).map(|k| projected[k].values[e] * inv[(k, c)]).sum::<f64>() * std::f64::consts::TAU)
                    .collect();
                self.wrap(1, values)
            })
            .collect())
    }

    /// Whether edge `e` is parallel to and in the same seam column/row as `crossing`.
    fn seam_match(&self, cycle: usize, e: usize, crossing: usize, tail: usize, crossing_tail: usize) -> bool {
        if self.d1.is_none() {
            return e == crossing;
        }
        let nv = self.d0.ncols();
        let axis_e = e / nv;
        if axis_e != cycle {
            return false;
        }
        // s-edges share the column of the crossing edge, t-edges its row
        let n1 = self.grid_n1();
        if cycle == 0 {
            tail % n1 == crossing_tail % n1
        } else {
            tail / n1 == crossing_tail / n1
        }
    }

    fn grid_n1(&self) -> usize {
        // the s-cycle of a torus grid has one edge per column
        self.cycles[0].edges.len()
    }

    /// Numerical dimension of the harmonic space, from the Gram rank of projected random forms.
    pub fn harmonic_dimension(&self, seed: u64) -> Result<usize> {
        let ne = self.star1.len();
        let samples = self.cycles.len() + 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let values = (0..ne).map(|_| rng.gen_range(-1.0..1.0)).collect();
            hs.push(self.hodge_decompose(&self.wrap(1, values))?.harmonic);
        }
        let gram = nalgebra::DMatrix::from_fn(samples, samples, |a, b| {
            hs[a].values.iter().zip(&hs[b].values).zip(&self.star1).map(|((x, y), w)| x * y * w).sum::<f64>()
        });
        let eig = gram.symmetric_eigenvalues();
        let top = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(eig.iter().filter(|v| v.abs() > 1e-8 * top).count())
    }

    /// Integrate an exact 1-form along a spanning tree from vertex 0.
    pub fn integrate_exact(&self, form: &DiscreteForm) -> Result<DiscreteForm> {
        self.check(form)?;
        if form.degree != 1 {
            return Err(Error::Degree("integration of a non-1-form".into()));
        }
        let nv = self.d0.ncols();
        let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nv];
        for (e, &(a, b)) in self.edge_vertices.iter().enumerate() {
            adj[a].push((b, e, 1.0));
            adj[b].push((a, e, -1.0));
        }
        let mut value = vec![f64::NAN; nv];
        value[0] = 0.0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(w, e, s) in &adj[v] {
                if value[w].is_nan() {
                    value[w] = value[v] + s * form.values[e];
                    queue.push_back(w);
                }
            }
        }
        Ok(self.wrap(0, value))
    }

    /// Mean of a 0-form weighted by the vertex dual volumes.
    pub fn weighted_mean(&self, form: &DiscreteForm) -> f64 {
        let total: f64 = self.star0.iter().sum();
        dot(&form.values, &self.star0) / total
    }
}

/// `d` on a single form; convenience wrapper assembling the operators.
pub fn d(mesh: &LagrangianMesh, form: &DiscreteForm) -> Result<DiscreteForm> {
    Dec::new(mesh)?.d(form)
}

pub fn codifferential(mesh: &LagrangianMesh, form: &DiscreteForm) -> Result<DiscreteForm> {
    Dec::new(mesh)?.codifferential(form)
}

pub fn hodge_decompose(mesh: &LagrangianMesh, form: &DiscreteForm) -> Result<HodgeSplit> {
    Dec::new(mesh)?.hodge_decompose(form)
}

pub fn periods(mesh: &LagrangianMesh, form: &DiscreteForm, cycles: &[Cycle]) -> Result<Vec<f64>> {
    Dec::new(mesh)?.periods_over(form, cycles)
}
