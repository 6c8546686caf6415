//! Chart-based model Kahler manifolds.
//!
//! Coordinates are real and ordered `(x1, y1, x2, y2, ...)` with `z_j = x_j + i y_j`.
//! Every model is described by a Hermitian matrix `H(p)` in these coordinates;
//! the real metric and symplectic form are
//!
//! ```text
//! G(X, Y) = Re(X^* H Y),   omega(X, Y) = Im(X^* H Y) = G(I X, Y)
//! ```
//!
//! where `I` is the standard complex structure `dx_j -> dy_j`. With this
//! normalization the flat model has `G = Id` and `omega = sum dx_j ^ dy_j`.

pub mod moser;
pub mod potential;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use potential::{Potential, PotentialTerm};

pub type Point = DVector<f64>;
pub type CMatrix = DMatrix<Complex<f64>>;

/// Stereographic coordinates beyond this modulus are outside the chart.
pub const SPHERE_CHART_LIMIT: f64 = 1.0e6;

/// Smallest eigenvalue of `H` accepted for perturbed models.
pub const POSITIVITY_FLOOR: f64 = 0.05;

/// Serializable model description: `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ModelKind {
    FlatComplex {
        n: usize,
    },
    /// Round sphere of radius `radius` in the stereographic chart whose origin is a pole.
    RoundSphere {
        radius: f64,
    },
    /// Conformal deformation `exp(2 a cos^2 theta)` of the round metric.
    FootballSphere {
        radius: f64,
        amplitude: f64,
    },
    /// `C^n` modulo the lattice spanned by the `2n` given vectors.
    FlatTorus {
        n: usize,
        lattice: Vec<Vec<f64>>,
    },
    /// `H = ddbar(|z|^2 + epsilon * h)` over a flat base.
    PotentialKahler {
        base: Box<ModelKind>,
        potential: Potential,
        epsilon: f64,
    },
}

/// A validated, immutable ambient model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelKind", into = "ModelKind")]
pub struct AmbientModel {
    kind: ModelKind,
    n: usize,
    /// Lattice vectors as columns (tori only).
    lattice: Option<DMatrix<f64>>,
}

impl From<AmbientModel> for ModelKind {
    fn from(m: AmbientModel) -> Self {
        m.kind
    }
}

impl TryFrom<ModelKind> for AmbientModel {
    type Error = Error;

    fn try_from(kind: ModelKind) -> Result<Self> {
        AmbientModel::new(kind)
    }
}

/// Christoffel symbols `gamma[k][(i, j)] = Gamma^k_{ij}` in chart coordinates.
#[derive(Clone, Debug)]
pub struct Christoffels {
    pub gamma: Vec<DMatrix<f64>>,
}

impl Christoffels {
    /// `Gamma^k(a, b)` as a vector indexed by `k`.
    pub fn contract(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.gamma.len(), self.gamma.iter().map(|g| a.dot(&(g * b))))
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().flat_map(|g| g.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn lattice_matrix(n: usize, lattice: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let dim = 2 * n;
    if lattice.len() != dim || lattice.iter().any(|v| v.len() != dim) {
        return Err(Error::ModelConfig(format!(
            "flat torus of complex dimension {n} needs {dim} lattice vectors of length {dim}"
        )));
    }
    let m = DMatrix::from_fn(dim, dim, |r, c| lattice[c][r]);
    if m.determinant().abs() < 1e-12 {
        return Err(Error::ModelConfig("lattice vectors are linearly dependent".into()));
    }
    Ok(m)
}

fn check_flat_n(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::ModelConfig(format!("complex dimension must be 1 or 2, got {n}")))
    }
}

/// Split a Hermitian matrix into the real metric and symplectic matrices.
pub fn real_blocks(h: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let a = h[(j, k)].re;
            let b = h[(j, k)].im;
            g[(2 * j, 2 * k)] = a;
            g[(2 * j + 1, 2 * k + 1)] = a;
            g[(2 * j, 2 * k + 1)] = -b;
            g[(2 * j + 1, 2 * k)] = b;
            w[(2 * j, 2 * k)] = b;
            w[(2 * j + 1, 2 * k + 1)] = b;
            w[(2 * j, 2 * k + 1)] = a;
            w[(2 * j + 1, 2 * k)] = -a;
        }
    }
    (g, w)
}

/// The symplectic (imaginary) block only.
pub fn symplectic_block(h: &CMatrix) -> DMatrix<f64> {
    real_blocks(h).1
}

/// Standard complex structure on `R^{2n}`: `I e_x = e_y`, `I e_y = -e_x`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Complex coordinates of a real vector.
pub fn to_complex(v: &DVector<f64>) -> DVector<Complex<f64>> {
    let n = v.len() / 2;
    DVector::from_fn(n, |j, _| Complex::new(v[2 * j], v[2 * j + 1]))
}

/// Hermitian matrix of `ddbar f` from a real Hessian, in the `Im(X^* H Y)`
/// convention (the transpose of the usual `f_{j kbar}`), so that
/// `ddbar |z|^2` is the identity and the resulting 2-form is closed.
pub fn complex_hessian(real: &DMatrix<f64>) -> CMatrix {
    let n = real.nrows() / 2;
    CMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        Complex::new(0.25 * (real[(xj, xk)] + real[(yj, yk)]), 0.25 * (real[(yj, xk)] - real[(xj, yk)]))
    })
}

impl AmbientModel {
    pub fn new(kind: ModelKind) -> Result<Self> {
        let (n, lattice) = match &kind {
            ModelKind::FlatComplex { n } => {
                check_flat_n(*n)?;
                (*n, None)
            }
            ModelKind::RoundSphere { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::ModelConfig(format!("sphere radius must be positive, got {radius}")));
                }
                (1, None)
            }
            ModelKind::FootballSphere { radius, amplitude } => {
                if !(radius.is_finite() && *radius > 0.0) || !amplitude.is_finite() {
                    return Err(Error::ModelConfig("football sphere needs radius > 0 and finite amplitude".into()));
                }
                (1, None)
            }
            ModelKind::FlatTorus { n, lattice } => {
                check_flat_n(*n)?;
                (*n, Some(lattice_matrix(*n, lattice)?))
            }
            ModelKind::PotentialKahler { base, potential, epsilon } => {
                let (n, lattice) = match base.as_ref() {
                    ModelKind::FlatComplex { n } => {
                        check_flat_n(*n)?;
                        (*n, None)
                    }
                    ModelKind::FlatTorus { n, lattice } => {
                        check_flat_n(*n)?;
                        (*n, Some(lattice_matrix(*n, lattice)?))
                    }
                    _ => {
                        return Err(Error::ModelConfig(
                            "potential perturbations need a flat-complex or flat-torus base".into(),
                        ))
                    }
                };
                if !epsilon.is_finite() {
                    return Err(Error::ModelConfig("epsilon must be finite".into()));
                }
                for term in &potential.0 {
                    if term.dim() != 2 * n {
                        return Err(Error::ModelConfig(format!(
                            "potential term has {} coordinates, expected {}",
                            term.dim(),
                            2 * n
                        )));
                    }
                    if let Some(l) = &lattice {
                        check_periodic(term, l)?;
                    }
                }
                (n, lattice)
            }
        };
        let model = AmbientModel { kind, n, lattice };
        if let ModelKind::PotentialKahler { epsilon, .. } = &model.kind {
            let floor = model.sampled_min_eigenvalue()?;
            if floor < POSITIVITY_FLOOR {
                return Err(Error::ModelConfig(format!(
                    "epsilon = {epsilon} makes the metric degenerate (sampled min eigenvalue {floor:.3e} < {POSITIVITY_FLOOR})"
                )));
            }
        }
        Ok(model)
    }

    pub fn flat(n: usize) -> Result<Self> {
        Self::new(ModelKind::FlatComplex { n })
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        Self::new(ModelKind::RoundSphere { radius })
    }

    /// Flat torus `C^n / (2 pi Z)^{2n}`.
    pub fn square_torus(n: usize) -> Result<Self> {
        let dim = 2 * n;
        let lattice =
            (0..dim).map(|c| (0..dim).map(|r| if r == c { std::f64::consts::TAU } else { 0.0 }).collect()).collect();
        Self::new(ModelKind::FlatTorus { n, lattice })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    /// Lattice vectors as matrix columns, for torus kinds.
    pub fn lattice(&self) -> Option<&DMatrix<f64>> {
        self.lattice.as_ref()
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, ModelKind::RoundSphere { .. } | ModelKind::FootballSphere { .. })
    }

    /// True when the Levi-Civita connection vanishes identically in the chart.
    pub fn is_flat(&self) -> bool {
        match &self.kind {
            ModelKind::FlatComplex { .. } | ModelKind::FlatTorus { .. } => true,
            ModelKind::PotentialKahler { potential, epsilon, .. } => *epsilon == 0.0 || potential.0.is_empty(),
            _ => false,
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.len() != self.real_dim() {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.real_dim(), p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if self.is_sphere() && p.norm() > SPHERE_CHART_LIMIT {
            return Err(Error::Domain(format!("|z| = {:.3e} beyond the stereographic chart", p.norm())));
        }
        Ok(())
    }

    /// Conformal factor `lambda` and its gradient for the sphere kinds.
    fn conformal(&self, p: &Point) -> (f64, [f64; 2]) {
        let (radius, amp) = match self.kind {
            ModelKind::RoundSphere { radius } => (radius, 0.0),
            ModelKind::FootballSphere { radius, amplitude } => (radius, amplitude),
            _ => unreachable!("conformal factor requested for a non-sphere model"),
        };
        let u = p[0] * p[0] + p[1] * p[1];
        let c = (1.0 - u) / (1.0 + u);
        let lambda = 4.0 * radius * radius / (1.0 + u).powi(2) * (2.0 * amp * c * c).exp();
        let dc_du = -2.0 / (1.0 + u).powi(2);
        let dlog_du = -2.0 / (1.0 + u) + 4.0 * amp * c * dc_du;
        (lambda, [lambda * dlog_du * 2.0 * p[0], lambda * dlog_du * 2.0 * p[1]])
    }

    /// Hermitian coefficient matrix `H(p)`.
    pub fn hermitian(&self, p: &Point) -> Result<CMatrix> {
        self.check_point(p)?;
        Ok(match &self.kind {
            ModelKind::FlatComplex { n } | ModelKind::FlatTorus { n, .. } => CMatrix::identity(*n, *n),
            ModelKind::RoundSphere { .. } | ModelKind::FootballSphere { .. } => {
                let (lambda, _) = self.conformal(p);
                CMatrix::from_element(1, 1, Complex::new(lambda, 0.0))
            }
            ModelKind::PotentialKahler { potential, epsilon, .. } => {
                let dim = self.real_dim();
                let x = p.as_slice();
                let hess = DMatrix::from_fn(dim, dim, |i, j| potential.derivative(x, &[i, j]));
                let mut h = complex_hessian(&hess) * Complex::new(*epsilon, 0.0);
                for j in 0..self.n {
                    h[(j, j)] += Complex::new(1.0, 0.0);
                }
                h
            }
        })
    }

    /// `d H / d x_k` for every real coordinate `k`.
    pub fn hermitian_derivatives(&self, p: &Point) -> Result<Vec<CMatrix>> {
        self.check_point(p)?;
        let dim = self.real_dim();
        Ok(match &self.kind {
            ModelKind::FlatComplex { n } | ModelKind::FlatTorus { n, .. } => vec![CMatrix::zeros(*n, *n); dim],
            ModelKind::RoundSphere { .. } | ModelKind::FootballSphere { .. } => {
                let (_, grad) = self.conformal(p);
                grad.iter().map(|g| CMatrix::from_element(1, 1, Complex::new(*g, 0.0))).collect()
            }
            ModelKind::PotentialKahler { potential, epsilon, .. } => {
                let x = p.as_slice();
                (0..dim)
                    .map(|k| {
                        let third = DMatrix::from_fn(dim, dim, |i, j| potential.derivative(x, &[i, j, k]));
                        complex_hessian(&third) * Complex::new(*epsilon, 0.0)
                    })
                    .collect()
            }
        })
    }

    /// Symmetric positive-definite metric coefficients `G(p)`.
    pub fn metric_at(&self, p: &Point) -> Result<DMatrix<f64>> {
        Ok(real_blocks(&self.hermitian(p)?).0)
    }

    /// Antisymmetric coefficients `omega(e_i, e_j)`.
    pub fn symplectic_at(&self, p: &Point) -> Result<DMatrix<f64>> {
        Ok(real_blocks(&self.hermitian(p)?).1)
    }

    pub fn complex_structure(&self) -> DMatrix<f64> {
        complex_structure(self.n)
    }

    pub fn metric_derivatives(&self, p: &Point) -> Result<Vec<DMatrix<f64>>> {
        Ok(self.hermitian_derivatives(p)?.iter().map(|dh| real_blocks(dh).0).collect())
    }

    /// Levi-Civita Christoffel symbols from analytic metric derivatives.
    pub fn christoffels_at(&self, p: &Point) -> Result<Christoffels> {
        let dim = self.real_dim();
        if self.is_flat() {
            return Ok(Christoffels { gamma: vec![DMatrix::zeros(dim, dim); dim] });
        }
        let g = self.metric_at(p)?;
        let ginv = g.try_inverse().ok_or_else(|| Error::ModelConfig("singular metric".into()))?;
        let dg = self.metric_derivatives(p)?;
        // lowered[l](i, j) = 1/2 (d_i G_jl + d_j G_il - d_l G_ij)
        let lowered: Vec<DMatrix<f64>> = (0..dim)
            .map(|l| DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])))
            .collect();
        let gamma = (0..dim)
            .map(|k| {
                let mut m = DMatrix::zeros(dim, dim);
                for (l, low) in lowered.iter().enumerate() {
                    m += low * ginv[(k, l)];
                }
                m
            })
            .collect();
        Ok(Christoffels { gamma })
    }

    /// Gradient of `log det H`, analytic.
    pub fn log_det_gradient(&self, p: &Point) -> Result<DVector<f64>> {
        let h = self.hermitian(p)?;
        let hinv = h.try_inverse().ok_or_else(|| Error::ModelConfig("singular Hermitian metric".into()))?;
        let dh = self.hermitian_derivatives(p)?;
        Ok(DVector::from_iterator(dh.len(), dh.iter().map(|d| (&hinv * d).trace().re)))
    }

    /// Ricci form `rho = Im(X^* Ric Y)` with `Ric = -2 ddbar log det H`.
    ///
    /// The Hessian of `log det H` is a central difference of its analytic
    /// gradient with step `eps^(1/3)` times the coordinate scale.
    pub fn ricci_form_at(&self, p: &Point) -> Result<DMatrix<f64>> {
        let dim = self.real_dim();
        if self.is_flat() {
            self.check_point(p)?;
            return Ok(DMatrix::zeros(dim, dim));
        }
        let scale = p.amax().max(1.0);
        let step = f64::EPSILON.cbrt() * scale;
        let mut hess = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[j] += step;
            minus[j] -= step;
            let col = (self.log_det_gradient(&plus)? - self.log_det_gradient(&minus)?) / (2.0 * step);
            hess.set_column(j, &col);
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let ric = complex_hessian(&hess) * Complex::new(-2.0, 0.0);
        Ok(symplectic_block(&ric))
    }

    /// Least-squares ratio `rho / omega` at `p`; constant for Kahler-Einstein models.
    pub fn einstein_ratio_at(&self, p: &Point) -> Result<f64> {
        let rho = self.ricci_form_at(p)?;
        let w = self.symplectic_at(p)?;
        Ok(rho.dot(&w) / w.dot(&w))
    }

    /// Coefficient of the holomorphic volume form `dz_1 ^ ... ^ dz_n`.
    pub fn holomorphic_volume_at(&self, p: &Point) -> Result<Complex<f64>> {
        match self.kind {
            ModelKind::FlatComplex { .. } | ModelKind::FlatTorus { .. } => {
                self.check_point(p)?;
                Ok(Complex::new(1.0, 0.0))
            }
            _ => Err(Error::UnsupportedModel(
                "holomorphic volume form is only available on flat-complex and flat-torus models".into(),
            )),
        }
    }

    /// Vector field `X_f` with `omega(X_f, .) = df`, given `grad f` in chart coordinates.
    pub fn hamiltonian_vector(&self, p: &Point, grad_f: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.symplectic_at(p)?;
        // X^T W = df^T  <=>  W^T X = df  <=>  -W X = df
        let lu = w.lu();
        lu.solve(&(-grad_f)).ok_or_else(|| Error::ModelConfig("degenerate symplectic form".into()))
    }

    /// Sample points used for positivity and invariant checks.
    pub fn sample_points(&self, per_axis: usize) -> Vec<Point> {
        let dim = self.real_dim();
        let total = per_axis.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut unit = DVector::zeros(dim);
                for d in 0..dim {
                    unit[d] = ((idx % per_axis) as f64 + 0.37) / per_axis as f64;
                    idx /= per_axis;
                }
                match &self.lattice {
                    Some(l) => l * unit,
                    None if self.is_sphere() => unit.map(|u| 4.0 * u - 2.0),
                    None => unit.map(|u| 6.0 * u - 3.0),
                }
            })
            .collect()
    }

    fn sampled_min_eigenvalue(&self) -> Result<f64> {
        let per_axis = if self.n == 1 { 24 } else { 6 };
        let mut min = f64::INFINITY;
        for p in self.sample_points(per_axis) {
            let g = self.metric_at(&p)?;
            let eig = g.symmetric_eigenvalues();
            min = min.min(eig.min());
        }
        Ok(min)
    }
}

fn check_periodic(term: &PotentialTerm, lattice: &DMatrix<f64>) -> Result<()> {
    match term {
        PotentialTerm::Monomial { .. } => {
            Err(Error::ModelConfig("monomial potentials are not periodic; use Fourier terms on a torus base".into()))
        }
        PotentialTerm::Fourier { wavevector, .. } => {
            for c in 0..lattice.ncols() {
                let turns: f64 = wavevector.iter().zip(lattice.column(c).iter()).map(|(k, l)| k * l).sum::<f64>()
                    / std::f64::consts::TAU;
                if (turns - turns.round()).abs() > 1e-9 {
                    return Err(Error::ModelConfig(format!(
                        "Fourier wavevector {wavevector:?} is not periodic on lattice vector {c}"
                    )));
                }
            }
            Ok(())
        }
    }
}
