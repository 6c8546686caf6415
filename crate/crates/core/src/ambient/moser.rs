//! Moser isotopy from the flat symplectic form to a potential-perturbed one.
//!
//! With `omega_t = omega_0 + t (omega - omega_0)` and a primitive
//! `beta = -(epsilon / 4) dh o I` of `omega - omega_0`, the time-one flow of
//! `iota_{X_t} omega_t = -beta` pulls `omega` back to `omega_0`. Flat
//! Lagrangians pushed through this flow are Lagrangian for `omega`.

use nalgebra::{Complex, DMatrix, DVector};

use super::{complex_hessian, complex_structure, symplectic_block, AmbientModel, CMatrix, ModelKind, Point};
use crate::error::{Error, Result};

/// Primitive `beta` of `omega - omega_0` as a covector.
pub fn primitive(model: &AmbientModel, p: &Point) -> Result<DVector<f64>> {
    model.check_point(p)?;
    match model.kind() {
        ModelKind::PotentialKahler { potential, epsilon, .. } => {
            let grad = DVector::from_vec(potential.gradient(p.as_slice()));
            let j = complex_structure(model.n());
            Ok(j.transpose() * grad * (-0.25 * epsilon))
        }
        _ => Ok(DVector::zeros(model.real_dim())),
    }
}

fn interpolated_symplectic(model: &AmbientModel, p: &Point, t: f64) -> Result<DMatrix<f64>> {
    let ModelKind::PotentialKahler { potential, epsilon, .. } = model.kind() else { unreachable!() };
    let dim = model.real_dim();
    let x = p.as_slice();
    let hess = DMatrix::from_fn(dim, dim, |i, j| potential.derivative(x, &[i, j]));
    let mut h: CMatrix = complex_hessian(&hess) * Complex::new(t * epsilon, 0.0);
    for j in 0..model.n() {
        h[(j, j)] += Complex::new(1.0, 0.0);
    }
    Ok(symplectic_block(&h))
}

fn velocity(model: &AmbientModel, p: &Point, t: f64) -> Result<DVector<f64>> {
    let w = interpolated_symplectic(model, p, t)?;
    let beta = primitive(model, p)?;
    w.lu().solve(&beta).ok_or_else(|| Error::ModelConfig("degenerate interpolated symplectic form".into()))
}

/// Time-one Moser map, integrated with `steps` classical RK4 steps.
///
/// Identity on models without a potential perturbation.
pub fn moser_map(model: &AmbientModel, p: &Point, steps: usize) -> Result<Point> {
    if !matches!(model.kind(), ModelKind::PotentialKahler { .. }) {
        model.check_point(p)?;
        return Ok(p.clone());
    }
    let dt = 1.0 / steps.max(1) as f64;
    let mut x = p.clone();
    for s in 0..steps.max(1) {
        let t = s as f64 * dt;
        let k1 = velocity(model, &x, t)?;
        let k2 = velocity(model, &(&x + &k1 * (0.5 * dt)), t + 0.5 * dt)?;
        let k3 = velocity(model, &(&x + &k2 * (0.5 * dt)), t + 0.5 * dt)?;
        let k4 = velocity(model, &(&x + &k3 * dt), t + dt)?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{Potential, PotentialTerm};

    fn model() -> AmbientModel {
        AmbientModel::new(ModelKind::PotentialKahler {
            base: Box::new(ModelKind::FlatComplex { n: 2 }),
            potential: Potential(vec![
                PotentialTerm::Fourier { amplitude: 1.0, wavevector: vec![1.0, 0.0, 0.0, 1.0], phase: 0.2 },
                PotentialTerm::Fourier { amplitude: 0.5, wavevector: vec![0.0, -1.0, 1.0, 0.0], phase: 0.0 },
            ]),
            epsilon: 0.1,
        })
        .unwrap()
    }

    #[test]
    fn primitive_differentiates_to_the_perturbation() {
        let m = model();
        let p = DVector::from_vec(vec![0.3, -0.2, 0.9, 0.4]);
        let h = 1e-5;
        let dim = 4;
        let mut db = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut a = p.clone();
            let mut b = p.clone();
            a[i] += h;
            b[i] -= h;
            let d = (primitive(&m, &a).unwrap() - primitive(&m, &b).unwrap()) / (2.0 * h);
            for j in 0..dim {
                db[(i, j)] += d[j];
                db[(j, i)] -= d[j];
            }
        }
        let flat = AmbientModel::flat(2).unwrap().symplectic_at(&p).unwrap();
        let pert = m.symplectic_at(&p).unwrap() - flat;
        assert!((db - pert).amax() < 1e-8);
    }

    #[test]
    fn pulls_back_the_perturbed_form_to_the_flat_one() {
        let m = model();
        let p = DVector::from_vec(vec![0.1, 0.5, -0.3, 0.2]);
        let h = 1e-4;
        let jac = DMatrix::from_fn(4, 4, |r, c| {
            let mut a = p.clone();
            let mut b = p.clone();
            a[c] += h;
            b[c] -= h;
            (moser_map(&m, &a, 64).unwrap()[r] - moser_map(&m, &b, 64).unwrap()[r]) / (2.0 * h)
        });
        let w = m.symplectic_at(&moser_map(&m, &p, 64).unwrap()).unwrap();
        let pulled = jac.transpose() * w * &jac;
        let flat = AmbientModel::flat(2).unwrap().symplectic_at(&p).unwrap();
        assert!((pulled - flat).amax() < 1e-7);
    }
}
