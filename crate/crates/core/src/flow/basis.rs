//! Finite function families used as descent search spaces and random flows.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Hamiltonian, HamiltonianTerm};
use crate::ambient::{AmbientModel, PotentialTerm};
use crate::error::{Error, Result};

/// `X^a Y^b Z^c` with `c <= 1` and `1 <= a + b + c <= degree`.
pub fn sphere_monomials(degree: u32) -> Vec<Hamiltonian> {
    let mut out = Vec::new();
    for total in 1..=degree {
        for c in 0..=1.min(total) {
            for a in 0..=(total - c) {
                let b = total - c - a;
                out.push(Hamiltonian(vec![HamiltonianTerm::Embedding { embedding: [a, b, c], coefficient: 1.0 }]));
            }
        }
    }
    out
}

/// Chart monomials in `real_dim` variables of degree `1..=degree`.
pub fn polynomials(real_dim: usize, degree: u32) -> Vec<Hamiltonian> {
    fn powers(dim: usize, total: u32) -> Vec<Vec<u32>> {
        if dim == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|p| {
                powers(dim - 1, total - p).into_iter().map(move |mut rest| {
                    rest.insert(0, p);
                    rest
                })
            })
            .collect()
    }
    (1..=degree)
        .flat_map(|d| powers(real_dim, d))
        .map(|p| Hamiltonian(vec![HamiltonianTerm::Chart(PotentialTerm::Monomial { coefficient: 1.0, powers: p })]))
        .collect()
}

/// Lattice-periodic wavevector `2 pi L^{-T} k`.
fn wavevector(model: &AmbientModel, k: &[i32]) -> Result<Vec<f64>> {
    let lattice =
        model.lattice().ok_or_else(|| Error::UnsupportedModel("Fourier functions need a torus model".into()))?;
    let inv_t = lattice.clone().try_inverse().ok_or_else(|| Error::ModelConfig("singular lattice".into()))?.transpose();
    let kv = nalgebra::DVector::from_iterator(k.len(), k.iter().map(|&x| x as f64));
    Ok((inv_t * kv * TAU).iter().copied().collect())
}

/// Integer vectors with entries in `[-modes, modes]`, one of each `+-` pair, zero excluded.
fn half_lattice(dim: usize, modes: i32) -> Vec<Vec<i32>> {
    let side = (2 * modes + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let c = (idx % side) as i32 - modes;
                    idx /= side;
                    c
                })
                .collect::<Vec<i32>>()
        })
        .filter(|k| k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
        .collect()
}

/// `cos` and `sin` modes with `|k_i| <= modes` on a torus model.
pub fn torus_fourier(model: &AmbientModel, modes: i32) -> Result<Vec<Hamiltonian>> {
    let mut out = Vec::new();
    for k in half_lattice(model.real_dim(), modes) {
        let w = wavevector(model, &k)?;
        for phase in [0.0, -0.5 * PI] {
            out.push(Hamiltonian(vec![HamiltonianTerm::Chart(PotentialTerm::Fourier {
                amplitude: 1.0,
                wavevector: w.clone(),
                phase,
            })]));
        }
    }
    Ok(out)
}

/// Seeded random trigonometric function with `terms` modes of size at most `modes`.
pub fn random_fourier(
    model: &AmbientModel,
    modes: i32,
    terms: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Hamiltonian> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = half_lattice(model.real_dim(), modes);
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let k = &candidates[rng.gen_range(0..candidates.len())];
        out.push(HamiltonianTerm::Chart(PotentialTerm::Fourier {
            amplitude: amplitude * rng.gen_range(-1.0..1.0),
            wavevector: wavevector(model, k)?,
            phase: rng.gen_range(0.0..TAU),
        }));
    }
    Ok(Hamiltonian(out))
}

/// Default search space for a model: embedding monomials, Fourier modes or polynomials.
pub fn default_basis(model: &AmbientModel, degree: u32) -> Result<Vec<Hamiltonian>> {
    if model.is_sphere() {
        Ok(sphere_monomials(degree))
    } else if model.lattice().is_some() {
        torus_fourier(model, degree as i32)
    } else {
        Ok(polynomials(model.real_dim(), degree))
    }
}
