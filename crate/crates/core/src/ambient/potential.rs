//! Real potentials used to perturb flat Kahler structures.

use serde::{Deserialize, Serialize};

/// One term of a perturbation potential `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PotentialTerm {
    /// `amplitude * cos(k . x + phase)`
    Fourier {
        amplitude: f64,
        wavevector: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// `coefficient * prod x_i^powers[i]`
    Monomial { coefficient: f64, powers: Vec<u32> },
}

impl PotentialTerm {
    pub fn dim(&self) -> usize {
        match self {
            PotentialTerm::Fourier { wavevector, .. } => wavevector.len(),
            PotentialTerm::Monomial { powers, .. } => powers.len(),
        }
    }

    /// Partial derivative along the coordinate multi-index `idx` (any order).
    pub fn derivative(&self, x: &[f64], idx: &[usize]) -> f64 {
        match self {
            PotentialTerm::Fourier { amplitude, wavevector, phase } => {
                let arg: f64 = wavevector.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + phase;
                let factor: f64 = idx.iter().map(|&i| wavevector[i]).product();
                let shift = idx.len() as f64 * std::f64::consts::FRAC_PI_2;
                amplitude * factor * (arg + shift).cos()
            }
            PotentialTerm::Monomial { coefficient, powers } => {
                let mut value = *coefficient;
                for (i, (&p, &xi)) in powers.iter().zip(x).enumerate() {
                    let q = idx.iter().filter(|&&j| j == i).count() as u32;
                    if q > p {
                        return 0.0;
                    }
                    let falling: f64 = (0..q).map(|r| (p - r) as f64).product();
                    value *= falling * xi.powi((p - q) as i32);
                }
                value
            }
        }
    }
}

/// Sum of terms; derivatives are analytic.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Potential(pub Vec<PotentialTerm>);

impl Potential {
    pub fn derivative(&self, x: &[f64], idx: &[usize]) -> f64 {
        self.0.iter().map(|t| t.derivative(x, idx)).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.derivative(x, &[])
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.derivative(x, &[i])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(p: &Potential, x: &[f64], idx: &[usize], i: usize) -> f64 {
        let h = 1e-5;
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[i] += h;
        b[i] -= h;
        (p.derivative(&a, idx) - p.derivative(&b, idx)) / (2.0 * h)
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let p = Potential(vec![
            PotentialTerm::Fourier { amplitude: 0.7, wavevector: vec![1.0, -2.0, 0.5, 1.0], phase: 0.3 },
            PotentialTerm::Monomial { coefficient: -0.4, powers: vec![2, 1, 0, 3] },
        ]);
        let x = [0.3, -0.7, 1.1, 0.4];
        for i in 0..4 {
            assert!((p.derivative(&x, &[i]) - fd(&p, &x, &[], i)).abs() < 1e-8);
            for j in 0..4 {
                assert!((p.derivative(&x, &[i, j]) - fd(&p, &x, &[i], j)).abs() < 1e-7);
                for k in 0..4 {
                    let exact = p.derivative(&x, &[i, j, k]);
                    assert!((exact - fd(&p, &x, &[i, j], k)).abs() < 1e-6, "{i}{j}{k}");
                }
            }
        }
    }

    #[test]
    fn monomial_vanishes_past_its_degree() {
        let t = PotentialTerm::Monomial { coefficient: 2.0, powers: vec![1, 0] };
        assert_eq!(t.derivative(&[3.0, 1.0], &[0, 0]), 0.0);
        assert_eq!(t.derivative(&[3.0, 1.0], &[0]), 2.0);
    }
}
