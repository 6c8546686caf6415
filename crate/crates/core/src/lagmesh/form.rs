use serde::{Deserialize, Serialize};

use super::LagrangianMesh;
use crate::error::{Error, Result};

/// Real cochain on a mesh: values on vertices (0), edges (1) or faces (2).
///
/// Edge values are integrals along the oriented edge and face values are
/// integrals over the oriented face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteForm {
    pub degree: usize,
    pub mesh_id: String,
    pub values: Vec<f64>,
}

impl DiscreteForm {
    pub fn zeros(mesh: &LagrangianMesh, degree: usize) -> Result<Self> {
        let len = mesh.cell_count(degree)?;
        Ok(DiscreteForm { degree, mesh_id: mesh.id().to_string(), values: vec![0.0; len] })
    }

    pub fn from_values(mesh: &LagrangianMesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        let len = mesh.cell_count(degree)?;
        if values.len() != len {
            return Err(Error::Degree(format!("degree-{degree} form needs {len} values, got {}", values.len())));
        }
        Ok(DiscreteForm { degree, mesh_id: mesh.id().to_string(), values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_on(&self, mesh: &LagrangianMesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::Degree(format!(
                "form belongs to mesh {} but was used on mesh {}",
                self.mesh_id,
                mesh.id()
            )));
        }
        if self.values.len() != mesh.cell_count(self.degree)? {
            return Err(Error::Degree("form length does not match the mesh".into()));
        }
        Ok(())
    }

    fn zip_with(&self, other: &DiscreteForm, f: impl Fn(f64, f64) -> f64) -> DiscreteForm {
        assert_eq!(self.degree, other.degree, "degree mismatch");
        assert_eq!(self.values.len(), other.values.len(), "length mismatch");
        DiscreteForm {
            degree: self.degree,
            mesh_id: self.mesh_id.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn plus(&self, other: &DiscreteForm) -> DiscreteForm {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &DiscreteForm) -> DiscreteForm {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> DiscreteForm {
        DiscreteForm {
            degree: self.degree,
            mesh_id: self.mesh_id.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
