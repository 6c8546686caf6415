//! JSON mesh files.
//!
//! ```json
//! {
//!   "mesh_id": "9f3c...",
//!   "model": {"kind": "round-sphere", "params": {"radius": 1.0}},
//!   "topology": {"type": "loop", "n": 64},
//!   "vertices": [[x1, y1], ...],
//!   "shifts": [[0.0, 0.0]],
//!   "chart": "standard",
//!   "lagrangian_tolerance": 1e-6
//! }
//! ```
//!
//! Vertices are stored row-major (`i + n1 * j`) in chart coordinates; `shifts` are the
//! deck translations closing each grid axis.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Chart, LagrangianMesh, Topology};
use crate::ambient::AmbientModel;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub mesh_id: String,
    pub model: AmbientModel,
    pub topology: Topology,
    pub vertices: Vec<Vec<f64>>,
    pub shifts: Vec<Vec<f64>>,
    #[serde(default)]
    pub chart: Chart,
    pub lagrangian_tolerance: f64,
}

impl From<&LagrangianMesh> for MeshFile {
    fn from(mesh: &LagrangianMesh) -> Self {
        let rows = |pts: &[DVector<f64>]| pts.iter().map(|p| p.iter().copied().collect()).collect();
        MeshFile {
            mesh_id: mesh.id().to_string(),
            model: mesh.model().clone(),
            topology: mesh.topology(),
            vertices: rows(mesh.vertices()),
            shifts: rows(mesh.shifts()),
            chart: mesh.chart(),
            // reloaded meshes are checked with discrete tangents, which carry an O(h^2) residual
            lagrangian_tolerance: mesh
                .lagrangian_residual_discrete()
                .map(|(r, _)| mesh.lagrangian_tolerance().max(r * 1.01))
                .unwrap_or(mesh.lagrangian_tolerance()),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<LagrangianMesh> {
        let to_points = |rows: Vec<Vec<f64>>| rows.into_iter().map(DVector::from_vec).collect::<Vec<_>>();
        let mesh = LagrangianMesh::from_vertices(
            &self.model,
            self.topology,
            to_points(self.vertices),
            to_points(self.shifts),
            self.chart,
            self.lagrangian_tolerance,
        )?;
        if !self.mesh_id.is_empty() && mesh.id() != self.mesh_id {
            return Err(Error::Mesh(format!(
                "mesh id mismatch: file says {}, contents hash to {}",
                self.mesh_id,
                mesh.id()
            )));
        }
        Ok(mesh)
    }
}

impl LagrangianMesh {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MeshFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MeshFile>(text)?.into_mesh()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
