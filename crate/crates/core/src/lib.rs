pub mod ambient;
pub mod curvature;
pub mod dec;
pub mod error;
pub mod flow;
pub mod lagmesh;
pub mod linalg;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
