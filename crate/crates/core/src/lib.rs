//! Adaptive P1 finite elements on triangles.
//!
//! The crate covers the full solve/estimate/mark/refine loop:
//!
//! * [`mesh`]: triangulations, edge topology, red-green refinement, MSH v2 I/O
//! * [`assembly`]: P1 shape functions, quadrature, CSR assembly and Krylov solvers
//! * [`solid`] / [`fluid`]: linear elasticity and GLS-stabilized steady Navier-Stokes
//! * [`estimator`]: the gradient-jump (Kelly) indicator for vector fields
//! * [`marking`] / [`isoforest`]: the five marking strategies
//! * [`driver`]: the adaptive loop and its per-cycle records

pub mod assembly;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod fluid;
pub mod isoforest;
pub mod marking;
pub mod mesh;
pub mod solid;
pub mod stats;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// Nodal solution of a 2D problem: a vector field per node plus an optional pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub vector: Vec<[f64; 2]>,
    pub pressure: Option<Vec<f64>>,
}

impl SolutionField {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            vector: vec![[0.0; 2]; n_nodes],
            pressure: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.vector.len()
    }

    /// Flattened `[u0x, u0y, u1x, ...]` view of the vector part.
    pub fn flat_vector(&self) -> Vec<f64> {
        self.vector.iter().flat_map(|v| v.iter().copied()).collect()
    }
}
