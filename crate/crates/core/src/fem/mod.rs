//! Meshing, quadrature and sparse linear algebra shared by both problems.

pub mod element;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::ParamPoint;

pub use element::{barycentric, TetGeometry};
pub use mesh::{build_cube_mesh, BoundaryFace, Mesh};
pub use quadrature::{tet_quadrature, triangle_quadrature, TetRule, TriangleRule};
pub use solver::{solve_dense, solve_linear, SparseLu};
pub use sparse::{ComplexSparseMatrix, CsrMatrix, RealSparseMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofKind {
    /// Continuous piecewise-linear nodal values.
    NodalH1,
    /// Lowest-order edge element circulations.
    EdgeHcurl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    pub kind: DofKind,
    pub values: Vec<Complex64>,
}

impl DofVector {
    pub fn new(kind: DofKind, values: Vec<Complex64>) -> Self {
        Self { kind, values }
    }

    pub fn zeros(kind: DofKind, len: usize) -> Self {
        Self::new(kind, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.kind, self.values.iter().map(|z| z.conj()).collect())
    }
}

/// Assembled full-order system `A u = b`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: ComplexSparseMatrix,
    pub rhs: DofVector,
}

impl LinearSystem {
    pub fn solve(&self) -> Result<DofVector> {
        let values = solve_linear(&self.matrix, &self.rhs.values)?;
        Ok(DofVector::new(self.rhs.kind, values))
    }
}

/// A parametric full-order model: one sparse system per parameter point.
pub trait FullOrderModel: Send + Sync {
    fn num_dofs(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn dof_kind(&self) -> DofKind;
    fn assemble(&self, y: &ParamPoint) -> Result<LinearSystem>;

    fn solve_hf(&self, y: &ParamPoint) -> Result<DofVector> {
        self.assemble(y)?.solve()
    }
}

pub(crate) fn check_param_dim(y: &ParamPoint, expected: usize) -> Result<()> {
    if y.dim() != expected {
        return Err(Error::InvalidArgument(format!(
            "parameter has dimension {}, expected {expected}",
            y.dim()
        )));
    }
    Ok(())
}

const ASSEMBLY_CHUNK: usize = 512;

/// Run `work` over consecutive index blocks of `0..count` on the rayon pool
/// and return the block results in index order. Block boundaries depend only
/// on `count`, so merged output is identical for any number of workers.
pub(crate) fn map_blocks<R, F>(count: usize, work: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>) -> R + Sync,
{
    use rayon::prelude::*;
    let starts: Vec<usize> = (0..count).step_by(ASSEMBLY_CHUNK).collect();
    starts
        .into_par_iter()
        .map(|s| work(s..(s + ASSEMBLY_CHUNK).min(count)))
        .collect()
}
