//! Sparse storage and the solvers used throughout: preconditioned conjugate
//! gradients, a profile LU factorization, restarted GMRES, Schur-complement
//! saddle-point solves with a zero-mean pressure constraint, and smallest
//! generalized eigenpairs.

mod cg;
mod eig;
mod gmres;
mod profile;
mod saddle;
mod sparse;

pub use cg::{cg_solve, pcg, JacobiPreconditioner};
pub use eig::{smallest_generalized_eig, subspace_inverse_iteration, symmetric_eigen, EigenPair};
pub use gmres::gmres;
pub use profile::{reverse_cuthill_mckee, ProfileLu};
pub use saddle::{
    saddle_solve, saddle_solve_with, CgInner, InnerSolver, PressureConstraint, SaddleOptions, SaddleSolution,
};
pub use sparse::CsrMatrix;

use serde::{Deserialize, Serialize};

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    pub fn exact() -> Self {
        SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
        }
    }
}

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Adapter turning a closure into a [`LinearOperator`].
pub struct FnOperator<F: Fn(&[f64], &mut [f64])> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

/// `x^T A y`.
pub fn bilinear(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    dot(x, &a.mul_vec(y))
}
