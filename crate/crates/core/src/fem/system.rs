//! Dirichlet elimination and exact Galerkin solves.

use std::sync::Arc;

use crate::error::{AfemError, Result};
use crate::solvers::{refined_solve, DirectSolver};

use super::assembly::{apply_operator, assemble_a, assemble_b, assemble_rhs};
use super::function::DiscreteFunction;
use super::problem::ProblemDef;
use super::space::Space;
use super::sparse::CsrMatrix;

/// Full coefficient vector holding the nodal interpolant of `u_D` on the
/// Dirichlet DOFs and zero elsewhere.
pub fn dirichlet_lift(space: &Space, prob: &ProblemDef) -> Vec<f64> {
    let mut lift = vec![0.0; space.n_dofs()];
    if prob.dirichlet.is_some() {
        for &d in space.dirichlet_dofs() {
            lift[d] = prob.dirichlet_at(space.dof_coords()[d]);
        }
    }
    lift
}

/// Free-free block of a full matrix.
pub fn free_block(space: &Space, m: &CsrMatrix) -> CsrMatrix {
    let index: Vec<usize> = (0..space.n_dofs()).map(|i| space.free_index(i)).collect();
    m.select(space.free_dofs(), &index, space.n_free())
}

/// Free rows of `load - M lift`.
pub fn reduced_rhs(space: &Space, m: &CsrMatrix, load: &[f64], lift: &[f64]) -> Vec<f64> {
    let ml = m.mul_vec(lift);
    space.free_dofs().iter().map(|&i| load[i] - ml[i]).collect()
}

/// Exact discrete solution.
///
/// Linear problems are solved by sparse factorization of the reduced
/// system. Quasi-linear problems use the Zarantonello fixed point with
/// damping `1 / L` until the energy increment falls below `1e-11`.
pub fn solve_galerkin_exact(space: &Arc<Space>, prob: &ProblemDef) -> Result<DiscreteFunction> {
    let lift = dirichlet_lift(space, prob);
    let load = assemble_rhs(space, prob);
    if prob.is_linear() {
        let b = assemble_b(space, prob)?;
        let bff = free_block(space, &b);
        let rhs = reduced_rhs(space, &b, &load, &lift);
        let solver = DirectSolver::new(&bff)?;
        let uf = refined_solve(&bff, &solver, &rhs)?;
        let mut coeffs = lift;
        space.scatter_free(&uf, &mut coeffs);
        return DiscreteFunction::new(space.clone(), coeffs);
    }
    let delta = 1.0 / prob.nonlinearity.as_ref().expect("nonlinear").lipschitz;
    let a = free_block(space, &assemble_a(space, prob)?);
    let solver = DirectSolver::cholesky(&a)?;
    let mut u = lift;
    for _ in 0..10_000 {
        let n = apply_operator(space, prob, &u)?;
        let r: Vec<f64> = space.free_dofs().iter().map(|&i| delta * (load[i] - n[i])).collect();
        let d = solver.solve(&r);
        let inc = a.bilinear(&d, &d).max(0.0).sqrt();
        for (k, &i) in space.free_dofs().iter().enumerate() {
            u[i] += d[k];
        }
        if inc <= 1e-11 {
            return DiscreteFunction::new(space.clone(), u);
        }
    }
    Err(AfemError::Solver("Zarantonello fixed-point iteration did not converge".into()))
}
