//! Lagrange finite elements: spaces, assembly, Dirichlet elimination and
//! exact Galerkin solves.

mod assembly;
mod function;
pub mod lagrange;
mod problem;
pub mod quadrature;
mod space;
mod sparse;
mod system;

pub use assembly::{
    apply_operator, assemble_a, assemble_b, assemble_rhs, energy_functional, linear_order,
    nonlinear_order,
};
pub(crate) use assembly::{checked_geometry, ReferenceTable};
pub use function::{
    energy_distance, energy_error_exact, energy_inner, energy_norm, exact_error_order, prolongate,
    DiscreteFunction,
};
pub use problem::{
    DirichletData, ExactSolution, MatrixField, Nonlinearity, PointFn, PointGradFn, ProblemDef,
    RealFn, ScalarField, VectorField, IDENTITY,
};
pub use space::{ElementGeometry, Space};
pub use sparse::{axpy, dot, sub, CsrMatrix};
pub use system::{dirichlet_lift, free_block, reduced_rhs, solve_galerkin_exact};
