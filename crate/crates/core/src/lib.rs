//! Adaptive finite element methods with contractive iterative solvers.
//!
//! The crate covers newest-vertex bisection meshes, Lagrange elements of
//! arbitrary degree, a residual error estimator, Dörfler marking, contractive
//! algebraic solvers, Zarantonello linearization, the adaptive loops with
//! full cost accounting, and analysis tools for convergence and complexity.

pub mod analysis;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod iteration;
pub mod marking;
pub mod mesh;
pub mod problems;
pub mod solvers;

pub use error::{AfemError, Result};
