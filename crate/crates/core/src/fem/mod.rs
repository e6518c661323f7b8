//! Discrete function spaces, quadrature, assembly and linear solvers.

pub mod assembly;
pub mod field;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{apply_dirichlet, assemble_form, Coefficient, FormTag, VectorCoefficient};
pub use field::{FemField, Provenance};
pub use solver::{solve_dense, solve_saddle, solve_saddle_with, solve_spd, Solution, SolveDiagnostics, SolverOptions};
pub use space::{Element, FunctionSpace, SpaceKind};
pub use sparse::{CsrMatrix, SparseSystem, Symmetry};
