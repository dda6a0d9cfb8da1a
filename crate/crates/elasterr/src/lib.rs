//! Mixed finite elements for planar linear elasticity on rectangular meshes,
//! with a pressure unknown that keeps the discretization stable up to the
//! incompressible limit, and four energy-norm a posteriori error estimators
//! (residual-based plus three flavors of element-local correction problems).
//!
//! The crate is organized as a pipeline:
//! mesh -> dof map -> assembled saddle-point system -> sparse direct solve ->
//! residual data -> estimator reports. Every stage is a pure function of
//! immutable inputs, so results are deterministic and reruns are bitwise
//! reproducible.

pub mod accum;
pub mod assembly;
pub mod basis;
pub mod dofmap;
pub mod estimators;
pub mod material;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solve;

pub use assembly::{
    assemble_blocks, assemble_mixed_system, project_load, LoadProjection, MixedBlocks, MixedSystem, SparseMatrix,
};
pub use basis::{basis_eval, q3_correction_basis, BasisFamily, BasisValues};
pub use dofmap::{DofMap, ElementPair};
pub use estimators::{
    compute_residual_data, elasticity_local_estimator, poisson_local_estimator, residual_estimator,
    stokes_local_estimator, ElasticityVariant, ElementIndicator, EstimatorError, EstimatorKind, EstimatorReport,
    ResidualData,
};
pub use material::MaterialParams;
pub use mesh::{build_rect_mesh, BoundaryCondition, Edge, EdgeTag, Element, Mesh, Rect};
pub use problems::{effectivity, energy_error, problem_catalog, ExactSolution, ProblemError, ProblemId, TestProblem};
pub use quadrature::{gauss_1d, gauss_rule, QuadratureRule};
pub use solve::{evaluate_solution, solve_saddle, MixedSolution, PointValues, SolveError};
