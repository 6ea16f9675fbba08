//! Fictitious-thickness computation for thin films embedded in a periodic strip.
//!
//! The vector field `s` solves `−aΔs + (1 − χ)s = −∇χ` in `D` with `s = 0` on `∂D`,
//! where `χ` is the indicator of the film `Ω`. The local thickness `h = 2/(√a div s)`
//! approaches the film thickness as `a → 0`.

pub mod assembly;
pub mod config;
pub mod domain;
pub mod error;
pub mod exact1d;
pub mod mesh;
pub mod scalar;
pub mod solver;
pub mod thickness;
pub mod verify;

pub use assembly::{assemble, assemble_homogeneous, AssemblyOptions, Component, CsrMatrix, MassKind, SparseSystem};
pub use domain::{BoundaryProfile, DomainSpec, GeometricConstants};
pub use error::{Error, Result};
pub use exact1d::{solve_exact, Exact1DSolution, Interval1DProblem};
pub use mesh::{build_mesh, Mesh, Region};
pub use scalar::Scalar;
pub use solver::{solve, Field, SolveReport, SolverOptions};
pub use thickness::{film_error, film_theorem_bound, thickness_field, FilmErrorReport, ThicknessField};
pub use verify::{check_interior_h1, check_max_modulus, CheckRecord, CutoffProfile, H1Report, PrincipleReport};

pub type DomainSpec64 = DomainSpec<f64>;
pub type DomainSpec32 = DomainSpec<f32>;
pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type Interval1DProblem64 = Interval1DProblem<f64>;
pub type Exact1DSolution64 = Exact1DSolution<f64>;
pub type ThicknessField64 = ThicknessField<f64>;
pub type CsrMatrix64 = CsrMatrix<f64>;
