//! Discontinuous Galerkin pressure-correction solver for the Oldroyd model
//! of order one on the unit square, with a manufactured-solution harness.
//!
//! Velocity lives in the broken space of degree `r` (two components), the
//! pressure in the broken space of degree `r − 1`. Each time step solves a
//! momentum problem with an implicit memory term, a pressure-potential
//! Poisson problem in the zero-mean subspace, and then corrects pressure and
//! velocity.

pub mod basis;
pub mod config;
pub mod driver;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod memory;
pub mod mesh;
pub mod mms;
pub mod quadrature;
pub mod space;
pub mod stepper;
pub mod study;
pub mod verify;

pub use config::{Mode, Problem, RawConfig, RunConfig};
pub use driver::{execute, Outcome, Output};
pub use error::{Error, ErrorCategory, Result};
pub use forms::{FormContext, FormParams};
pub use linalg::{SolveReport, SparseMatrix};
pub use memory::{KernelParams, MemoryAccumulator};
pub use mesh::{Point, TriMesh};
pub use mms::{ErrorNorms, ExactSolution};
pub use space::{DgSpace, FieldVec};
pub use stepper::{MomentumSolver, Scheme, SchemeParams, SchemeState, StepDiagnostics};
pub use study::{convergence_study, ConvergenceRow, StudyMode, StudyReport, StudySpec};
pub use verify::{verify_forms, VerifyReport};
