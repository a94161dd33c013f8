//! Bundle trust-region method for nonsmooth, nonconvex minimisation over
//! polyhedral sets, with oracles for parametric robustness of LFT plants and
//! a sampling certifier for their global maxima.
//!
//! The usual entry point is [`Problem`] + [`SolverConfig`] + [`outer_solve`]:
//!
//! ```
//! use std::sync::Arc;
//! use nstr::{outer_solve, FeasibleSet, MaxAffine, Model, Problem, SolverConfig, Status};
//!
//! let f = MaxAffine::weighted_l1(&[1.0, 2.0]);
//! let problem = Problem::new(
//!     Model::ConvexSelf(Arc::new(f)),
//!     FeasibleSet::cube(2, 2.0),
//!     vec![1.5, 1.0],
//! )
//! .unwrap();
//! let result = outer_solve(&problem, &SolverConfig::default()).unwrap();
//! assert_eq!(result.status, Status::Critical);
//! assert!(result.f_final <= 1e-5);
//! ```

pub mod bench;
pub mod bundle;
pub mod certify;
pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod feasible;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod tangent;
pub mod trace;

pub use bundle::{Bundle, CuttingPlane, PlaneOrigin};
pub use config::{Mode, Norm, SolverConfig, TrialMode};
pub use error::{Error, Result};
pub use feasible::FeasibleSet;
pub use model::Model;
pub use oracle::{AffinePiece, MaxAffine, MaxOfSmooth, Oracle, SmoothMap, SmoothPiece};
pub use solver::{outer_solve, Problem, SolveResult, Solver, Status};
pub use trace::{SolverTrace, StepKind, TraceRecord};
