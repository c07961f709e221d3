//! Energy transfer between resolved and unresolved modes of reduced bases for
//! the 1D viscous Burgers equation.
//!
//! The pipeline is: P1 finite-element DNS with backward Euler ([`solver`]),
//! a POD or Laplacian eigenbasis of the snapshots ([`basis`]), and
//! trapezoid time averages of the inter-mode transfer terms ([`budget`]).

pub mod basis;
pub mod budget;
pub mod cases;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod solver;
pub mod verify;

pub use basis::{build_pod, build_spectral, project, BasisKind, BasisSet, ModeSplit, RankTolerance};
pub use budget::{
    averaged_budget, build_basis, build_series, interval_table, pointwise_budget, table_rows, trapezoid_average,
    AveragedBudget, BasisSource, EnergySeries, FeOperators, IntervalNormalization, IntervalTable, PointBudget,
};
pub use cases::{preset, Averaging, CaseFile};
pub use error::{Error, Result};
pub use fem::{build_mesh, FeVector, Mesh};
pub use solver::{run_case, step_backward_euler, CaseConfig, SnapshotSet};
pub use verify::OracleReport;
