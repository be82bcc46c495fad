//! Simulator and decay-condition checks for the inhomogeneous Muskat
//! problem on the periodic strip.
//!
//! The interface `y = f(x, t)` between two fluids in a porous medium evolves
//! under a nonlocal contour equation; a flat line `y = -h2` separates two
//! permeabilities `kappa+` (above) and `kappa-` (below).
//!
//! * [`grid`], [`state`], [`spectral`]: periodic grid, interface samples and
//!   Fourier utilities.
//! * [`kernels`]: the principal-value integrals and both forms of `f_t`.
//! * [`stepper`]: RK4 and integrating-factor RK4 time stepping, trajectories.
//! * [`diagnostics`]: observables, smallness conditions, decay fits and the
//!   weak-formulation residual.
//! * [`oracle`]: slow independent reference code used by the tests.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod oracle;
pub mod spectral;
pub mod state;
pub mod stepper;

pub use diagnostics::{ConditionReport, DiagnosticsRecord};
pub use error::{MuskatError, Result};
pub use grid::TorusGrid;
pub use kernels::{Formulation, RhsEvaluation};
pub use state::{InterfaceState, PhysicalParams, RhsForm, SolverConfig, StepperKind, TimeStep};
pub use stepper::{Termination, Trajectory};
