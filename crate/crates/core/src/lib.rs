//! Periodic 1D simulator core for the regularised Saint-Venant equations over
//! an uneven, possibly moving bottom.
//!
//! The regularisation makes the momentum equation non-local through the
//! Sturm-Liouville operator `L_h = h - eps d_x h^3 d_x`, which is assembled and
//! inverted at every right-hand-side evaluation. The crate is `no_std` and only
//! needs `alloc`; file formats and the command-line front end live in the
//! companion CLI crate.
//!
//! - [`grid`]: periodic mesh, central differences, quadrature
//! - [`fields`]: state, bathymetry, gravity, scenario presets
//! - [`sturm_liouville`]: assembly, application and cyclic inversion of `L_h`
//! - [`dynamics`]: right-hand sides, both forms of `R`, characteristic structure
//! - [`integrate`]: CFL control, RK4, the run loop, Picard iteration
//! - [`diagnostics`]: energy balance, Gronwall and depth envelopes, blow-up monitor
//! - [`mms`]: manufactured-solution forcing

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod integrate;
mod math;
pub mod mms;
pub mod sturm_liouville;

pub use diagnostics::{DiagnosticsRecord, DiagnosticsSink, Status};
pub use dynamics::{Model, Tendency};
pub use error::{Error, Result};
pub use fields::{Bathymetry, Epsilon, Gravity, State};
pub use grid::{Field, Grid};
pub use integrate::{PicardConfig, PicardReport, RunOutcome, StepControl, StopReason};
pub use sturm_liouville::SlOperator;
