//! Radially symmetric blowup solutions of `u_t - lap u = e^u` and
//! numerical certification of their upper profile estimates.
//!
//! The crate has four layers:
//!
//! - [`bounds`]: exact closed-form evaluation of the weight functions,
//!   the auxiliary functional, and every profile bound.
//! - [`mesh`]: graded radial grids, the conservative radial Laplacian,
//!   tridiagonal solves, monotone regridding.
//! - [`integrate`]: adaptive linearly implicit time stepping into the
//!   blowup regime, blowup-time extrapolation, final-profile extraction.
//! - [`verify`]: certification checks that scan traces, fit the free
//!   constants, and report worst-case violations.
//!
//! [`trace_io`] serializes traces and provenance deterministically.

pub mod bounds;
pub mod integrate;
pub mod mesh;
pub mod trace_io;
pub mod verify;

pub use bounds::{BoundParams, PhiVariant};
pub use integrate::{
    estimate_blowup_time, extract_final_profile, run, BlowupEstimate, SolverConfig, Trace,
};
pub use mesh::{Field, RadialGrid};
pub use verify::{CheckRecord, CheckSettings, VerificationReport};
