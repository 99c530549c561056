//! Friction-involved nonsmooth dynamics at desk scale.
//!
//! The crate simulates stick-slip and separation-reattachment vibration of
//! small contact systems with two families of solvers:
//!
//! * conventional mixed-level time stepping, which assembles and solves a
//!   linear complementarity problem (LCP) each step, plus an RK4 variant;
//! * physics-informed neural-network (PINN) integrators built on implicit
//!   Runge-Kutta reconstruction, in single / dual / advanced-single /
//!   advanced-dual flavours.
//!
//! Event-driven reference solvers (switching method for the 1-DoF rigid
//! contact model, root-shooting for the 2-DoF spring contact model) provide
//! ground truth, and the harness module computes the RMS / spectrum /
//! validity comparisons used by the CLI.

pub mod contact;
pub mod error;
pub mod harness;
pub mod lcp;
pub mod lcp_pinn;
pub mod nn;
pub mod pinn;
pub mod reference;
pub mod stepping;

pub use error::{FricdynError, Result};
