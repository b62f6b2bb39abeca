//! Multi-dynamics simulation of a tendon-driven continuum robot.
//!
//! Three coupled subsystems are stepped once per control cycle: the motor's
//! electrical circuit under a feedforward + PID current controller, the geared
//! winch that turns motor torque into tendon tension, and a 24-joint planar
//! pseudo-rigid-body chain. The current reconstructed from the mechanical side
//! closes the loop and doubles as an intrinsic contact sensor, which the
//! `perception`, `ident` and `sizeest` modules build on.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod continuum;
pub mod control;
pub mod electrical;
mod error;
pub mod filter;
pub mod ident;
pub mod linalg;
pub mod log;
pub mod math;
pub mod perception;
pub mod rng;
pub mod scenario;
pub mod sizeest;
pub mod transmission;

pub use error::{Error, Result};
