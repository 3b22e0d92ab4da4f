//! Robust joint AP precoding and IRS phase-shift design for cell-free
//! MIMO downlinks with imperfect channel state information.

pub mod error;
pub mod harness;
pub mod matops;
pub mod optim;
pub mod rate;
pub mod scenario;

pub use error::{Error, Result};
