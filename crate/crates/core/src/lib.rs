//! Stationary light transport through random ensembles of resonant point
//! dipoles inside a perfectly conducting rectangular waveguide.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: natural units, guide geometry and the TE/TM census.
//! * [`green`]: free-space and guided dyadic Green tensors.
//! * [`dipole`]: the coupled-dipole matrix, the stationary driven solve, a
//!   time-domain oracle and collective spectra.
//! * [`transport`]: random realizations, the point-detector transmission and
//!   Monte Carlo `T(L)` scans.
//! * [`analysis`]: mean free path, scaling fits and regime selection.
//! * [`config`], [`output`], [`experiment`]: configuration files, persisted
//!   results and orchestration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod dipole;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod green;
pub mod output;
pub mod transport;

pub use error::{Error, Result};
