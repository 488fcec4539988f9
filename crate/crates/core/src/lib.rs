#![cfg_attr(not(feature = "std"), no_std)]
//! Symplectic and variational indices of periodic orbits.
//!
//! The crate computes, for a periodic orbit supplied as trivialized
//! coefficient data, the CLM/Maslov intersection index of its linearized
//! flow, the spectral flow of its free- and fixed-period index forms,
//! the Poincaré splitting of its monodromy, and the parity criteria that
//! certify linear instability. Everything is `no_std`-compatible
//! (`alloc` required); IO, file formats and the CLI live in the
//! companion crate.

extern crate alloc;

pub mod error;
pub mod index_form;
pub mod linalg;
pub mod maslov;
pub mod orbit;
pub mod paths;
pub mod presets;
pub mod report;
pub mod spectral_flow;
pub mod stability;
pub mod symplectic;

pub use error::{Error, Result};
