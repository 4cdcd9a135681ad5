//! Design and verification of fast, invariant-based splitting of a
//! harmonic trap into a biased double well.

pub mod dynamics;
pub mod error;
pub mod interp;
pub mod io;
pub mod mapping;
pub mod model2l;
pub mod presets;
pub mod protocols;
pub mod spectral;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
