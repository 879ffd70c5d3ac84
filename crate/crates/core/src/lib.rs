//! Time-periodic Oseen and Navier-Stokes flow past a translating body.
//!
//! The crate follows the structure of a constructive existence argument:
//! fields are split into steady and oscillatory parts, the linear problem is
//! solved one temporal Fourier mode at a time, boundary data is carried by
//! lifting fields, and the nonlinear problem is solved by Picard iteration.
//! The [`verify`] module audits the a priori estimates numerically.

pub mod error;
pub mod fft;
pub mod fields;
pub mod nonlinear;
pub mod norms;
pub mod oseen;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{Axis, Backend, Field, PeriodicGrid, Region};
