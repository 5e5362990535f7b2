//! Finite-dimensional modular theory: standard forms, relative entropy,
//! monotonicity under quantum maps, KMS states and free-energy identities.

pub mod algebra;
pub mod battery;
pub mod bogoliubov;
pub mod entropy;
pub mod kms;
pub mod error;
pub mod modular;
pub mod monotone;
pub mod numkit;
pub mod random;

pub use error::{Error, Result};
pub use modular::{DensityMatrix, PositiveMatrix};
pub use numkit::{CMatrix, CVector, HermitianMatrix, C64};
