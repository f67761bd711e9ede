//! Displaced qudits from conditional photon measurement.

pub mod cli;
pub mod dq;
pub mod error;
pub mod fock;
pub mod imperfections;
pub mod nongauss;
pub mod optim;
pub mod polynomials;
pub mod squeezing;

pub use error::{Error, Result};
