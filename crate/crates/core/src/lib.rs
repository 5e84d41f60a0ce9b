pub mod error;
pub mod linalg;
pub mod specfun;
pub mod spectra;
pub mod factorize;
pub mod models;
pub mod dpp;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
