//! Statevector laboratory for training data-reuploading quantum circuits and
//! analysing their training dynamics in the frequency domain.

pub mod ansatz;
pub mod error;
pub mod statevector;

pub use error::{Error, Result};
pub mod export;
pub mod fourier;
pub mod config;
pub mod datasets;
pub mod linalg;
pub mod qkernel;
pub mod qntk;
pub mod runner;
pub mod training;
