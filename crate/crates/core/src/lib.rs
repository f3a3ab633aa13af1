//! Genuine tripartite nonlocality of three-mode Gaussian states under
//! displaced-parity measurements, and its relation to Rényi-2 entanglement.

pub mod bell;
pub mod cli;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod optimizer;
pub mod sampler;
pub mod svetlichny;
pub mod wigner;

pub use error::{Error, Result};
