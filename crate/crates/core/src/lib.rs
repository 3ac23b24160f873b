//! Kronecker-form polynomial systems, monomial lifting to underdetermined
//! linear systems, and SVD-based analysis and root recovery.

pub mod cli;
pub mod error;
pub mod lift;
pub mod mwr;
pub mod recovery;
pub mod solvers;
pub mod system;
pub mod tensor;
mod util;

pub use error::{Error, Result};
pub use lift::{LiftedSystem, MonomialBlock};
pub use system::{PolynomialSystem, ResidualVector};
pub use tensor::DenseMatrix;
