//! Nonnegative matrix factorization toolkit.
//!
//! Factorizes a nonnegative matrix `V ≈ W·H` with multiplicative-update,
//! alternating least squares, nonsmooth, binary and Bayesian methods; seeds
//! the factors (random, Random C, Random Vcol, NNDSVD); scores fits; and
//! estimates the factorization rank from the stability of repeated runs.
//!
//! ```
//! use nmfkit::factor::{factorize, FactorConfig, Method};
//! use nmfkit::matcore::{DataMatrix, Dense};
//!
//! let v = DataMatrix::Dense(Dense::from_rows(&[[1.0, 2.0, 0.5], [2.0, 4.0, 1.0], [0.0, 1.0, 3.0]]));
//! let config = FactorConfig::new(Method::NmfEu, 2);
//! let (model, _trace) = factorize(&v, &config).unwrap();
//! assert_eq!(model.w.shape(), (3, 2));
//! ```

pub mod cli;
pub mod error;
pub mod factor;
pub mod matcore;
pub mod mio;
pub mod multirun;
pub mod quality;
pub mod seeding;

pub use error::{Error, Result};
