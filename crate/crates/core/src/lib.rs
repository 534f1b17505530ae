//! Conformal predictive distributions for regression built on kernel ridge
//! regression.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: kernel functions and Gram matrices.
//! - [`ridge`]: the regularised kernel algebra (fit-time inverse, hat-matrix
//!   diagonals, and the O(n²) per-test partitioned update).
//! - [`gpr`]: the Gaussian-process predictive distribution used as a baseline.
//! - [`cps`]: the Kernel Ridge Regression Prediction Machine in its
//!   studentized, ordinary and deleted forms, plus a brute-force oracle.
//! - [`validation`]: synthetic data, the calibration harness and the
//!   experiment runners.
//!
//! A typical prediction fits once and predicts many times:
//!
//! ```
//! use krrpm::{cps, kernels::{KernelSpec, Objects}, ridge::FitState};
//!
//! let objects = Objects::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
//! let fit = FitState::fit(objects, vec![0.1, 0.4, 0.9], KernelSpec::laplacian(1.0).unwrap(), 1.0).unwrap();
//! let dist = cps::krrpm_predict(&fit, &[0.75], cps::Variant::Studentized).unwrap();
//! assert_eq!(dist.n(), 3);
//! assert!(dist.eval(f64::INFINITY, 1.0) == 1.0);
//! ```

pub mod cps;
pub mod error;
pub mod gpr;
pub mod kernels;
pub mod ridge;
pub mod validation;

pub use error::{Error, Result};
