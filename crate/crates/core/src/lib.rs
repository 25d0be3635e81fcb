//! Direction-of-arrival estimation on sparse linear arrays via Coarray ESPRIT.
//!
//! The pipeline runs geometry → snapshots → redundancy-averaged Toeplitz
//! coarray covariance → ESPRIT → matching distance, and every stage is a pure
//! function of immutable inputs. The [`bounds`] module evaluates the closed-form
//! finite-snapshot guarantees and [`experiment`] drives seeded Monte Carlo sweeps.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod esprit;
pub mod estimation;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use geometry::{CoarrayStructure, SensorArray};
pub use signal::{SnapshotMatrix, SourceScene};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
