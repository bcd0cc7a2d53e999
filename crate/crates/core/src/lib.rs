//! On-grid direction-of-arrival estimation for uniform linear arrays.
//!
//! The crate models a ULA and its scan-grid dictionary, synthesizes
//! snapshots, compresses them with a measurement matrix and recovers a
//! sparse angle spectrum with orthogonal matching pursuit. Covariance-based
//! baselines (MUSIC, Capon, propagator, ESPRIT) and a Monte-Carlo harness
//! are provided for comparison.

pub mod array;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod omp;
pub mod output;
pub mod rng;
pub mod sensing;
pub mod spectrum;
pub mod synth;

pub use array::{build_dictionary, steering_vector, AngleGrid, ArrayGeometry, Dictionary};
pub use error::{DoaError, Result};
pub use omp::{angle_spectrum, estimate_doas, omp_recover, OmpResult};
pub use spectrum::AngleSpectrum;
