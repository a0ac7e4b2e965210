//! Phase sensing with a seeded truncated SU(1,1) interferometer.
//!
//! The probe and conjugate beams of a four-wave-mixing amplifier are read out
//! with two homodyne detectors and combined as `M_λQ = X_p + λ X_c`. This
//! crate models that measurement on the lossy two-mode Gaussian state,
//! finds the weight `λ` that minimizes the joint noise, compares against
//! coherent-light baselines and the quantum Cramér-Rao bound, and provides a
//! simulation and fitting pipeline for noise-versus-`λ` data.
//!
//! - [`gaussian`]: covariance-matrix state, loss, phase shift, moments.
//! - [`metrology`]: `λ_opt`, noise power, sensitivity, QCRB, SQL, SNRI, curves.
//! - [`fock`]: brute-force Fock-space oracle for the Gaussian formulas.
//! - [`simulator`]: synthetic dual-homodyne records and spectrum analysis.
//! - [`fit`]: noise-dataset I/O, model fitting and `λ_opt` extraction.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod metrology;
pub mod simulator;
pub mod table;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, InterferometerParams, Mode, MomentSummary, WeightedMeasurement};
pub use metrology::{NoiseResult, SensitivityResult, SqlKind};
pub use table::CurveTable;
