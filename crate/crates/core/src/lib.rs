//! Continuous-variable two-mode Gaussian states and EPR-steering analysis.
//!
//! Covariance matrices use the quadrature ordering `(X1, P1, X2, P2)` with
//! vacuum variance 1. All numerics are generic over [`Real`] (`f32`, `f64`).
//!
//! ```
//! use cvsteer_core::dataset::reference_measurements;
//! use cvsteer_core::{criteria_report, reconstruct};
//!
//! let rec = reconstruct(&reference_measurements::<f64>())?;
//! let report = criteria_report(&rec.covariance)?;
//! assert!(report.reid_b_given_a < 1.0);
//! # Ok::<(), cvsteer_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod dataset;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod loss_model;
pub mod optimize;
pub mod perturbation;
pub mod reconstruction;
pub mod repro;
pub mod sampler;
pub mod scalar;

pub use criteria::{
    criteria_report, duan_sum, evaluate_gains, optimal_gain, reid_product, ConditionalVariances,
    CriteriaReport, Direction, GainEvaluation, GainPair, Gains,
};
pub use error::{Error, Result};
pub use gaussian::{
    apply_loss, apply_symplectic, beamsplitter, build_epr_source, is_physical, phase_shift,
    squeezer, symplectic_eigenvalues, vacuum_state, CovarianceMatrix, LossChannel, Quadrature,
    SymplecticTransform,
};
pub use linalg::Matrix;
pub use loss_model::{fit_efficiency, forward_covariance, LossFit, SourceParams};
pub use reconstruction::{reconstruct, MeasurementSet, Reconstruction};
pub use repro::{run_repro, ReproOptions, ReproReport};
pub use sampler::{
    measure_campaign, run_campaign, sample_quadratures, Campaign, MeasurementSetting, SampleBatch,
};
pub use scalar::Real;

pub type CovarianceMatrix64 = CovarianceMatrix<f64>;
pub type CovarianceMatrix32 = CovarianceMatrix<f32>;
pub type SymplecticTransform64 = SymplecticTransform<f64>;
pub type SymplecticTransform32 = SymplecticTransform<f32>;
pub type SourceParams64 = SourceParams<f64>;
pub type SourceParams32 = SourceParams<f32>;
pub type MeasurementSet64 = MeasurementSet<f64>;
pub type MeasurementSet32 = MeasurementSet<f32>;
pub type CriteriaReport64 = CriteriaReport<f64>;
pub type CriteriaReport32 = CriteriaReport<f32>;
pub type LossFit64 = LossFit<f64>;
pub type LossFit32 = LossFit<f32>;
