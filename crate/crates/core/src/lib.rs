//! Weighted principal component analysis for heteroscedastic data.
//!
//! High-dimensional datasets often mix samples of very different quality:
//! some come from clean instruments, others are drowned in noise. Plain PCA
//! treats them all alike and pays for it. This crate implements PCA with
//! per-sample weights, together with the random-matrix theory that says how
//! well the weighted estimator works in the proportional-growth limit and
//! which weights to pick:
//!
//! * [`model`] — the spiked data model with group-wise noise variances and a
//!   reproducible synthetic-data generator;
//! * [`estimator`] — the weighted PCA fit (components, amplitudes, scores)
//!   plus empirical recovery measurements against known ground truth;
//! * [`asymptotics`] — deterministic predictions of eigenvalue locations and
//!   recovery fractions via rational-function root finding;
//! * [`weighting`] — the standard weight families, including the optimal
//!   weights `w^2 = 1/(sigma^2 (theta^2 + sigma^2))` and the closed-form
//!   recovery they achieve;
//! * [`sampling`] — budget-constrained sample-collection design by vertex
//!   enumeration of the cost polyhedron;
//! * [`montecarlo`] — a deterministic, parallel Monte Carlo harness that
//!   puts empirical recoveries next to their predictions.
//!
//! # Example
//!
//! Predict how well the top component of a two-group dataset can be
//! recovered, then check it on synthetic data:
//!
//! ```
//! use wpca::{
//!     AsymptoticConfig, NoiseProfile, Normalization, SampleWeights, SpikeModel, WeightScheme,
//! };
//!
//! // 20% clean samples, 80% at 4x the noise; d/n -> 1, spike strength 25.
//! let noise = NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)])?;
//! let spike = SpikeModel::new(1.0, vec![25.0])?;
//!
//! let scheme = WeightScheme::inverse_variance(&noise, Normalization::None)?;
//! let config = AsymptoticConfig::new(1.0, noise.clone(), scheme.values().to_vec())?;
//! let prediction = config.predict(25.0)?;
//! assert!(prediction.above_transition);
//!
//! let ds = wpca::generate_dataset(&spike, &noise, 400, 400, 7)?;
//! let fit = wpca::fit_wpca(&ds.data, &scheme.sample_weights(&ds.noise_labels)?, 1)?;
//! let (aligned, _leaked) = wpca::empirical_component_recovery(&fit, &ds, 0)?;
//! assert!((aligned - prediction.component).abs() < 0.05);
//! # Ok::<(), wpca::Error>(())
//! ```

pub mod asymptotics;
pub mod error;
pub mod estimator;
pub mod model;
pub mod montecarlo;
mod roots;
pub mod sampling;
pub mod weighting;

pub use asymptotics::{
    harmonic_noise_variance, predict_inverse_variance, AggregatePrediction, AsymptoticConfig,
    RecoveryPrediction, DEFAULT_ROOT_TOL,
};
pub use error::{Error, Result};
pub use estimator::{
    empirical_component_recovery, empirical_cross_product, empirical_score_recovery,
    empirical_score_recovery_unweighted, empirical_weighted_mse, fit_wpca, weighted_objective,
    SampleWeights, WpcaFit,
};
pub use model::{generate_dataset, NoiseGroup, NoiseProfile, SpikeModel, SyntheticDataset};
pub use montecarlo::{
    debias_amplitude, lambda_scheme, run_sweep, run_trial, trial_seed, ComponentRecord, Metric,
    SweepRow, SweepSpec, SweepTable, TrialMeasurement,
};
pub use sampling::{BudgetProblem, SamplingPlan, SamplingSource, MAX_SOURCES};
pub use weighting::{make_scheme, optimal_recovery, Normalization, WeightKind, WeightScheme};

// The dense matrix type used throughout the public API.
pub use faer::Mat;
