//! Monte Carlo verification harness.
//!
//! Draws finite-size datasets from the spiked model, fits weighted PCA, and
//! summarizes the empirical recovery metrics next to their asymptotic
//! predictions. The workhorse is a sweep over a one-parameter family of
//! weight schemes for two-group noise profiles:
//!
//! ```text
//! w_1^2 = (1 - lambda) / p_1,    w_2^2 = lambda / p_2,    lambda in [0, 1],
//! ```
//!
//! which walks from "group 1 only" through uniform and inverse-variance
//! weighting to "group 2 only" while keeping the mean weight value at 1.
//!
//! Reproducibility: every trial derives its generator seed from
//! `(base_seed, grid_index, trial_index)` through a fixed 64-bit mixing
//! chain, trials run independently, and summaries reduce in trial order —
//! results are bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AggregatePrediction, AsymptoticConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    empirical_component_recovery, empirical_cross_product, empirical_score_recovery,
    empirical_score_recovery_unweighted, empirical_weighted_mse, fit_wpca,
};
use crate::model::{generate_dataset, NoiseProfile, SpikeModel};
use crate::weighting::{Normalization, WeightScheme};

/// Quantities a sweep can track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Matched squared component alignment per spike.
    Component,
    /// Matched squared weighted score cosine per spike.
    ScoreWeighted,
    /// Matched squared unweighted score cosine per spike (no prediction).
    ScoreUnweighted,
    /// Squared weighted singular value per spike.
    Amplitude,
    /// Signed component-score cross product per spike.
    Cross,
    /// Weighted mean squared error of the reconstruction (aggregate).
    Mse,
}

impl Metric {
    /// All metrics, in canonical output order.
    pub const ALL: [Metric; 6] = [
        Metric::Component,
        Metric::ScoreWeighted,
        Metric::ScoreUnweighted,
        Metric::Amplitude,
        Metric::Cross,
        Metric::Mse,
    ];

    /// Whether the metric is reported per spike (as opposed to aggregated).
    pub fn per_component(self) -> bool {
        !matches!(self, Metric::Mse)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Metric::Component => "component",
            Metric::ScoreWeighted => "score_weighted",
            Metric::ScoreUnweighted => "score_unweighted",
            Metric::Amplitude => "amplitude",
            Metric::Cross => "cross",
            Metric::Mse => "mse",
        };
        f.write_str(s)
    }
}

/// Per-spike measurements from a single fitted dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    /// Matched squared component alignment.
    pub component: f64,
    /// Squared component alignment leaked onto other spikes.
    pub component_leakage: f64,
    /// Matched squared weighted score cosine.
    pub score_weighted: f64,
    /// Squared weighted score cosine leaked onto other spikes.
    pub score_weighted_leakage: f64,
    /// Matched squared unweighted score cosine.
    pub score_unweighted: f64,
    /// Squared weighted singular value.
    pub amplitude: f64,
    /// Signed component-score cross product.
    pub cross: f64,
}

/// All measurements from a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeasurement {
    /// One record per spike.
    pub components: Vec<ComponentRecord>,
    /// Weighted mean squared error of the rank-`k` reconstruction.
    pub weighted_mse: f64,
}

/// Specification of a lambda sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub spike: SpikeModel,
    pub noise: NoiseProfile,
    /// Ambient dimension `d` of each simulated dataset.
    pub dim: usize,
    /// Samples `n` of each simulated dataset; `dim / samples` must match
    /// `spike.aspect`.
    pub samples: usize,
    /// Independent datasets per grid point.
    pub trials: usize,
    /// Weight-interpolation values, each in `[0, 1]`.
    pub lambda_grid: Vec<f64>,
    /// Seed all trial seeds derive from.
    pub base_seed: u64,
    /// Metrics to summarize.
    pub metrics: Vec<Metric>,
}

/// One summarized cell of a sweep: a (lambda, metric, component) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// 1-based spike index; 0 for aggregate metrics.
    pub component: usize,
    pub metric: Metric,
    /// Mean over trials.
    pub mean: f64,
    /// Lower quartile over trials (linear interpolation).
    pub q25: f64,
    /// Upper quartile over trials (linear interpolation).
    pub q75: f64,
    /// Asymptotic prediction, when one exists for the metric.
    pub prediction: Option<f64>,
    pub dim: usize,
    pub samples: usize,
    pub trials: usize,
}

/// Result of a sweep: rows ordered by grid point, then metric (in the order
/// requested), then component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// 64-bit finalizer-style mixer (splitmix64 finalizer constants).
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed: collisions across `(grid, trial)` pairs
/// are as unlikely as 64-bit hash collisions, and every trial is decoupled
/// from the others no matter how the work is scheduled.
pub fn trial_seed(base_seed: u64, grid_index: u64, trial_index: u64) -> u64 {
    let mut x = base_seed;
    for v in [grid_index, trial_index] {
        x = mix(x ^ mix(v));
    }
    x
}

/// The lambda-interpolated scheme for a two-group profile:
/// `w^2 = ((1 - lambda)/p_1, lambda/p_2)`. The mean weight value is 1 for
/// every lambda; `lambda = p_2` gives uniform weighting and
/// `lambda = p_2 sigma_1^2 / (p_1 sigma_2^2 + p_2 sigma_1^2)` gives
/// inverse-variance weighting.
pub fn lambda_scheme(noise: &NoiseProfile, lambda: f64) -> Result<WeightScheme> {
    if noise.len() != 2 {
        return Err(Error::invalid(
            "lambda",
            format!(
                "the lambda parameterization interpolates exactly two groups, got {}",
                noise.len()
            ),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(
            "lambda",
            format!("lambda {lambda} must lie in [0, 1]"),
        ));
    }
    let p1 = noise.groups()[0].proportion;
    let p2 = noise.groups()[1].proportion;
    if p1 <= 0.0 || p2 <= 0.0 {
        return Err(Error::invalid(
            "lambda",
            "both groups must be represented to interpolate between them",
        ));
    }
    WeightScheme::custom(
        noise,
        vec![(1.0 - lambda) / p1, lambda / p2],
        Normalization::None,
    )
}

/// Generate one dataset, fit it with the scheme's weights, and measure every
/// per-spike quantity plus the weighted reconstruction error.
pub fn run_trial(
    spike: &SpikeModel,
    noise: &NoiseProfile,
    scheme: &WeightScheme,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<TrialMeasurement> {
    let k = spike.k();
    if k > dim.min(samples) {
        return Err(Error::invalid(
            "spike.amplitudes",
            format!("{k} spikes do not fit in a {dim} x {samples} dataset"),
        ));
    }
    let ds = generate_dataset(spike, noise, dim, samples, seed)?;
    let weights = scheme.sample_weights(&ds.noise_labels)?;
    let fit = fit_wpca(&ds.data, &weights, k)?;
    let mut components = Vec::with_capacity(k);
    for i in 0..k {
        let (component, component_leakage) = empirical_component_recovery(&fit, &ds, i)?;
        let (score_weighted, score_weighted_leakage) = empirical_score_recovery(&fit, &ds, i)?;
        let (score_unweighted, _) = empirical_score_recovery_unweighted(&fit, &ds, i)?;
        let cross = empirical_cross_product(&fit, &ds, i)?;
        components.push(ComponentRecord {
            component,
            component_leakage,
            score_weighted,
            score_weighted_leakage,
            score_unweighted,
            amplitude: fit.amplitudes[i],
            cross,
        });
    }
    let weighted_mse = empirical_weighted_mse(&fit, &ds)?;
    Ok(TrialMeasurement {
        components,
        weighted_mse,
    })
}

/// Run the full sweep: `trials` independent datasets at every grid point,
/// fitted with the lambda scheme of that point, summarized per metric.
///
/// Trials are embarrassingly parallel and are distributed over the current
/// rayon thread pool; the summary is reduced in deterministic trial order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    validate_spec(spec)?;
    let grid_len = spec.lambda_grid.len();

    // Per-grid-point schemes and predictions, up front (cheap, sequential).
    let mut schemes = Vec::with_capacity(grid_len);
    let mut predictions: Vec<AggregatePrediction> = Vec::with_capacity(grid_len);
    for &lambda in &spec.lambda_grid {
        let scheme = lambda_scheme(&spec.noise, lambda)?;
        let config = AsymptoticConfig::new(
            spec.spike.aspect,
            spec.noise.clone(),
            scheme.values().to_vec(),
        )?;
        predictions.push(config.aggregate_prediction(&spec.spike)?);
        schemes.push(scheme);
    }

    // All (grid, trial) pairs in a fixed order; parallel map keeps indices.
    let jobs: Vec<(usize, usize)> = (0..grid_len)
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    let measurements: Vec<TrialMeasurement> = jobs
        .into_par_iter()
        .map(|(g, t)| {
            let seed = trial_seed(spec.base_seed, g as u64, t as u64);
            run_trial(
                &spec.spike,
                &spec.noise,
                &schemes[g],
                spec.dim,
                spec.samples,
                seed,
            )
        })
        .collect::<Result<_>>()?;

    let k = spec.spike.k();
    let mut rows = Vec::new();
    for (g, &lambda) in spec.lambda_grid.iter().enumerate() {
        let block = &measurements[g * spec.trials..(g + 1) * spec.trials];
        let pred = &predictions[g];
        for &metric in &spec.metrics {
            if metric.per_component() {
                for i in 0..k {
                    let values: Vec<f64> = block
                        .iter()
                        .map(|m| {
                            let r = &m.components[i];
                            match metric {
                                Metric::Component => r.component,
                                Metric::ScoreWeighted => r.score_weighted,
                                Metric::ScoreUnweighted => r.score_unweighted,
                                Metric::Amplitude => r.amplitude,
                                Metric::Cross => r.cross,
                                Metric::Mse => unreachable!(),
                            }
                        })
                        .collect();
                    let p = &pred.per_component[i];
                    let prediction = match metric {
                        Metric::Component => Some(p.component),
                        Metric::ScoreWeighted => Some(p.score),
                        Metric::ScoreUnweighted => None,
                        Metric::Amplitude => Some(p.amplitude),
                        Metric::Cross => Some(p.cross),
                        Metric::Mse => unreachable!(),
                    };
                    rows.push(summarize(spec, lambda, i + 1, metric, &values, prediction));
                }
            } else {
                let values: Vec<f64> = block.iter().map(|m| m.weighted_mse).collect();
                rows.push(summarize(
                    spec,
                    lambda,
                    0,
                    metric,
                    &values,
                    Some(pred.weighted_mse),
                ));
            }
        }
    }
    Ok(SweepTable { rows })
}

fn validate_spec(spec: &SweepSpec) -> Result<()> {
    if spec.dim == 0 || spec.samples == 0 {
        return Err(Error::invalid(
            "dim/samples",
            format!("need positive dimensions, got {} x {}", spec.dim, spec.samples),
        ));
    }
    if spec.trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    if spec.lambda_grid.is_empty() {
        return Err(Error::invalid("lambda_grid", "need at least one grid point"));
    }
    if spec.metrics.is_empty() {
        return Err(Error::invalid("metrics", "need at least one metric"));
    }
    let empirical_aspect = spec.dim as f64 / spec.samples as f64;
    if (spec.spike.aspect - empirical_aspect).abs() > 1e-9 * spec.spike.aspect.max(1.0) {
        return Err(Error::invalid(
            "spike.aspect",
            format!(
                "configured aspect ratio {} does not match dim/samples = {empirical_aspect}",
                spec.spike.aspect
            ),
        ));
    }
    Ok(())
}

fn summarize(
    spec: &SweepSpec,
    lambda: f64,
    component: usize,
    metric: Metric,
    values: &[f64],
    prediction: Option<f64>,
) -> SweepRow {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    SweepRow {
        lambda,
        component,
        metric,
        mean,
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
        prediction,
        dim: spec.dim,
        samples: spec.samples,
        trials: spec.trials,
    }
}

/// Quantile with linear interpolation at rank `h = (n - 1) q` over
/// ascending-sorted values.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Invert the amplitude map: given an observed squared weighted singular
/// value, find the spike strength `theta^2` whose predicted amplitude equals
/// it. Errors with the bulk-edge value when the observation does not exceed
/// the edge (such an observation carries no spike information).
pub fn debias_amplitude(config: &AsymptoticConfig, observed: f64) -> Result<f64> {
    if !observed.is_finite() || observed <= 0.0 {
        return Err(Error::invalid(
            "observed",
            format!("observed amplitude {observed} must be finite and > 0"),
        ));
    }
    let alpha = config.largest_root_a()?;
    let edge = alpha * config.eval_c(alpha)? / config.aspect();
    if observed <= edge {
        return Err(Error::BelowTransition { observed, edge });
    }
    let g = |t2: f64| -> Result<f64> { Ok(config.predict(t2)?.amplitude - observed) };

    // Bracket the root: the map is nondecreasing in theta^2 (constant at the
    // bulk edge below the transition, strictly increasing above).
    let mut lo = 1.0;
    let mut steps = 0;
    while g(lo)? >= 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 200 {
            return Err(Error::RootSearch(
                "could not bracket the amplitude inverse from below".into(),
            ));
        }
    }
    let mut hi = lo.max(1.0);
    steps = 0;
    while g(hi)? <= 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::RootSearch(
                "could not bracket the amplitude inverse from above".into(),
            ));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_group() -> NoiseProfile {
        NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)]).unwrap()
    }

    #[test]
    fn trial_seeds_are_stable_and_spread() {
        let a = trial_seed(42, 0, 0);
        assert_eq!(a, trial_seed(42, 0, 0));
        let mut seen = std::collections::HashSet::new();
        for g in 0..8u64 {
            for t in 0..64u64 {
                seen.insert(trial_seed(42, g, t));
            }
        }
        assert_eq!(seen.len(), 8 * 64);
        assert_ne!(trial_seed(42, 0, 1), trial_seed(42, 1, 0));
        assert_ne!(trial_seed(42, 0, 0), trial_seed(43, 0, 0));
    }

    #[test]
    fn lambda_scheme_hits_the_named_schemes() {
        let noise = two_group();
        // lambda = p_2 makes both groups weight 1: uniform.
        let uni = lambda_scheme(&noise, 0.8).unwrap();
        assert!((uni.values()[0] - 1.0).abs() < 1e-15);
        assert!((uni.values()[1] - 1.0).abs() < 1e-15);
        // lambda = 1/2 here is proportional to (4, 1) = inverse variance.
        let inv = lambda_scheme(&noise, 0.5).unwrap();
        assert!((inv.values()[0] / inv.values()[1] - 4.0).abs() < 1e-12);
        // Endpoints keep exactly one group.
        assert_eq!(lambda_scheme(&noise, 0.0).unwrap().values()[1], 0.0);
        assert_eq!(lambda_scheme(&noise, 1.0).unwrap().values()[0], 0.0);
        // Mean weight value is 1 along the whole path.
        for &l in &[0.0, 0.3, 0.77, 1.0] {
            let s = lambda_scheme(&noise, l).unwrap();
            let mean: f64 = noise
                .groups()
                .iter()
                .zip(s.values())
                .map(|(g, &w)| g.proportion * w)
                .sum();
            assert!((mean - 1.0).abs() < 1e-12, "lambda = {l}");
        }
        assert!(lambda_scheme(&noise, 1.5).is_err());
        let three = NoiseProfile::new(vec![(0.2, 1.0), (0.4, 2.0), (0.4, 3.0)]).unwrap();
        assert!(lambda_scheme(&three, 0.5).is_err());
    }

    #[test]
    fn sweep_rows_are_ordered_and_deterministic() {
        let spec = SweepSpec {
            spike: SpikeModel::new(1.0, vec![25.0, 16.0]).unwrap(),
            noise: two_group(),
            dim: 50,
            samples: 50,
            trials: 3,
            lambda_grid: vec![0.5, 0.8],
            base_seed: 7,
            metrics: vec![Metric::Component, Metric::Mse],
        };
        let table = run_sweep(&spec).unwrap();
        // 2 grid points x (2 components + 1 aggregate) rows.
        assert_eq!(table.rows.len(), 2 * 3);
        let heads: Vec<(f64, usize, Metric)> = table
            .rows
            .iter()
            .map(|r| (r.lambda, r.component, r.metric))
            .collect();
        assert_eq!(
            heads,
            vec![
                (0.5, 1, Metric::Component),
                (0.5, 2, Metric::Component),
                (0.5, 0, Metric::Mse),
                (0.8, 1, Metric::Component),
                (0.8, 2, Metric::Component),
                (0.8, 0, Metric::Mse),
            ]
        );
        for row in &table.rows {
            assert!(row.mean.is_finite());
            assert!(row.q25 <= row.q75);
            assert!(row.prediction.is_some());
        }
        // Bit-identical on a second run.
        assert_eq!(table, run_sweep(&spec).unwrap());
    }

    #[test]
    fn sweep_validates_aspect_consistency() {
        let spec = SweepSpec {
            spike: SpikeModel::new(1.0, vec![25.0]).unwrap(),
            noise: two_group(),
            dim: 50,
            samples: 100,
            trials: 1,
            lambda_grid: vec![0.5],
            base_seed: 7,
            metrics: vec![Metric::Component],
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.75) - 3.25).abs() < 1e-15);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&[5.0], 0.25), 5.0);
    }

    #[test]
    fn debias_round_trips_through_the_amplitude_map() {
        let config =
            AsymptoticConfig::new(1.0, two_group(), vec![1.0, 1.0]).unwrap();
        let pred = config.predict(25.0).unwrap();
        assert!((pred.amplitude - 32.384_348_856_488_45).abs() < 1e-9);
        let back = debias_amplitude(&config, pred.amplitude).unwrap();
        assert!((back - 25.0).abs() < 1e-8, "debiased to {back}");
        // Observations at or below the bulk edge are rejected with the edge.
        let err = debias_amplitude(&config, 10.0).unwrap_err();
        match err {
            Error::BelowTransition { observed, edge } => {
                assert_eq!(observed, 10.0);
                assert!((edge - 14.585_804_144_311_763).abs() < 1e-9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn run_trial_reports_every_spike() {
        let spike = SpikeModel::new(1.0, vec![25.0, 16.0]).unwrap();
        let noise = two_group();
        let scheme = lambda_scheme(&noise, 0.5).unwrap();
        let m = run_trial(&spike, &noise, &scheme, 60, 60, 99).unwrap();
        assert_eq!(m.components.len(), 2);
        for r in &m.components {
            assert!(r.component > 0.0 && r.component <= 1.0 + 1e-9);
            assert!(r.amplitude > 0.0);
        }
        assert!(m.weighted_mse > 0.0);
    }
}
