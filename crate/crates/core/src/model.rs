//! Spiked data model with group-wise heteroscedastic noise.
//!
//! A dataset is `Y = U diag(theta_i) Z^T + E diag(eta_j)`: a rank-`k` signal
//! with orthonormal components `U`, i.i.d. standard-normal scores `Z`, and
//! white noise whose standard deviation `eta_j` is constant within each
//! sample group. Group `l` holds a fraction `p_l` of the samples at noise
//! variance `sigma_l^2`.

use faer::{Accum, Mat, Par};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(p_l) == 1`.
const PROPORTION_SUM_TOL: f64 = 1e-12;

/// One noise group: a fraction of the samples and their noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseGroup {
    /// Fraction `p_l >= 0` of the samples in this group.
    pub proportion: f64,
    /// Noise variance `sigma_l^2 >= 0` of this group.
    pub variance: f64,
}

/// Proportions and variances of the noise groups.
///
/// Proportions must sum to one (within `1e-12`). Construction via
/// [`NoiseProfile::new`] additionally requires at least one represented
/// group with positive variance; fully noiseless profiles must be requested
/// explicitly through [`NoiseProfile::new_allow_noiseless`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    groups: Vec<NoiseGroup>,
}

impl NoiseProfile {
    /// Build a profile from `(proportion, variance)` pairs.
    pub fn new(groups: Vec<(f64, f64)>) -> Result<Self> {
        let profile = Self::new_allow_noiseless(groups)?;
        if !profile
            .groups
            .iter()
            .any(|g| g.proportion > 0.0 && g.variance > 0.0)
        {
            return Err(Error::invalid(
                "noise.variances",
                "no represented group has positive variance; use \
                 new_allow_noiseless for deliberately noiseless data",
            ));
        }
        Ok(profile)
    }

    /// Like [`NoiseProfile::new`] but permitting an entirely noiseless
    /// profile (all variances zero).
    pub fn new_allow_noiseless(groups: Vec<(f64, f64)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("noise.groups", "at least one group required"));
        }
        let mut total = 0.0;
        for (i, &(p, v)) in groups.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(
                    "noise.proportions",
                    format!("group {i}: proportion {p} must be finite and >= 0"),
                ));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "noise.variances",
                    format!("group {i}: variance {v} must be finite and >= 0"),
                ));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROPORTION_SUM_TOL {
            return Err(Error::invalid(
                "noise.proportions",
                format!("proportions sum to {total}, expected 1 within {PROPORTION_SUM_TOL:e}"),
            ));
        }
        if !groups.iter().any(|&(p, _)| p > 0.0) {
            return Err(Error::invalid(
                "noise.proportions",
                "at least one group must have positive proportion",
            ));
        }
        Ok(Self {
            groups: groups
                .into_iter()
                .map(|(proportion, variance)| NoiseGroup {
                    proportion,
                    variance,
                })
                .collect(),
        })
    }

    /// Number of groups `L`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    /// True when the profile is degenerate (never: construction forbids it).
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// The groups in order.
    pub fn groups(&self) -> &[NoiseGroup] {
        &self.groups
    }

    /// True when every group has zero variance.
    pub fn is_noiseless(&self) -> bool {
        self.groups.iter().all(|g| g.variance == 0.0)
    }

    /// Integer sample counts per group for a total of `n` samples:
    /// `n_l = round(p_l * n)` for all but the last group, which absorbs the
    /// residual so the counts always sum to `n`.
    pub fn group_counts(&self, n: usize) -> Result<Vec<usize>> {
        let l = self.groups.len();
        let mut counts = vec![0usize; l];
        let mut used = 0usize;
        for (i, g) in self.groups.iter().take(l - 1).enumerate() {
            let c = (g.proportion * n as f64).round() as usize;
            counts[i] = c;
            used += c;
        }
        if used > n {
            return Err(Error::invalid(
                "noise.proportions",
                format!("rounded group counts ({used}) exceed the sample count ({n})"),
            ));
        }
        counts[l - 1] = n - used;
        Ok(counts)
    }
}

/// Signal strength side of the model: aspect ratio and spike amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeModel {
    /// Aspect ratio `c = d/n` the asymptotic predictions are evaluated at.
    pub aspect: f64,
    /// Squared amplitudes `theta_i^2`, nonincreasing and positive.
    pub amplitudes: Vec<f64>,
}

impl SpikeModel {
    pub fn new(aspect: f64, amplitudes: Vec<f64>) -> Result<Self> {
        if !aspect.is_finite() || aspect <= 0.0 {
            return Err(Error::invalid(
                "spike.aspect",
                format!("aspect ratio {aspect} must be finite and > 0"),
            ));
        }
        if amplitudes.is_empty() {
            return Err(Error::invalid(
                "spike.amplitudes",
                "at least one amplitude required",
            ));
        }
        for (i, &a) in amplitudes.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::invalid(
                    "spike.amplitudes",
                    format!("amplitude {i}: {a} must be finite and > 0"),
                ));
            }
        }
        if amplitudes.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "spike.amplitudes",
                "amplitudes must be nonincreasing",
            ));
        }
        Ok(Self { aspect, amplitudes })
    }

    /// Number of spikes `k`.
    pub fn k(&self) -> usize {
        self.amplitudes.len()
    }
}

/// A generated dataset together with the ground truth that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// Observed `dim x samples` data matrix `Y`.
    pub data: Mat<f64>,
    /// Orthonormal true components `U` (`dim x k`).
    pub truth_components: Mat<f64>,
    /// Raw score vectors `Z` (`samples x k`), i.i.d. standard normal.
    pub truth_scores: Mat<f64>,
    /// Configured squared amplitudes `theta_i^2` (copied verbatim so
    /// equality partitions can match on them exactly).
    pub truth_amplitudes: Vec<f64>,
    /// Noise-group index of each sample.
    pub noise_labels: Vec<usize>,
    /// Ambient dimension `d`.
    pub dim: usize,
    /// Number of samples `n`.
    pub samples: usize,
    /// Seed the generator was started from.
    pub seed: u64,
    /// Groups with positive proportion whose integer count rounded to zero
    /// at this sample size (absent from the dataset).
    pub empty_groups: Vec<usize>,
}

/// Draw a dataset from the spiked model.
///
/// Reproducibility contract: the same `(spike, noise, dim, samples, seed)`
/// produce a bit-identical dataset on a given host. Randomness comes from a
/// ChaCha8 stream seeded with `seed`; draws happen in a fixed order (raw
/// components column by column, then scores, then noise).
pub fn generate_dataset(
    spike: &SpikeModel,
    noise: &NoiseProfile,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    let k = spike.k();
    if dim == 0 || samples == 0 {
        return Err(Error::invalid(
            "dim/samples",
            format!("need positive dimensions, got {dim} x {samples}"),
        ));
    }
    if k > dim {
        return Err(Error::invalid(
            "spike.amplitudes",
            format!("{k} spikes do not fit in dimension {dim}"),
        ));
    }
    let counts = noise.group_counts(samples)?;
    let mut noise_labels = Vec::with_capacity(samples);
    for (g, &c) in counts.iter().enumerate() {
        noise_labels.extend(std::iter::repeat_n(g, c));
    }
    let empty_groups = counts
        .iter()
        .enumerate()
        .filter(|&(g, &c)| c == 0 && noise.groups()[g].proportion > 0.0)
        .map(|(g, _)| g)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Components: orthonormalized Gaussian frame.
    let mut u = Mat::zeros(dim, k);
    for j in 0..k {
        for i in 0..dim {
            u[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    orthonormalize_columns(&mut u)?;

    // Scores stay raw: the model wants i.i.d. entries, not an orthonormal
    // frame, so that weighted score inner products concentrate rather than
    // vanish exactly.
    let mut z = Mat::zeros(samples, k);
    for j in 0..k {
        for i in 0..samples {
            z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }

    // Noise, scaled per sample: eta_j = sigma of the sample's group.
    let eta: Vec<f64> = noise.groups().iter().map(|g| g.variance.sqrt()).collect();
    let mut y = Mat::zeros(dim, samples);
    for j in 0..samples {
        let sd = eta[noise_labels[j]];
        for i in 0..dim {
            y[(i, j)] = sd * rng.sample::<f64, _>(StandardNormal);
        }
    }

    // Y += U diag(theta) Z^T.
    let mut u_scaled = u.clone();
    for (i, &a) in spike.amplitudes.iter().enumerate() {
        let theta = a.sqrt();
        for r in 0..dim {
            u_scaled[(r, i)] *= theta;
        }
    }
    faer::linalg::matmul::matmul(
        y.as_mut(),
        Accum::Add,
        u_scaled.as_ref(),
        z.transpose(),
        1.0,
        Par::Seq,
    );

    Ok(SyntheticDataset {
        data: y,
        truth_components: u,
        truth_scores: z,
        truth_amplitudes: spike.amplitudes.clone(),
        noise_labels,
        dim,
        samples,
        seed,
        empty_groups,
    })
}

/// In-place modified Gram-Schmidt with re-orthogonalization. Intended for
/// tall skinny frames (`k << dim`), where two passes give orthonormality at
/// machine precision.
fn orthonormalize_columns(m: &mut Mat<f64>) -> Result<()> {
    let (rows, cols) = (m.nrows(), m.ncols());
    for j in 0..cols {
        for _pass in 0..2 {
            for prev in 0..j {
                let mut dot = 0.0;
                for r in 0..rows {
                    dot += m[(r, prev)] * m[(r, j)];
                }
                for r in 0..rows {
                    m[(r, j)] -= dot * m[(r, prev)];
                }
            }
        }
        let norm = m.col(j).norm_l2();
        if norm <= 1e-12 {
            return Err(Error::invalid(
                "components",
                format!("random frame is numerically rank deficient at column {j}"),
            ));
        }
        for r in 0..rows {
            m[(r, j)] /= norm;
        }
    }
    Ok(())
}
