//! Weighted PCA estimator.
//!
//! Given a `d x n` data matrix `Y` and per-sample weight values
//! `s_t = w_t^2 >= 0`, the estimator forms the column-scaled matrix
//!
//! ```text
//! Y_tilde = (1/sqrt(n)) * Y * W,    W = diag(sqrt(s_1), .., sqrt(s_n)),
//! ```
//!
//! takes its top-`k` singular triplets `(sigma_i, u_hat_i, v_i)` and reports
//!
//! * components `u_hat_i` (orthonormal, deterministic sign),
//! * amplitudes `theta_hat_i^2 = sigma_i^2`,
//! * scores `z_hat_i = Y^T u_hat_i / sigma_i`.
//!
//! The scores satisfy the weighted singular-vector identity
//! `Y_tilde (W z_hat_i / sqrt(n)) = sigma_i u_hat_i`, and the rank-`k`
//! reconstruction `sum_i sigma_i u_hat_i z_hat_i^T` equals the projection of
//! the data onto the fitted components, which minimizes the weighted
//! Frobenius objective `||(Y - X) W||_F^2 / n` over rank-`k` matrices `X`
//! expressible in that projected form.

use faer::{Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SyntheticDataset;

/// Singular values at or below `largest * RELATIVE_RANK_TOL` are treated as
/// numerically zero: their score columns are zeroed and the fit is flagged
/// rank deficient.
pub const RELATIVE_RANK_TOL: f64 = 1e-12;

/// Per-sample weight values `s_t = w_t^2` (the squares of the diagonal of
/// `W`). Nonnegative, finite, and not identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights {
    values: Vec<f64>,
}

impl SampleWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weights", "need at least one sample"));
        }
        for (t, &s) in values.iter().enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid(
                    "weights",
                    format!("sample {t}: weight value {s} must be finite and >= 0"),
                ));
            }
        }
        if values.iter().all(|&s| s == 0.0) {
            return Err(Error::invalid(
                "weights",
                "all sample weights are zero; the weighted matrix is empty",
            ));
        }
        Ok(Self { values })
    }

    /// Unit weight for each of `n` samples (plain PCA).
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("weights", "need at least one sample"));
        }
        Ok(Self {
            values: vec![1.0; n],
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of a weighted PCA fit.
#[derive(Debug, Clone)]
pub struct WpcaFit {
    /// Estimated components, `d x k`, orthonormal columns. Each column is
    /// sign-normalized so its largest-magnitude entry (first such entry on
    /// ties) is positive.
    pub components: Mat<f64>,
    /// Estimated squared amplitudes `theta_hat_i^2` (squared singular values
    /// of the scaled matrix), nonincreasing.
    pub amplitudes: Vec<f64>,
    /// Estimated scores, `n x k`; column `i` is `Y^T u_hat_i / theta_hat_i`.
    /// Columns belonging to numerically zero singular values are zero.
    pub scores: Mat<f64>,
    /// Number of components requested (and returned).
    pub k: usize,
    /// True when some requested singular value was numerically zero.
    pub rank_deficient: bool,
    weights: SampleWeights,
}

impl WpcaFit {
    /// The per-sample weight values the fit was computed with.
    pub fn weights(&self) -> &SampleWeights {
        &self.weights
    }

    /// Rank-`k` reconstruction `sum_i theta_hat_i u_hat_i z_hat_i^T`; equals
    /// the projection of the (unweighted) data onto the fitted components.
    pub fn reconstruct(&self) -> Mat<f64> {
        let d = self.components.nrows();
        let n = self.scores.nrows();
        let mut scaled = self.components.clone();
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let theta = a.sqrt();
            for r in 0..d {
                scaled[(r, i)] *= theta;
            }
        }
        let mut out = Mat::zeros(d, n);
        faer::linalg::matmul::matmul(
            out.as_mut(),
            Accum::Replace,
            scaled.as_ref(),
            self.scores.transpose(),
            1.0,
            Par::Seq,
        );
        out
    }
}

/// Fit weighted PCA with `k` components to a `d x n` data matrix.
pub fn fit_wpca(data: &Mat<f64>, weights: &SampleWeights, k: usize) -> Result<WpcaFit> {
    let (d, n) = (data.nrows(), data.ncols());
    if d == 0 || n == 0 {
        return Err(Error::invalid(
            "data",
            format!("need a nonempty matrix, got {d} x {n}"),
        ));
    }
    if weights.len() != n {
        return Err(Error::invalid(
            "weights",
            format!("{} weight values for {} samples", weights.len(), n),
        ));
    }
    if k == 0 || k > d.min(n) {
        return Err(Error::invalid(
            "k",
            format!("component count {k} must be in 1..={}", d.min(n)),
        ));
    }

    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let col_scale: Vec<f64> = weights.values().iter().map(|s| s.sqrt() * inv_sqrt_n).collect();
    let scaled = Mat::from_fn(d, n, |i, j| data[(i, j)] * col_scale[j]);

    let svd = scaled.thin_svd().map_err(|_| Error::SvdFailed)?;
    let u = svd.U();
    let s = svd.S();

    let mut components = Mat::zeros(d, k);
    let mut amplitudes = Vec::with_capacity(k);
    for i in 0..k {
        let sv: f64 = s[i];
        amplitudes.push(sv * sv);
        for r in 0..d {
            components[(r, i)] = u[(r, i)];
        }
    }
    for i in 0..k {
        fix_column_sign(&mut components, i);
    }

    let cutoff = s[0] * RELATIVE_RANK_TOL;
    let retained: Vec<bool> = (0..k).map(|i| s[i] > cutoff).collect();
    let rank_deficient = retained.iter().any(|&r| !r);

    // z_hat_i = Y^T u_hat_i / sigma_i, with numerically-null columns zeroed.
    let mut scores = Mat::zeros(n, k);
    faer::linalg::matmul::matmul(
        scores.as_mut(),
        Accum::Replace,
        data.transpose(),
        components.as_ref(),
        1.0,
        Par::Seq,
    );
    for i in 0..k {
        if retained[i] {
            let inv = 1.0 / s[i];
            for t in 0..n {
                scores[(t, i)] *= inv;
            }
        } else {
            for t in 0..n {
                scores[(t, i)] = 0.0;
            }
        }
    }

    Ok(WpcaFit {
        components,
        amplitudes,
        scores,
        k,
        rank_deficient,
        weights: weights.clone(),
    })
}

/// Make the largest-magnitude entry of column `i` positive (ties broken by
/// the first such entry).
fn fix_column_sign(m: &mut Mat<f64>, i: usize) {
    let rows = m.nrows();
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for r in 0..rows {
        let a = m[(r, i)].abs();
        if a > best_abs {
            best_abs = a;
            best = r;
        }
    }
    if m[(best, i)] < 0.0 {
        for r in 0..rows {
            m[(r, i)] = -m[(r, i)];
        }
    }
}

/// Weighted Frobenius objective `||(Y - X_hat) W||_F^2 / n` of a fit against
/// the data it was (or could have been) computed from.
pub fn weighted_objective(fit: &WpcaFit, data: &Mat<f64>) -> Result<f64> {
    check_shapes(fit, data.nrows(), data.ncols())?;
    let xhat = fit.reconstruct();
    let s = fit.weights.values();
    let n = data.ncols();
    let mut total = 0.0;
    for t in 0..n {
        if s[t] == 0.0 {
            continue;
        }
        let mut col = 0.0;
        for r in 0..data.nrows() {
            let e = data[(r, t)] - xhat[(r, t)];
            col += e * e;
        }
        total += s[t] * col;
    }
    Ok(total / n as f64)
}

fn check_shapes(fit: &WpcaFit, d: usize, n: usize) -> Result<()> {
    if fit.components.nrows() != d || fit.scores.nrows() != n {
        return Err(Error::invalid(
            "data",
            format!(
                "fit is {} x {} but data is {d} x {n}",
                fit.components.nrows(),
                fit.scores.nrows()
            ),
        ));
    }
    Ok(())
}

fn check_component_index(fit: &WpcaFit, ds: &SyntheticDataset, i: usize) -> Result<()> {
    check_shapes(fit, ds.dim, ds.samples)?;
    if i >= fit.k {
        return Err(Error::invalid(
            "component",
            format!("index {i} out of range for a fit with k = {}", fit.k),
        ));
    }
    if i >= ds.truth_amplitudes.len() {
        return Err(Error::invalid(
            "component",
            format!(
                "index {i} out of range for ground truth with {} spikes",
                ds.truth_amplitudes.len()
            ),
        ));
    }
    Ok(())
}

/// True when truth spikes `i` and `j` are exact amplitude ties, in which
/// case only their joint subspace is identified and per-spike alignments are
/// pooled.
fn same_amplitude(ds: &SyntheticDataset, i: usize, j: usize) -> bool {
    ds.truth_amplitudes[i] == ds.truth_amplitudes[j]
}

/// Squared alignment of estimated component `i` with the truth, split into
/// `(matched, leaked)`: the overlap with true components whose amplitude
/// exactly equals amplitude `i` (pooled across exact ties), and the overlap
/// with all remaining true components.
pub fn empirical_component_recovery(
    fit: &WpcaFit,
    ds: &SyntheticDataset,
    i: usize,
) -> Result<(f64, f64)> {
    check_component_index(fit, ds, i)?;
    let d = ds.dim;
    let mut matched = 0.0;
    let mut leaked = 0.0;
    for j in 0..ds.truth_amplitudes.len() {
        let mut dot = 0.0;
        for r in 0..d {
            dot += fit.components[(r, i)] * ds.truth_components[(r, j)];
        }
        if same_amplitude(ds, i, j) {
            matched += dot * dot;
        } else {
            leaked += dot * dot;
        }
    }
    Ok((matched, leaked))
}

fn weighted_dot(s: Option<&[f64]>, a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64, n: usize) -> f64 {
    let mut sum = 0.0;
    for t in 0..n {
        let w = s.map_or(1.0, |s| s[t]);
        if w != 0.0 {
            sum += w * a(t) * b(t);
        }
    }
    sum
}

fn score_recovery_impl(
    fit: &WpcaFit,
    ds: &SyntheticDataset,
    i: usize,
    weighted: bool,
) -> Result<(f64, f64)> {
    check_component_index(fit, ds, i)?;
    let n = ds.samples;
    let s = weighted.then(|| fit.weights.values());
    let zh = |t: usize| fit.scores[(t, i)];
    let norm2_zh = weighted_dot(s, zh, zh, n);
    if norm2_zh == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut matched = 0.0;
    let mut leaked = 0.0;
    for j in 0..ds.truth_amplitudes.len() {
        let z = |t: usize| ds.truth_scores[(t, j)];
        let norm2_z = weighted_dot(s, z, z, n);
        if norm2_z == 0.0 {
            continue;
        }
        let dot = weighted_dot(s, zh, z, n);
        let r = dot * dot / (norm2_zh * norm2_z);
        if same_amplitude(ds, i, j) {
            matched += r;
        } else {
            leaked += r;
        }
    }
    Ok((matched, leaked))
}

/// Squared cosine of estimated score `i` against the truth scores under the
/// weighted inner product `<a, b> = sum_t s_t a_t b_t`, split into
/// `(matched, leaked)` as in [`empirical_component_recovery`].
pub fn empirical_score_recovery(
    fit: &WpcaFit,
    ds: &SyntheticDataset,
    i: usize,
) -> Result<(f64, f64)> {
    score_recovery_impl(fit, ds, i, true)
}

/// Squared cosine of estimated score `i` against the truth scores under the
/// plain (unweighted) inner product.
pub fn empirical_score_recovery_unweighted(
    fit: &WpcaFit,
    ds: &SyntheticDataset,
    i: usize,
) -> Result<(f64, f64)> {
    score_recovery_impl(fit, ds, i, false)
}

/// Signed product of the component alignment and the weighted score cosine
/// for spike `i`, summed over exact amplitude ties. Both factors flip sign
/// together under the estimator's sign ambiguity, so the product is
/// sign-convention free.
pub fn empirical_cross_product(fit: &WpcaFit, ds: &SyntheticDataset, i: usize) -> Result<f64> {
    check_component_index(fit, ds, i)?;
    let (d, n) = (ds.dim, ds.samples);
    let s = Some(fit.weights.values());
    let zh = |t: usize| fit.scores[(t, i)];
    let norm2_zh = weighted_dot(s, zh, zh, n);
    if norm2_zh == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for j in 0..ds.truth_amplitudes.len() {
        if !same_amplitude(ds, i, j) {
            continue;
        }
        let z = |t: usize| ds.truth_scores[(t, j)];
        let norm2_z = weighted_dot(s, z, z, n);
        if norm2_z == 0.0 {
            continue;
        }
        let score_cos = weighted_dot(s, zh, z, n) / (norm2_zh * norm2_z).sqrt();
        let mut comp_dot = 0.0;
        for r in 0..d {
            comp_dot += fit.components[(r, i)] * ds.truth_components[(r, j)];
        }
        total += comp_dot * score_cos;
    }
    Ok(total)
}

/// Weighted mean squared error of the reconstruction against the true
/// signal: `||(X_hat - U diag(theta) Z^T) W||_F^2 / n`.
pub fn empirical_weighted_mse(fit: &WpcaFit, ds: &SyntheticDataset) -> Result<f64> {
    check_shapes(fit, ds.dim, ds.samples)?;
    let (d, n) = (ds.dim, ds.samples);
    let xhat = fit.reconstruct();

    // True signal U diag(theta) Z^T.
    let mut u_scaled = ds.truth_components.clone();
    for (j, &a) in ds.truth_amplitudes.iter().enumerate() {
        let theta = a.sqrt();
        for r in 0..d {
            u_scaled[(r, j)] *= theta;
        }
    }
    let mut signal = Mat::zeros(d, n);
    faer::linalg::matmul::matmul(
        signal.as_mut(),
        Accum::Replace,
        u_scaled.as_ref(),
        ds.truth_scores.transpose(),
        1.0,
        Par::Seq,
    );

    let s = fit.weights.values();
    let mut total = 0.0;
    for t in 0..n {
        if s[t] == 0.0 {
            continue;
        }
        let mut col = 0.0;
        for r in 0..d {
            let e = xhat[(r, t)] - signal[(r, t)];
            col += e * e;
        }
        total += s[t] * col;
    }
    Ok(total / n as f64)
}
