//! Asymptotic recovery predictions for weighted PCA of the spiked model.
//!
//! In the proportional-growth limit (`d/n -> c`) the top weighted sample
//! eigenvalues and the alignment of the estimated components and scores
//! with the truth converge to deterministic values. Those limits are
//! expressed through three rational functions of a spectral variable `x`:
//!
//! ```text
//! A(x) = 1 - c * sum_l p_l w_l^4 sigma_l^4 / (x - w_l^2 sigma_l^2)^2
//! B(x) = 1 - c theta^2 * sum_l p_l w_l^2 / (x - w_l^2 sigma_l^2)
//! C(x) = 1 + c * sum_l p_l w_l^2 sigma_l^2 / (x - w_l^2 sigma_l^2)
//! ```
//!
//! with `p_l` the group proportions, `sigma_l^2` the group noise variances
//! and `w_l^2` the per-group weight values. Groups with `p_l = 0` or
//! `w_l^2 = 0` contribute nothing. All three functions are analyzed to the
//! right of the largest pole `max_l w_l^2 sigma_l^2`, where `A` and `B`
//! increase from `-inf` to `1`.
//!
//! Writing `alpha` and `beta` for the largest roots of `A` and `B`, a spike
//! of strength `theta^2` is recovered iff `A(beta) > 0` (equivalently
//! `beta > alpha`); the recovered fractions follow from `A`, `B'`, `C`
//! evaluated at `beta`. At or below the transition the aligned fractions are
//! reported as exactly zero (conjectured-truncation behavior, on by
//! default).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NoiseProfile, SpikeModel};
use crate::roots;

/// Default relative x-tolerance for root finding.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// A weighted-PCA limit configuration: aspect ratio, noise profile and
/// per-group weight values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    aspect: f64,
    noise: NoiseProfile,
    weights: Vec<f64>,
    root_tol: f64,
}

/// Limiting behavior of one spike under a weight choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPrediction {
    /// Limit of the squared weighted singular value `theta_hat_i^2`.
    pub amplitude: f64,
    /// Limit of the squared component alignment `|<u_hat, u>|^2`.
    pub component: f64,
    /// Limit of the squared weighted score alignment.
    pub score: f64,
    /// Limit of the product of component and weighted score alignments.
    pub cross: f64,
    /// Largest root of `A`: the weighted bulk edge location.
    pub alpha: f64,
    /// Largest root of `B` for this spike.
    pub beta: f64,
    /// Whether the spike separates from the bulk (`A(beta) > 0`).
    pub above_transition: bool,
    /// Whether the aligned fractions were truncated to zero because the
    /// spike is at or below the transition.
    pub truncated: bool,
}

/// Aggregate limits across all spikes of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePrediction {
    /// Sum of per-spike component recoveries (limiting subspace overlap).
    pub subspace_recovery: f64,
    /// Sum of per-spike weighted score recoveries.
    pub score_recovery: f64,
    /// Limiting weighted mean squared reconstruction error.
    pub weighted_mse: f64,
    /// True when any spike sat at or below the transition.
    pub truncated: bool,
    /// The per-spike predictions the aggregates were formed from.
    pub per_component: Vec<RecoveryPrediction>,
}

impl AsymptoticConfig {
    /// Build a configuration; `weights` are the per-group values `w_l^2`.
    pub fn new(aspect: f64, noise: NoiseProfile, weights: Vec<f64>) -> Result<Self> {
        if !aspect.is_finite() || aspect <= 0.0 {
            return Err(Error::invalid(
                "aspect",
                format!("aspect ratio {aspect} must be finite and > 0"),
            ));
        }
        if weights.len() != noise.len() {
            return Err(Error::invalid(
                "weights",
                format!(
                    "got {} weight values for {} noise groups",
                    weights.len(),
                    noise.len()
                ),
            ));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(
                    "weights",
                    format!("group {i}: weight value {w} must be finite and >= 0"),
                ));
            }
        }
        let any_active_noisy = noise
            .groups()
            .iter()
            .zip(&weights)
            .any(|(g, &w)| g.proportion > 0.0 && w > 0.0 && g.variance > 0.0);
        if !any_active_noisy {
            return Err(Error::invalid(
                "weights",
                "no represented group carries both positive weight and positive \
                 noise variance; the spectral limit is degenerate",
            ));
        }
        Ok(Self {
            aspect,
            noise,
            weights,
            root_tol: DEFAULT_ROOT_TOL,
        })
    }

    /// Override the relative root-finding tolerance (default `1e-12`).
    pub fn with_root_tol(mut self, tol: f64) -> Result<Self> {
        if !tol.is_finite() || tol <= 0.0 || tol > 1e-2 {
            return Err(Error::invalid(
                "root_tol",
                format!("tolerance {tol} must be in (0, 1e-2]"),
            ));
        }
        self.root_tol = tol;
        Ok(self)
    }

    pub fn aspect(&self) -> f64 {
        self.aspect
    }

    pub fn noise(&self) -> &NoiseProfile {
        &self.noise
    }

    /// Per-group weight values `w_l^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Active terms: groups with `p_l > 0` and `w_l^2 > 0`, yielding
    /// `(p_l, sigma_l^2, w_l^2)`.
    fn active(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.noise
            .groups()
            .iter()
            .zip(&self.weights)
            .filter(|(g, &w)| g.proportion > 0.0 && w > 0.0)
            .map(|(g, &w)| (g.proportion, g.variance, w))
    }

    /// Largest pole `max_l w_l^2 sigma_l^2` over active groups.
    pub fn largest_pole(&self) -> f64 {
        self.active()
            .map(|(_, s2, w)| w * s2)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Weighted mean weight value `w_bar^2 = sum_l p_l w_l^2`.
    pub fn mean_weight(&self) -> f64 {
        self.noise
            .groups()
            .iter()
            .zip(&self.weights)
            .map(|(g, &w)| g.proportion * w)
            .sum()
    }

    fn check_not_pole(&self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::invalid("x", format!("abscissa {x} must be finite")));
        }
        for (_, s2, w) in self.active() {
            if x == w * s2 {
                return Err(Error::AtPole(x));
            }
        }
        Ok(())
    }

    fn a_raw(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        for (p, s2, w) in self.active() {
            let num = w * s2;
            let den = x - num;
            sum += p * num * num / (den * den);
        }
        1.0 - self.aspect * sum
    }

    /// Derivative of `A`; positive right of the largest pole.
    fn a_raw_prime(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        for (p, s2, w) in self.active() {
            let num = w * s2;
            let den = x - num;
            sum += p * num * num / (den * den * den);
        }
        2.0 * self.aspect * sum
    }

    fn b_raw(&self, x: f64, theta2: f64) -> f64 {
        let mut sum = 0.0;
        for (p, s2, w) in self.active() {
            sum += p * w / (x - w * s2);
        }
        1.0 - self.aspect * theta2 * sum
    }

    /// Derivative of `B`; positive right of the largest pole. This is also
    /// the `B'` factor in the recovery formulas.
    fn b_raw_prime(&self, x: f64, theta2: f64) -> f64 {
        let mut sum = 0.0;
        for (p, s2, w) in self.active() {
            let den = x - w * s2;
            sum += p * w / (den * den);
        }
        self.aspect * theta2 * sum
    }

    fn c_raw(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        for (p, s2, w) in self.active() {
            let num = w * s2;
            sum += p * num / (x - num);
        }
        1.0 + self.aspect * sum
    }

    /// Evaluate `A(x)`. Errors when `x` sits exactly on a pole.
    pub fn eval_a(&self, x: f64) -> Result<f64> {
        self.check_not_pole(x)?;
        Ok(self.a_raw(x))
    }

    /// Evaluate `B(x)` for a spike of strength `theta2`.
    pub fn eval_b(&self, x: f64, theta2: f64) -> Result<f64> {
        check_theta2(theta2)?;
        self.check_not_pole(x)?;
        Ok(self.b_raw(x, theta2))
    }

    /// Evaluate `C(x)`.
    pub fn eval_c(&self, x: f64) -> Result<f64> {
        self.check_not_pole(x)?;
        Ok(self.c_raw(x))
    }

    /// Largest root `alpha` of `A`: the squared weighted bulk edge, up to
    /// the `C` factor.
    pub fn largest_root_a(&self) -> Result<f64> {
        let pole = self.largest_pole();
        roots::largest_root(
            |x| self.a_raw(x),
            Some(|x| self.a_raw_prime(x)),
            pole,
            None,
            self.root_tol,
        )
    }

    /// Largest root `beta` of `B` for a spike of strength `theta2`.
    pub fn largest_root_b(&self, theta2: f64) -> Result<f64> {
        check_theta2(theta2)?;
        let pole = self.largest_pole();
        roots::largest_root(
            |x| self.b_raw(x, theta2),
            Some(|x| self.b_raw_prime(x, theta2)),
            pole,
            None,
            self.root_tol,
        )
    }

    /// Predict the limiting behavior of one spike, truncating the aligned
    /// fractions to zero at or below the transition.
    pub fn predict(&self, theta2: f64) -> Result<RecoveryPrediction> {
        self.predict_impl(theta2, true)
    }

    /// Like [`AsymptoticConfig::predict`] but reporting the raw rational
    /// values below the transition instead of truncating them (they are
    /// negative there and carry no alignment meaning; useful for inspecting
    /// the transition itself).
    pub fn predict_untruncated(&self, theta2: f64) -> Result<RecoveryPrediction> {
        self.predict_impl(theta2, false)
    }

    fn predict_impl(&self, theta2: f64, truncate: bool) -> Result<RecoveryPrediction> {
        check_theta2(theta2)?;
        let alpha = self.largest_root_a()?;
        let beta = self.largest_root_b(theta2)?;
        let a_beta = self.a_raw(beta);
        let above = a_beta > 0.0;

        // The amplitude limit always exists; below the transition the
        // eigenvalue sticks to the bulk edge described by alpha.
        let m = alpha.max(beta);
        let amplitude = m * self.c_raw(m) / self.aspect;

        let (component, score, cross, truncated) = if above || !truncate {
            let b_prime = self.b_raw_prime(beta, theta2);
            let c_beta = self.c_raw(beta);
            let component = a_beta / (beta * b_prime);
            let score = a_beta / (self.aspect * theta2 * c_beta * b_prime);
            // Equals sqrt(component * score) when above the transition, and
            // keeps the sign of A(beta) below it.
            let cross = a_beta / (b_prime * (self.aspect * theta2 * beta * c_beta).sqrt());
            (component, score, cross, false)
        } else {
            (0.0, 0.0, 0.0, true)
        };

        Ok(RecoveryPrediction {
            amplitude,
            component,
            score,
            cross,
            alpha,
            beta,
            above_transition: above,
            truncated,
        })
    }

    /// Aggregate predictions across all spikes of `spike`: subspace and
    /// score recoveries are sums of the per-spike limits; the weighted MSE
    /// limit additionally needs the mean weight value. Spikes at or below
    /// the transition contribute their truncated values (and the bulk-edge
    /// amplitude to the MSE).
    pub fn aggregate_prediction(&self, spike: &SpikeModel) -> Result<AggregatePrediction> {
        let per_component: Vec<RecoveryPrediction> = spike
            .amplitudes
            .iter()
            .map(|&t2| self.predict(t2))
            .collect::<Result<_>>()?;
        let subspace_recovery = per_component.iter().map(|p| p.component).sum();
        let score_recovery = per_component.iter().map(|p| p.score).sum();
        let w_bar2 = self.mean_weight();
        let mut mse = 0.0;
        for (pred, &theta2) in per_component.iter().zip(&spike.amplitudes) {
            // c w_bar^2 theta^2 + max(alpha,beta) C(max) - 2 A(beta)/B'(beta),
            // the cross term dropping out below the transition.
            let mut term = self.aspect * w_bar2 * theta2 + self.aspect * pred.amplitude;
            if pred.above_transition {
                let a_beta = self.a_raw(pred.beta);
                let b_prime = self.b_raw_prime(pred.beta, theta2);
                term -= 2.0 * a_beta / b_prime;
            }
            mse += term;
        }
        mse /= self.aspect;
        Ok(AggregatePrediction {
            subspace_recovery,
            score_recovery,
            weighted_mse: mse,
            truncated: per_component.iter().any(|p| p.truncated),
            per_component,
        })
    }
}

fn check_theta2(theta2: f64) -> Result<()> {
    if !theta2.is_finite() || theta2 <= 0.0 {
        return Err(Error::invalid(
            "theta2",
            format!("spike strength {theta2} must be finite and > 0"),
        ));
    }
    Ok(())
}

/// Harmonic-mean noise variance `sigma_bar^2 = 1 / sum_l (p_l / sigma_l^2)`
/// over represented groups.
pub fn harmonic_noise_variance(noise: &NoiseProfile) -> Result<f64> {
    let mut sum = 0.0;
    for (i, g) in noise.groups().iter().enumerate() {
        if g.proportion > 0.0 {
            if g.variance <= 0.0 {
                return Err(Error::invalid(
                    "noise.variances",
                    format!("group {i}: inverse-variance forms need positive variance"),
                ));
            }
            sum += g.proportion / g.variance;
        }
    }
    Ok(1.0 / sum)
}

/// Closed-form predictions for inverse-variance weights
/// (`w_l^2 = sigma_bar^2 / sigma_l^2`), which collapse the general rational
/// functions to the classic single-pole forms:
///
/// ```text
/// alpha = sigma_bar^2 (1 + sqrt(c))        beta = sigma_bar^2 + c theta^2
/// ```
///
/// and, above the transition `c theta^4 > sigma_bar^4`,
///
/// ```text
/// amplitude = theta^2 (1 + sigma_bar^2/(c theta^2)) (1 + sigma_bar^2/theta^2)
/// component = (c - sigma_bar^4/theta^4) / (c + sigma_bar^2/theta^2)
/// score     = (c - sigma_bar^4/theta^4) / (c (1 + sigma_bar^2/theta^2))
/// ```
pub fn predict_inverse_variance(
    aspect: f64,
    noise: &NoiseProfile,
    theta2: f64,
) -> Result<RecoveryPrediction> {
    if !aspect.is_finite() || aspect <= 0.0 {
        return Err(Error::invalid(
            "aspect",
            format!("aspect ratio {aspect} must be finite and > 0"),
        ));
    }
    check_theta2(theta2)?;
    let sb2 = harmonic_noise_variance(noise)?;
    let alpha = sb2 * (1.0 + aspect.sqrt());
    let beta = sb2 + aspect * theta2;
    let above = aspect * theta2 * theta2 > sb2 * sb2;
    if above {
        let amplitude = theta2 * (1.0 + sb2 / (aspect * theta2)) * (1.0 + sb2 / theta2);
        let num = aspect - sb2 * sb2 / (theta2 * theta2);
        let component = num / (aspect + sb2 / theta2);
        let score = num / (aspect * (1.0 + sb2 / theta2));
        Ok(RecoveryPrediction {
            amplitude,
            component,
            score,
            cross: (component * score).sqrt(),
            alpha,
            beta,
            above_transition: true,
            truncated: false,
        })
    } else {
        let r = 1.0 / aspect.sqrt();
        Ok(RecoveryPrediction {
            amplitude: sb2 * (1.0 + r) * (1.0 + r),
            component: 0.0,
            score: 0.0,
            cross: 0.0,
            alpha,
            beta,
            above_transition: false,
            truncated: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_group(aspect: f64) -> AsymptoticConfig {
        let noise = NoiseProfile::new(vec![(1.0, 1.0)]).unwrap();
        AsymptoticConfig::new(aspect, noise, vec![1.0]).unwrap()
    }

    #[test]
    fn closed_form_roots_single_group() {
        // With one unit-variance unit-weight group: A root at 1 + sqrt(c),
        // B root at 1 + c theta^2.
        let cfg = single_group(4.0);
        let alpha = cfg.largest_root_a().unwrap();
        assert!((alpha - 3.0).abs() < 1e-12, "alpha = {alpha}");
        let beta = cfg.largest_root_b(1.0).unwrap();
        assert!((beta - 5.0).abs() < 1e-12, "beta = {beta}");
        assert!(cfg.eval_a(3.0).unwrap().abs() < 1e-12);
        assert!(cfg.eval_b(5.0, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn recovery_fractions_single_group() {
        // c=4, theta^2=4: amplitude 85/16, component 63/68, score 63/80.
        let pred = single_group(4.0).predict(4.0).unwrap();
        assert!(pred.above_transition);
        assert!((pred.amplitude - 85.0 / 16.0).abs() < 1e-12);
        assert!((pred.component - 63.0 / 68.0).abs() < 1e-12);
        assert!((pred.score - 63.0 / 80.0).abs() < 1e-12);
        assert!((pred.cross - (pred.component * pred.score).sqrt()).abs() < 1e-15);
        assert!((pred.beta - 17.0).abs() < 1e-12);
    }

    #[test]
    fn two_group_roots_match_offline_bisection() {
        // c = 0.1, theta^2 = 16, groups (1/4, 1, 5/2) and (3/4, 5, 1).
        // Reference values from offline high-precision bisection of the
        // defining rational equations.
        let noise = NoiseProfile::new(vec![(0.25, 1.0), (0.75, 5.0)]).unwrap();
        let cfg = AsymptoticConfig::new(0.1, noise, vec![2.5, 1.0]).unwrap();
        let alpha = cfg.largest_root_a().unwrap();
        let beta = cfg.largest_root_b(16.0).unwrap();
        assert!((alpha - 6.376_481_334_615_142).abs() < 1e-10, "alpha = {alpha}");
        assert!((beta - 6.588_533_865_071_371).abs() < 1e-10, "beta = {beta}");
        let pred = cfg.predict(16.0).unwrap();
        assert!((pred.amplitude - 82.445_841_641_740_17).abs() < 1e-8);
        assert!((pred.component - 0.070_201_557_153_468_99).abs() < 1e-12);
        assert!((pred.score - 0.231_012_548_929_826_12).abs() < 1e-12);
    }

    #[test]
    fn below_transition_truncates_to_zero() {
        // c=1, sigma^2=1: transition at theta^2 = 1; theta^2 = 1/2 is below.
        let pred = single_group(1.0).predict(0.5).unwrap();
        assert!(!pred.above_transition);
        assert!(pred.truncated);
        assert_eq!(pred.component, 0.0);
        assert_eq!(pred.score, 0.0);
        assert_eq!(pred.cross, 0.0);
        assert!((pred.alpha - 2.0).abs() < 1e-12);
        assert!((pred.beta - 1.5).abs() < 1e-12);
        // The amplitude sticks to the bulk edge alpha*C(alpha)/c = 4.
        assert!((pred.amplitude - 4.0).abs() < 1e-11);
        // Untruncated values are negative and flagged as such.
        let raw = single_group(1.0).predict_untruncated(0.5).unwrap();
        assert!(!raw.above_transition && !raw.truncated);
        assert!(raw.component < 0.0 && raw.score < 0.0 && raw.cross < 0.0);
    }

    #[test]
    fn boundary_is_treated_as_below() {
        // c=1, sigma^2=1, theta^2=1 sits exactly on the transition.
        let pred = single_group(1.0).predict(1.0).unwrap();
        assert!(!pred.above_transition);
        assert!(pred.truncated);
        assert_eq!(pred.component, 0.0);
    }

    #[test]
    fn pole_evaluation_errors() {
        let cfg = single_group(4.0);
        assert!(matches!(cfg.eval_a(1.0), Err(Error::AtPole(_))));
        assert!(matches!(cfg.eval_b(1.0, 2.0), Err(Error::AtPole(_))));
        assert!(matches!(cfg.eval_c(1.0), Err(Error::AtPole(_))));
        assert!(cfg.eval_a(1.0 + 1e-9).is_ok());
    }

    #[test]
    fn zero_weight_groups_drop_out_entirely() {
        // A zero-weight group must contribute neither terms nor poles, so
        // its variance is irrelevant to every prediction.
        let noisy = NoiseProfile::new(vec![(0.5, 1.0), (0.5, 100.0)]).unwrap();
        let silent = NoiseProfile::new(vec![(0.5, 1.0), (0.5, 0.0)]).unwrap();
        let cfg_a = AsymptoticConfig::new(2.0, noisy, vec![1.0, 0.0]).unwrap();
        let cfg_b = AsymptoticConfig::new(2.0, silent, vec![1.0, 0.0]).unwrap();
        assert_eq!(cfg_a.largest_pole(), 1.0);
        let pa = cfg_a.predict(4.0).unwrap();
        let pb = cfg_b.predict(4.0).unwrap();
        assert!((pa.component - pb.component).abs() < 1e-15);
        assert!((pa.amplitude - pb.amplitude).abs() < 1e-15);
    }

    #[test]
    fn inverse_variance_closed_forms_match_general_path() {
        let noise = NoiseProfile::new(vec![(0.1, 1.0), (0.9, 5.75)]).unwrap();
        let sb2 = harmonic_noise_variance(&noise).unwrap();
        let weights: Vec<f64> = noise.groups().iter().map(|g| sb2 / g.variance).collect();
        let cfg = AsymptoticConfig::new(150.0, noise.clone(), weights).unwrap();
        for &theta2 in &[0.25, 1.0, 9.0] {
            let general = cfg.predict(theta2).unwrap();
            let closed = predict_inverse_variance(150.0, &noise, theta2).unwrap();
            assert_eq!(general.above_transition, closed.above_transition);
            for (a, b) in [
                (general.amplitude, closed.amplitude),
                (general.component, closed.component),
                (general.score, closed.score),
                (general.alpha, closed.alpha),
                (general.beta, closed.beta),
            ] {
                assert!(
                    (a - b).abs() <= 1e-11 * a.abs().max(b.abs()).max(1.0),
                    "{a} vs {b} at theta2 = {theta2}"
                );
            }
        }
    }

    #[test]
    fn weight_scaling_moves_roots_but_not_component_recovery() {
        let noise = NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)]).unwrap();
        let base = AsymptoticConfig::new(0.7, noise.clone(), vec![2.0, 0.5]).unwrap();
        let scaled = AsymptoticConfig::new(0.7, noise, vec![2.0 * 3.0, 0.5 * 3.0]).unwrap();
        let p0 = base.predict(9.0).unwrap();
        let p1 = scaled.predict(9.0).unwrap();
        assert!((p1.beta - 3.0 * p0.beta).abs() < 1e-9 * p0.beta.abs());
        assert!((p1.alpha - 3.0 * p0.alpha).abs() < 1e-9 * p0.alpha.abs());
        assert!((p1.component - p0.component).abs() < 1e-12);
        assert!((p1.amplitude - 3.0 * p0.amplitude).abs() < 1e-9 * p0.amplitude.abs());
        assert!((p1.score - 3.0 * p0.score).abs() < 1e-9 * p0.score.abs());
    }

    #[test]
    fn aggregate_prediction_sums_components_and_prices_mse() {
        // Uniform weights on the two-group profile; exact aggregate MSE from
        // offline exact-rational evaluation of the limit formula.
        let noise = NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)]).unwrap();
        let cfg = AsymptoticConfig::new(1.0, noise, vec![1.0, 1.0]).unwrap();
        let spike = SpikeModel::new(1.0, vec![25.0, 16.0]).unwrap();
        let agg = cfg.aggregate_prediction(&spike).unwrap();
        let p1 = cfg.predict(25.0).unwrap();
        let p2 = cfg.predict(16.0).unwrap();
        assert!((agg.subspace_recovery - (p1.component + p2.component)).abs() < 1e-15);
        assert!((agg.score_recovery - (p1.score + p2.score)).abs() < 1e-15);
        assert!(!agg.truncated);
        assert!(
            (agg.weighted_mse - 18.147_230_552_847_072).abs() < 1e-9,
            "mse = {}",
            agg.weighted_mse
        );
    }

    #[test]
    fn aggregate_mse_below_transition_uses_bulk_edge() {
        // Exact below-transition MSE: c w2bar theta^2 + alpha C(alpha) over c
        // = (1*1*0.5 + 4) / 1 = 4.5 for c=1, sigma^2=1, theta^2=0.5.
        let spike = SpikeModel::new(1.0, vec![0.5]).unwrap();
        let agg = single_group(1.0).aggregate_prediction(&spike).unwrap();
        assert!(agg.truncated);
        assert!((agg.weighted_mse - 4.5).abs() < 1e-10, "mse = {}", agg.weighted_mse);
    }

    #[test]
    fn rejects_degenerate_configurations() {
        let noise = NoiseProfile::new(vec![(0.5, 0.0), (0.5, 1.0)]).unwrap();
        // Only the noiseless group is weighted: degenerate.
        assert!(AsymptoticConfig::new(1.0, noise.clone(), vec![1.0, 0.0]).is_err());
        // Mismatched weight count.
        assert!(AsymptoticConfig::new(1.0, noise.clone(), vec![1.0]).is_err());
        // Negative weight.
        assert!(AsymptoticConfig::new(1.0, noise, vec![1.0, -0.5]).is_err());
    }
}
