//! Weight schemes over noise groups and the optimally weighted recovery.
//!
//! A weight scheme assigns one weight value `w_l^2` per noise group; samples
//! inherit the value of their group. Standard families:
//!
//! * uniform — `w_l^2 = 1` (plain PCA),
//! * binary — keep a subset of groups, drop the rest,
//! * inverse variance — `w_l^2 = 1 / sigma_l^2` (whitening),
//! * square inverse variance — `w_l^2 = 1 / sigma_l^4`,
//! * optimal — `w_l^2 = 1 / (sigma_l^2 (theta^2 + sigma_l^2))`, which
//!   maximizes the limiting component recovery of the spike with strength
//!   `theta^2` over all weight choices.
//!
//! Weight values matter only up to a global scale, so schemes can carry a
//! normalization; predictions are invariant to it while the weighted
//! eigenvalues scale with it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SampleWeights;
use crate::model::NoiseProfile;
use crate::roots;

/// The standard weight families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    Binary,
    InverseVariance,
    SquareInverseVariance,
    Optimal,
    Custom,
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WeightKind::Uniform => "uniform",
            WeightKind::Binary => "binary",
            WeightKind::InverseVariance => "inverse_variance",
            WeightKind::SquareInverseVariance => "square_inverse_variance",
            WeightKind::Optimal => "optimal",
            WeightKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Global rescaling applied to a scheme's weight values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Keep the family's natural values.
    #[default]
    None,
    /// Scale so the proportion-weighted mean value `sum_l p_l w_l^2` is 1.
    UnitAverage,
    /// Scale so the largest value is 1.
    UnitMax,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Normalization::None => "none",
            Normalization::UnitAverage => "unit_average",
            Normalization::UnitMax => "unit_max",
        };
        f.write_str(s)
    }
}

/// Per-group weight values `w_l^2`, tagged with the family they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    kind: WeightKind,
    per_group: Vec<f64>,
    normalization: Normalization,
}

impl WeightScheme {
    pub fn uniform(noise: &NoiseProfile, normalization: Normalization) -> Result<Self> {
        Self::finish(WeightKind::Uniform, vec![1.0; noise.len()], noise, normalization)
    }

    /// Keep the masked groups (value 1), drop the rest (value 0). At least
    /// one represented group must be kept.
    pub fn binary(
        noise: &NoiseProfile,
        keep: &[bool],
        normalization: Normalization,
    ) -> Result<Self> {
        if keep.len() != noise.len() {
            return Err(Error::invalid(
                "weights.keep",
                format!("mask has {} entries for {} groups", keep.len(), noise.len()),
            ));
        }
        let values: Vec<f64> = keep.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::finish(WeightKind::Binary, values, noise, normalization)
    }

    pub fn inverse_variance(noise: &NoiseProfile, normalization: Normalization) -> Result<Self> {
        let values = per_group_from_variance(noise, "inverse-variance", |s2| 1.0 / s2)?;
        Self::finish(WeightKind::InverseVariance, values, noise, normalization)
    }

    pub fn square_inverse_variance(
        noise: &NoiseProfile,
        normalization: Normalization,
    ) -> Result<Self> {
        let values = per_group_from_variance(noise, "square-inverse-variance", |s2| 1.0 / (s2 * s2))?;
        Self::finish(WeightKind::SquareInverseVariance, values, noise, normalization)
    }

    /// The recovery-optimal weights for a spike of strength `theta2`.
    pub fn optimal(
        noise: &NoiseProfile,
        theta2: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        if !theta2.is_finite() || theta2 <= 0.0 {
            return Err(Error::invalid(
                "theta2",
                format!("spike strength {theta2} must be finite and > 0"),
            ));
        }
        let values =
            per_group_from_variance(noise, "optimal", |s2| 1.0 / (s2 * (theta2 + s2)))?;
        Self::finish(WeightKind::Optimal, values, noise, normalization)
    }

    /// Arbitrary per-group values (finite, nonnegative, at least one
    /// represented group weighted).
    pub fn custom(
        noise: &NoiseProfile,
        values: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        Self::finish(WeightKind::Custom, values, noise, normalization)
    }

    fn finish(
        kind: WeightKind,
        mut values: Vec<f64>,
        noise: &NoiseProfile,
        normalization: Normalization,
    ) -> Result<Self> {
        if values.len() != noise.len() {
            return Err(Error::invalid(
                "weights.values",
                format!("{} values for {} groups", values.len(), noise.len()),
            ));
        }
        for (l, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "weights.values",
                    format!("group {l}: weight value {v} must be finite and >= 0"),
                ));
            }
        }
        let represented_mass: f64 = noise
            .groups()
            .iter()
            .zip(&values)
            .map(|(g, &v)| g.proportion * v)
            .sum();
        if represented_mass <= 0.0 {
            return Err(Error::invalid(
                "weights.values",
                "every represented group has zero weight",
            ));
        }
        let scale = match normalization {
            Normalization::None => 1.0,
            Normalization::UnitAverage => 1.0 / represented_mass,
            Normalization::UnitMax => {
                1.0 / values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        };
        if scale != 1.0 {
            for v in &mut values {
                *v *= scale;
            }
        }
        Ok(Self {
            kind,
            per_group: values,
            normalization,
        })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Per-group values `w_l^2` after normalization.
    pub fn values(&self) -> &[f64] {
        &self.per_group
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Expand to per-sample weight values through group labels.
    pub fn sample_weights(&self, labels: &[usize]) -> Result<SampleWeights> {
        let l = self.per_group.len();
        let values: Vec<f64> = labels
            .iter()
            .map(|&g| {
                if g < l {
                    Ok(self.per_group[g])
                } else {
                    Err(Error::invalid(
                        "labels",
                        format!("group label {g} out of range for {l} groups"),
                    ))
                }
            })
            .collect::<Result<_>>()?;
        SampleWeights::new(values)
    }
}

fn per_group_from_variance(
    noise: &NoiseProfile,
    family: &str,
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    noise
        .groups()
        .iter()
        .enumerate()
        .map(|(l, g)| {
            if g.proportion == 0.0 {
                // Unrepresented groups get weight zero no matter their
                // variance; they never touch a sample.
                Ok(0.0)
            } else if g.variance <= 0.0 {
                Err(Error::invalid(
                    "noise.variances",
                    format!("group {l}: {family} weights need positive variance"),
                ))
            } else {
                Ok(f(g.variance))
            }
        })
        .collect()
}

/// Build a scheme of the given family. `theta2` is consulted only by
/// [`WeightKind::Optimal`]; `keep` only by [`WeightKind::Binary`].
/// [`WeightKind::Custom`] is rejected here — pass explicit values to
/// [`WeightScheme::custom`] instead.
pub fn make_scheme(
    kind: WeightKind,
    noise: &NoiseProfile,
    theta2: Option<f64>,
    keep: Option<&[bool]>,
    normalization: Normalization,
) -> Result<WeightScheme> {
    match kind {
        WeightKind::Uniform => WeightScheme::uniform(noise, normalization),
        WeightKind::Binary => {
            let keep = keep.ok_or_else(|| {
                Error::invalid("weights.keep", "binary weights need a keep mask")
            })?;
            WeightScheme::binary(noise, keep, normalization)
        }
        WeightKind::InverseVariance => WeightScheme::inverse_variance(noise, normalization),
        WeightKind::SquareInverseVariance => {
            WeightScheme::square_inverse_variance(noise, normalization)
        }
        WeightKind::Optimal => {
            let theta2 = theta2.ok_or_else(|| {
                Error::invalid("theta2", "optimal weights need the spike strength")
            })?;
            WeightScheme::optimal(noise, theta2, normalization)
        }
        WeightKind::Custom => Err(Error::invalid(
            "weights.kind",
            "custom weights need explicit per-group values",
        )),
    }
}

/// Limiting component recovery of a spike of strength `theta2` under the
/// optimal weights, computed directly as the largest root of
///
/// ```text
/// f(x) = 1 - c theta^2 sum_l (p_l / sigma_l^2) (1 - x) / (sigma_l^2/theta^2 + x)
/// ```
///
/// on `(-min_l sigma_l^2/theta^2, 1]`, where `f` is strictly increasing with
/// `f(1) = 1`. The root equals the component recovery predicted for the
/// weights of [`WeightScheme::optimal`] when the spike separates from the
/// bulk; at or below the transition the root is nonpositive and callers who
/// want an aligned fraction should clamp it to zero.
pub fn optimal_recovery(aspect: f64, noise: &NoiseProfile, theta2: f64) -> Result<f64> {
    if !aspect.is_finite() || aspect <= 0.0 {
        return Err(Error::invalid(
            "aspect",
            format!("aspect ratio {aspect} must be finite and > 0"),
        ));
    }
    if !theta2.is_finite() || theta2 <= 0.0 {
        return Err(Error::invalid(
            "theta2",
            format!("spike strength {theta2} must be finite and > 0"),
        ));
    }
    let mut terms = Vec::new();
    for (l, g) in noise.groups().iter().enumerate() {
        if g.proportion == 0.0 {
            continue;
        }
        if g.variance <= 0.0 {
            return Err(Error::invalid(
                "noise.variances",
                format!("group {l}: optimal recovery needs positive variance"),
            ));
        }
        terms.push((g.proportion / g.variance, g.variance / theta2));
    }
    let pole = -terms
        .iter()
        .map(|&(_, ratio)| ratio)
        .fold(f64::INFINITY, f64::min);
    let f = |x: f64| {
        let mut sum = 0.0;
        for &(coef, ratio) in &terms {
            sum += coef * (1.0 - x) / (ratio + x);
        }
        1.0 - aspect * theta2 * sum
    };
    let df = |x: f64| {
        let mut sum = 0.0;
        for &(coef, ratio) in &terms {
            let den = ratio + x;
            sum += coef * (ratio + 1.0) / (den * den);
        }
        aspect * theta2 * sum
    };
    roots::largest_root(f, Some(df), pole, Some(1.0), 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::AsymptoticConfig;

    fn clean_noisy() -> NoiseProfile {
        // Two groups, one clean and one noisy, strongly undersampled signal.
        NoiseProfile::new(vec![(0.1, 1.0), (0.9, 5.75)]).unwrap()
    }

    #[test]
    fn family_values_match_their_formulas() {
        let noise = NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)]).unwrap();
        let inv = WeightScheme::inverse_variance(&noise, Normalization::None).unwrap();
        assert_eq!(inv.values(), &[1.0, 0.25]);
        let sq = WeightScheme::square_inverse_variance(&noise, Normalization::None).unwrap();
        assert_eq!(sq.values(), &[1.0, 0.0625]);
        let uni = WeightScheme::uniform(&noise, Normalization::None).unwrap();
        assert_eq!(uni.values(), &[1.0, 1.0]);

        let opt = WeightScheme::optimal(&clean_noisy(), 1.0, Normalization::None).unwrap();
        assert!((opt.values()[0] - 0.5).abs() < 1e-15);
        assert!((opt.values()[1] - 16.0 / 621.0).abs() < 1e-15);
    }

    #[test]
    fn normalizations_rescale_as_advertised() {
        let noise = NoiseProfile::new(vec![(0.2, 1.0), (0.8, 4.0)]).unwrap();
        let avg = WeightScheme::inverse_variance(&noise, Normalization::UnitAverage).unwrap();
        let mean: f64 = noise
            .groups()
            .iter()
            .zip(avg.values())
            .map(|(g, &w)| g.proportion * w)
            .sum();
        assert!((mean - 1.0).abs() < 1e-15);
        let max = WeightScheme::inverse_variance(&noise, Normalization::UnitMax).unwrap();
        assert!((max.values().iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-15);
        // Ratios are preserved.
        assert!((max.values()[1] / max.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn binary_masks_validate() {
        let noise = NoiseProfile::new(vec![(0.5, 1.0), (0.5, 4.0)]).unwrap();
        let keep = WeightScheme::binary(&noise, &[true, false], Normalization::None).unwrap();
        assert_eq!(keep.values(), &[1.0, 0.0]);
        assert!(WeightScheme::binary(&noise, &[false, false], Normalization::None).is_err());
        assert!(WeightScheme::binary(&noise, &[true], Normalization::None).is_err());
        // Keeping only an unrepresented group is also rejected.
        let lopsided = NoiseProfile::new(vec![(1.0, 1.0), (0.0, 4.0)]).unwrap();
        assert!(WeightScheme::binary(&lopsided, &[false, true], Normalization::None).is_err());
    }

    #[test]
    fn sample_weights_follow_labels() {
        let noise = NoiseProfile::new(vec![(0.5, 1.0), (0.5, 4.0)]).unwrap();
        let scheme = WeightScheme::inverse_variance(&noise, Normalization::None).unwrap();
        let sw = scheme.sample_weights(&[0, 1, 1, 0]).unwrap();
        assert_eq!(sw.values(), &[1.0, 0.25, 0.25, 1.0]);
        assert!(scheme.sample_weights(&[0, 2]).is_err());
    }

    #[test]
    fn make_scheme_dispatches_and_guards() {
        let noise = clean_noisy();
        assert_eq!(
            make_scheme(WeightKind::Uniform, &noise, None, None, Normalization::None)
                .unwrap()
                .values(),
            &[1.0, 1.0]
        );
        assert!(make_scheme(WeightKind::Optimal, &noise, None, None, Normalization::None).is_err());
        assert!(make_scheme(WeightKind::Binary, &noise, None, None, Normalization::None).is_err());
        assert!(make_scheme(WeightKind::Custom, &noise, None, None, Normalization::None).is_err());
        let opt = make_scheme(
            WeightKind::Optimal,
            &noise,
            Some(1.0),
            None,
            Normalization::None,
        )
        .unwrap();
        assert_eq!(opt.kind(), WeightKind::Optimal);
    }

    #[test]
    fn recovery_ladder_under_heavy_undersampling() {
        // c = 150, theta^2 = 1, groups (0.1, 1.0) and (0.9, 5.75): keeping
        // only the noisy majority, whitening, keeping only the clean
        // minority, and optimal weighting form a strictly increasing ladder.
        let noise = clean_noisy();
        let c = 150.0;
        let r = |values: Vec<f64>| {
            AsymptoticConfig::new(c, noise.clone(), values)
                .unwrap()
                .predict(1.0)
                .unwrap()
                .component
        };
        let noisy_only = r(vec![0.0, 1.0]);
        let clean_only = r(vec![1.0, 0.0]);
        let inv = r(WeightScheme::inverse_variance(&noise, Normalization::None)
            .unwrap()
            .values()
            .to_vec());
        let opt = r(WeightScheme::optimal(&noise, 1.0, Normalization::None)
            .unwrap()
            .values()
            .to_vec());
        assert!((noisy_only - 0.724_245_115_452_930_7).abs() < 1e-10);
        assert!((clean_only - 0.875).abs() < 1e-10);
        assert!((inv - 0.875_923_990_144_105).abs() < 1e-10);
        assert!((opt - 0.912_043_025_524_119_9).abs() < 1e-10);
        assert!(noisy_only < clean_only && clean_only < inv && inv < opt);
    }

    #[test]
    fn optimal_recovery_root_matches_prediction_machinery() {
        let noise = clean_noisy();
        for &(c, t2) in &[(150.0, 1.0), (2.0, 4.0), (0.3, 9.0)] {
            let direct = optimal_recovery(c, &noise, t2).unwrap();
            let scheme = WeightScheme::optimal(&noise, t2, Normalization::None).unwrap();
            let pred = AsymptoticConfig::new(c, noise.clone(), scheme.values().to_vec())
                .unwrap()
                .predict(t2)
                .unwrap();
            assert!(pred.above_transition, "c={c}, theta2={t2} should separate");
            assert!(
                (direct - pred.component).abs() < 1e-9,
                "c={c}, theta2={t2}: {direct} vs {}",
                pred.component
            );
        }
        // Balanced groups lift the ceiling: p = (0.5, 0.5).
        let balanced = NoiseProfile::new(vec![(0.5, 1.0), (0.5, 5.75)]).unwrap();
        let r = optimal_recovery(150.0, &balanced, 1.0).unwrap();
        assert!((r - 0.974_946_931_297_477_3).abs() < 1e-10);
    }

    #[test]
    fn optimal_recovery_is_nonpositive_at_or_below_transition() {
        // Single group, c = 1, sigma^2 = 1: transition at theta^2 = 1.
        let noise = NoiseProfile::new(vec![(1.0, 1.0)]).unwrap();
        let below = optimal_recovery(1.0, &noise, 0.5).unwrap();
        assert!(below <= 0.0, "got {below}");
        let above = optimal_recovery(1.0, &noise, 2.0).unwrap();
        assert!(above > 0.0 && above < 1.0);
    }

    #[test]
    fn zero_variance_groups_are_rejected_for_variance_based_families() {
        let noise = NoiseProfile::new(vec![(0.5, 0.0), (0.5, 1.0)]).unwrap();
        assert!(WeightScheme::inverse_variance(&noise, Normalization::None).is_err());
        assert!(WeightScheme::optimal(&noise, 1.0, Normalization::None).is_err());
        assert!(optimal_recovery(1.0, &noise, 1.0).is_err());
        // ... but unrepresented zero-variance groups are fine.
        let ok = NoiseProfile::new(vec![(1.0, 2.0), (0.0, 0.0)]).unwrap();
        let scheme = WeightScheme::inverse_variance(&ok, Normalization::None).unwrap();
        assert_eq!(scheme.values(), &[0.5, 0.0]);
        assert!(optimal_recovery(1.0, &ok, 4.0).is_ok());
    }
}
