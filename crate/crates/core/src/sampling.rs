//! Budget-constrained sample-collection design.
//!
//! Data can be bought from `L` sources, each with its own noise variance
//! `sigma_l^2`, per-sample cost `tau_l` and (optionally) a cap `q_l` on how
//! many samples it can supply. All quantities are expressed per ambient
//! dimension: the decision variables are sampling rates `c_l = n_l / d`
//! subject to
//!
//! ```text
//! c_l >= 0,    sum_l tau_l c_l <= B,    c_l <= q_l  (where capped).
//! ```
//!
//! Collected data is analyzed with optimally weighted PCA, whose limiting
//! component recovery for a spike of strength `theta^2` is the largest root
//! of
//!
//! ```text
//! f(x) = 1 - sum_l c_l (theta^2 / sigma_l^2) (1 - x) / (sigma_l^2/theta^2 + x).
//! ```
//!
//! The root is nondecreasing in every `c_l`, so it is maximized at an
//! extreme point of the feasible polyhedron; the optimizer enumerates the
//! extreme points and evaluates each one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Combinatorial guard: vertex enumeration is exponential in the number of
/// sources.
pub const MAX_SOURCES: usize = 20;

/// Tolerance used to deduplicate enumerated vertices.
const DEDUP_TOL: f64 = 1e-12;

/// One data source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSource {
    /// Noise variance `sigma_l^2 > 0` of samples from this source.
    pub variance: f64,
    /// Cost per sample (per dimension), `tau_l >= 0`.
    pub cost: f64,
    /// Samples available per dimension, `q_l >= 0`; `None` means unlimited
    /// (allowed only for sources with positive cost).
    pub availability: Option<f64>,
}

/// A budget-design instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetProblem {
    sources: Vec<SamplingSource>,
    budget: f64,
    theta2: f64,
}

/// The outcome of the design optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Chosen sampling rates `c_l`.
    pub allocation: Vec<f64>,
    /// Limiting optimally weighted component recovery of the plan.
    pub recovery: f64,
    /// Budget actually spent, `sum_l tau_l c_l`.
    pub spent: f64,
    /// Whether the plan sits at an extreme point of the polyhedron.
    pub vertex: bool,
    /// Whether no sampling rate can be feasibly increased (each source is
    /// blocked by its cap or by an exhausted budget).
    pub saturated: bool,
}

impl BudgetProblem {
    pub fn new(sources: Vec<SamplingSource>, budget: f64, theta2: f64) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("sources", "at least one source required"));
        }
        if sources.len() > MAX_SOURCES {
            return Err(Error::TooManySources {
                got: sources.len(),
                limit: MAX_SOURCES,
            });
        }
        for (l, s) in sources.iter().enumerate() {
            if !s.variance.is_finite() || s.variance <= 0.0 {
                return Err(Error::invalid(
                    "sources.variance",
                    format!("source {l}: variance {} must be finite and > 0", s.variance),
                ));
            }
            if !s.cost.is_finite() || s.cost < 0.0 {
                return Err(Error::invalid(
                    "sources.cost",
                    format!("source {l}: cost {} must be finite and >= 0", s.cost),
                ));
            }
            match s.availability {
                Some(q) if !q.is_finite() || q < 0.0 => {
                    return Err(Error::invalid(
                        "sources.availability",
                        format!("source {l}: availability {q} must be finite and >= 0"),
                    ));
                }
                None if s.cost == 0.0 => {
                    return Err(Error::invalid(
                        "sources.availability",
                        format!(
                            "source {l}: a free source must have finite availability, \
                             otherwise recovery increases without bound"
                        ),
                    ));
                }
                _ => {}
            }
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::invalid(
                "budget",
                format!("budget {budget} must be finite and >= 0"),
            ));
        }
        if !theta2.is_finite() || theta2 <= 0.0 {
            return Err(Error::invalid(
                "theta2",
                format!("spike strength {theta2} must be finite and > 0"),
            ));
        }
        Ok(Self {
            sources,
            budget,
            theta2,
        })
    }

    pub fn sources(&self) -> &[SamplingSource] {
        &self.sources
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    fn spent(&self, allocation: &[f64]) -> f64 {
        self.sources
            .iter()
            .zip(allocation)
            .map(|(s, &c)| s.cost * c)
            .sum()
    }

    /// All extreme points of the feasible polyhedron, sorted ascending
    /// lexicographically and deduplicated to `1e-12`.
    ///
    /// Every extreme point pins each coordinate to `0` or its cap, except at
    /// most one whose value is forced by spending the budget exactly; the
    /// enumeration walks all such assignments and keeps the feasible ones.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let l = self.sources.len();
        let budget_tol = 1e-12 * self.budget.abs().max(1.0);
        let mut found: Vec<Vec<f64>> = Vec::new();

        // `free` = None: all coordinates pinned. `free` = Some(j): coordinate
        // j takes whatever value spends the budget exactly (needs cost > 0).
        for free in std::iter::once(None).chain((0..l).map(Some)) {
            if let Some(j) = free {
                if self.sources[j].cost == 0.0 {
                    continue;
                }
            }
            let pinned: Vec<usize> = (0..l).filter(|&i| Some(i) != free).collect();
            // Each pinned coordinate independently takes 0 or its cap; a
            // bitmask walks the combinations. Capless coordinates only pin
            // to 0.
            let choices: u64 = 1 << pinned.len();
            'mask: for mask in 0..choices {
                let mut point = vec![0.0; l];
                for (b, &i) in pinned.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        match self.sources[i].availability {
                            Some(cap) => point[i] = cap,
                            None => continue 'mask,
                        }
                    }
                }
                if let Some(j) = free {
                    let rest = self.spent(&point) - self.sources[j].cost * point[j];
                    let mut v = (self.budget - rest) / self.sources[j].cost;
                    if v < -budget_tol {
                        continue;
                    }
                    v = v.max(0.0);
                    if let Some(cap) = self.sources[j].availability {
                        let cap_tol = 1e-12 * cap.abs().max(1.0);
                        if v > cap + cap_tol {
                            continue;
                        }
                        v = v.min(cap);
                    }
                    point[j] = v;
                }
                if self.spent(&point) <= self.budget + budget_tol {
                    found.push(point);
                }
            }
        }

        found.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.partial_cmp(y).expect("vertex coordinates are finite"))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        found.dedup_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .all(|(&x, &y)| (x - y).abs() <= DEDUP_TOL * x.abs().max(y.abs()).max(1.0))
        });
        Ok(found)
    }

    /// Limiting optimally weighted component recovery of an allocation:
    /// the largest root of the design equation, clamped below at zero (a
    /// nonpositive root means the spike stays in the bulk and nothing
    /// aligns). The all-zero allocation yields zero.
    pub fn recovery_for_allocation(&self, allocation: &[f64]) -> Result<f64> {
        if allocation.len() != self.sources.len() {
            return Err(Error::invalid(
                "allocation",
                format!(
                    "{} rates for {} sources",
                    allocation.len(),
                    self.sources.len()
                ),
            ));
        }
        for (l, &c) in allocation.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::invalid(
                    "allocation",
                    format!("source {l}: rate {c} must be finite and >= 0"),
                ));
            }
        }
        let theta2 = self.theta2;
        let terms: Vec<(f64, f64)> = self
            .sources
            .iter()
            .zip(allocation)
            .filter(|(_, &c)| c > 0.0)
            .map(|(s, &c)| (c * theta2 / s.variance, s.variance / theta2))
            .collect();
        if terms.is_empty() {
            return Ok(0.0);
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
            1.0 - sum
        };
        let df = |x: f64| {
            let mut sum = 0.0;
            for &(coef, ratio) in &terms {
                let den = ratio + x;
                sum += coef * (ratio + 1.0) / (den * den);
            }
            sum
        };
        let root = roots::largest_root(f, Some(df), pole, Some(1.0), 1e-12)?;
        Ok(root.max(0.0))
    }

    /// Maximize recovery over the polyhedron's extreme points. Ties within
    /// `1e-12` are broken toward the lexicographically largest allocation.
    pub fn optimize_sampling(&self) -> Result<SamplingPlan> {
        let vertices = self.enumerate_vertices()?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for v in vertices {
            let r = self.recovery_for_allocation(&v)?;
            // Ascending lexicographic order makes "not worse than best,
            // within the tie tolerance" pick the lexicographically largest
            // among tied maxima.
            let better = match &best {
                None => true,
                Some((br, _)) => r > br - 1e-12,
            };
            if better {
                let r = best
                    .as_ref()
                    .map_or(r, |&(br, _)| if r > br { r } else { br });
                best = Some((r, v));
            }
        }
        let (recovery, allocation) =
            best.ok_or_else(|| Error::RootSearch("no feasible vertex found".into()))?;
        let spent = self.spent(&allocation);
        let saturated = self.is_saturated(&allocation);
        Ok(SamplingPlan {
            allocation,
            recovery,
            spent,
            vertex: true,
            saturated,
        })
    }

    /// True when no coordinate of `allocation` can be increased feasibly:
    /// each source is at its cap or the budget is exhausted for it.
    fn is_saturated(&self, allocation: &[f64]) -> bool {
        let slack = self.budget - self.spent(allocation);
        let budget_blocked = slack <= 1e-9 * self.budget.abs().max(1.0);
        self.sources.iter().zip(allocation).all(|(s, &c)| {
            let capped = s
                .availability
                .is_some_and(|q| c >= q - 1e-9 * q.abs().max(1.0));
            capped || (s.cost > 0.0 && budget_blocked)
        })
    }
}
