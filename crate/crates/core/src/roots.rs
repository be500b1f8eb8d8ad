//! Scalar root finding for the spectral rational functions.
//!
//! Every function handled here is continuous and strictly increasing on an
//! interval `(limit, hi)`, diverges to `-inf` as `x -> limit+`, and crosses
//! zero exactly once. The driver brackets the root (geometric expansion when
//! no upper bound is known), bisects to a relative width of `tol_rel`, and
//! finishes with a couple of guarded Newton steps when a derivative is
//! available, which brings the root to within a few ulps at negligible cost.

use crate::error::{Error, Result};

/// Hard cap on bracket expansion; reaching it means the function never
/// became positive, i.e. the configuration is malformed.
const MAX_DOUBLINGS: u32 = 1000;

/// Hard cap on bisection steps; 64-bit floats are exhausted long before
/// this for any finite starting bracket.
const MAX_BISECTIONS: u32 = 400;

/// Smallest admissible abscissa strictly to the right of `limit`.
///
/// The relative nudge keeps the guard meaningful at any magnitude and the
/// additive term keeps it nonzero when `limit == 0`.
pub(crate) fn guard_above(limit: f64) -> f64 {
    limit + limit.abs() * 1e-9 + 1e-300
}

/// Find the unique zero of the increasing function `f` on `(limit, +inf)`,
/// or on `(limit, upper]` when an upper bracket is supplied.
///
/// `df` is an optional derivative used only for the final polish. `tol_rel`
/// is the relative x-tolerance at which bisection stops.
pub(crate) fn largest_root<F, D>(
    f: F,
    df: Option<D>,
    limit: f64,
    upper: Option<f64>,
    tol_rel: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let lo0 = guard_above(limit);
    let f_lo = f(lo0);
    // NaN must take the error path too, hence no plain `>=`.
    if f_lo.is_nan() || f_lo >= 0.0 {
        return Err(Error::RootSearch(format!(
            "no sign change: f({lo0:e}) = {f_lo:e} just right of the limit {limit:e}"
        )));
    }

    let (mut lo, mut hi);
    match upper {
        Some(h) => {
            let f_h = f(h);
            if f_h.is_nan() || f_h <= 0.0 {
                return Err(Error::RootSearch(format!(
                    "no sign change: f({h:e}) = {f_h:e} at the upper bracket"
                )));
            }
            lo = lo0;
            hi = h;
        }
        None => {
            // Expand upward as limit + 2^t until the function turns positive.
            let mut t: i32 = 0;
            let mut h = limit + 1.0;
            let mut expanded = false;
            for _ in 0..MAX_DOUBLINGS {
                if f(h) > 0.0 {
                    expanded = true;
                    break;
                }
                t += 1;
                h = limit + 2.0f64.powi(t);
            }
            if !expanded {
                return Err(Error::RootSearch(format!(
                    "no sign change after {MAX_DOUBLINGS} bracket doublings above {limit:e}"
                )));
            }
            lo = lo0;
            hi = h;
        }
    }

    for _ in 0..MAX_BISECTIONS {
        let width_tol = tol_rel * lo.abs().max(hi.abs()).max(1e-300);
        if hi - lo <= width_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break; // bracket exhausted at f64 resolution
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish, constrained to the final bracket so it can only refine.
    let mut x = 0.5 * (lo + hi);
    if let Some(df) = df {
        for _ in 0..3 {
            let fx = f(x);
            let dx = df(x);
            if !dx.is_finite() || dx == 0.0 {
                break;
            }
            let next = x - fx / dx;
            if !(next >= lo && next <= hi) || next == x {
                break;
            }
            x = next;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_of_shifted_reciprocal() {
        // f(x) = 1 - 4/(x-2) on (2, inf): root at x = 6.
        let f = |x: f64| 1.0 - 4.0 / (x - 2.0);
        let df = |x: f64| 4.0 / ((x - 2.0) * (x - 2.0));
        let root = largest_root(f, Some(df), 2.0, None, 1e-12).unwrap();
        assert!((root - 6.0).abs() < 1e-12);
    }

    #[test]
    fn respects_explicit_upper_bracket() {
        // f(x) = x on (-1, 1]: root at 0.
        let f = |x: f64| x;
        let root = largest_root(f, Some(|_| 1.0), -1.0, Some(1.0), 1e-12).unwrap();
        assert!(root.abs() < 1e-12);
    }

    #[test]
    fn reports_missing_sign_change() {
        // Strictly positive function: no root to find.
        let f = |x: f64| 1.0 + x * x;
        let err = largest_root(f, None::<fn(f64) -> f64>, 0.0, None, 1e-12).unwrap_err();
        assert!(matches!(err, Error::RootSearch(_)));
    }

    #[test]
    fn guard_stays_strictly_above_the_limit() {
        for &limit in &[0.0, 1e-30, 1.0, 5.75, 1e12, -0.04, -1e9] {
            assert!(guard_above(limit) > limit);
        }
    }
}
