//! Bracketed bisection, the root-finding primitive behind the gain,
//! resonance and link-inversion solvers.
//!
//! Bisection is chosen over faster iterations because every equation in
//! this crate is strictly monotone over a known bracket: convergence is
//! then unconditional and the returned interval certifies the root.

use crate::error::{Error, Result};

/// Outcome of a bisection run.
#[derive(Debug, Clone, Copy)]
pub struct Bisection {
    /// The best root estimate (the evaluated point with smallest |f|).
    pub root: f64,
    /// Residual of the objective at `root`.
    pub f_root: f64,
    /// Final bracket, still enclosing the sign change.
    pub lo: f64,
    /// Final bracket, still enclosing the sign change.
    pub hi: f64,
    /// Number of interval halvings performed.
    pub iterations: u32,
}

/// Finds a root of `f` inside `[lo, hi]` by interval halving.
///
/// Preconditions: `lo < hi` and `f(lo)`, `f(hi)` have opposite signs (an
/// endpoint evaluating exactly to zero is returned immediately). The loop
/// stops when the bracket is narrower than `width_tol`, when it can no
/// longer be split in floating point, or after `max_iter` halvings,
/// whichever comes first. Pass `width_tol = 0` to run to the floating-point
/// limit of the bracket. The caller is responsible for judging the returned
/// residual against its own tolerance.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, width_tol: f64, max_iter: u32) -> Result<Bisection>
where
    F: FnMut(f64) -> f64,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::NoBracket { lo, hi, f_lo: f64::NAN, f_hi: f64::NAN });
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bisection { root: lo, f_root: 0.0, lo, hi, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bisection { root: hi, f_root: 0.0, lo, hi, iterations: 0 });
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }

    let (mut lo, mut hi, mut f_lo) = (lo, hi, f_lo);
    // Track the evaluated point with the smallest residual magnitude.
    let (mut best, mut f_best) =
        if f_lo.abs() <= f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    let mut iterations = 0;

    while iterations < max_iter && hi - lo >= width_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // the bracket cannot be split any further
        }
        let f_mid = f(mid);
        iterations += 1;
        if f_mid.is_nan() {
            return Err(Error::NoConvergence { iterations, lo, hi, residual: f64::NAN });
        }
        if f_mid.abs() < f_best.abs() {
            best = mid;
            f_best = f_mid;
        }
        if f_mid == 0.0 {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }

    Ok(Bisection { root: best, f_root: f_best, lo, hi, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_the_root_of_a_cubic() {
        let b = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 0.0, 200).unwrap();
        let exact = 2f64.cbrt();
        assert!(
            (b.root - exact).abs() < 1e-14,
            "cube root of two: got {}, expected {exact}",
            b.root
        );
        assert!(b.hi - b.lo <= 2.0 * f64::EPSILON * b.hi, "bracket collapsed to ulp width");
    }

    #[test]
    fn respects_width_tolerance() {
        let b = bisect(|x| x - 0.3, 0.0, 1.0, 1e-3, 200).unwrap();
        assert!(b.hi - b.lo < 1e-3, "bracket width {} under tolerance", b.hi - b.lo);
        assert!(b.iterations <= 11, "halving 1.0 below 1e-3 needs at most 10 steps");
    }

    #[test]
    fn rejects_a_bracket_without_sign_change() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0, 100).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }), "got {err:?}");
    }

    #[test]
    fn returns_an_exact_endpoint_root_immediately() {
        let b = bisect(|x| x, 0.0, 1.0, 0.0, 100).unwrap();
        assert_eq!(b.root, 0.0);
        assert_eq!(b.iterations, 0);
    }

    #[test]
    fn decreasing_objectives_work_unchanged() {
        let b = bisect(|x| 1.0 - x.exp(), -3.0, 5.0, 0.0, 200).unwrap();
        assert!(b.root.abs() < 1e-14, "exp(x) = 1 at x = 0, got {}", b.root);
    }

    #[test]
    fn iteration_budget_is_honored() {
        let b = bisect(|x| x - 0.123456789, 0.0, 1.0, 0.0, 5).unwrap();
        assert_eq!(b.iterations, 5);
        assert!((b.hi - b.lo - 1.0 / 32.0).abs() < 1e-15, "five halvings leave 1/32");
    }
}
