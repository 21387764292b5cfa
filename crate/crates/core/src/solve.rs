//! Scalar root bracketing and one-dimensional maximisation.

use crate::error::{Error, Result};

/// Result of a bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    /// Final bracket endpoints, `f(lo)` and `f(hi)` of opposite sign (or zero).
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
}

impl Bisection {
    /// Endpoint with the smaller absolute function value.
    pub fn root(&self) -> (f64, f64) {
        if self.f_lo.abs() <= self.f_hi.abs() {
            (self.lo, self.f_lo)
        } else {
            (self.hi, self.f_hi)
        }
    }
}

/// Bisects `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `x_tol`, an exact zero is hit, or
/// the midpoint can no longer be separated from an endpoint in floating
/// point. `x_tol = 0.0` therefore runs to machine precision.
pub fn bisect<F>(f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Result<Bisection>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    if f_lo.is_nan()
        || f_hi.is_nan()
        || (f_lo != 0.0 && f_hi != 0.0 && f_lo.signum() == f_hi.signum())
    {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let done = |lo: f64, hi: f64, f_lo: f64, f_hi: f64, iterations| {
        Ok(Bisection {
            lo,
            hi,
            f_lo,
            f_hi,
            iterations,
        })
    };
    if f_lo == 0.0 {
        return done(lo, lo, f_lo, f_lo, 0);
    }
    if f_hi == 0.0 {
        return done(hi, hi, f_hi, f_hi, 0);
    }
    for iteration in 1..=max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return done(lo, hi, f_lo, f_hi, iteration - 1);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return done(mid, mid, f_mid, f_mid, iteration);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        if hi - lo <= x_tol {
            return done(lo, hi, f_lo, f_hi, iteration);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        width: hi - lo,
    })
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns the best point seen, including both endpoints.
pub fn golden_max<F>(f: F, a: f64, b: f64, x_tol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut best = [(a, f(a)), (b, f(b))]
        .into_iter()
        .fold(
            (a, f64::NEG_INFINITY),
            |acc, p| if p.1 > acc.1 { p } else { acc },
        );
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if b - a <= x_tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        for p in [(c, fc), (d, fd)] {
            if p.1 > best.1 {
                best = p;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two_to_machine_precision() {
        let b = bisect(|x| 2.0 - x * x, 0.0, 2.0, 0.0, 200).unwrap();
        let (x, fx) = b.root();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
        assert!(fx.abs() < 1e-14);
        assert!(b.iterations <= 60);
    }

    #[test]
    fn bisect_works_for_decreasing_functions() {
        let b = bisect(|x| 0.3 - x, 0.0, 1.0, 1e-12, 200).unwrap();
        assert!((b.root().0 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0, 200).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn bisect_reports_iteration_limit() {
        let err = bisect(|x| x - 0.123456789, 0.0, 1.0, 0.0, 5).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 5, .. }));
    }

    #[test]
    fn golden_max_finds_parabola_vertex() {
        let (x, fx) = golden_max(|x| -(x - 0.37) * (x - 0.37) + 1.0, 0.0, 1.0, 1e-10, 200);
        assert!((x - 0.37).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_max_keeps_endpoint_maximum() {
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-10, 200);
        assert_eq!(x, 1.0);
    }
}
