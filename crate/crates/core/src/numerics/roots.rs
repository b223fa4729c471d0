//! Bracketed scalar root finding (Brent's method).

use thiserror::Error;

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("bracket invalid: f({lo}) = {f_lo}, f({hi}) = {f_hi} have the same sign")]
    BracketInvalid {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("function is not finite at {at}")]
    NonFinite { at: f64 },
    #[error("no convergence after {iterations} iterations (last iterate {last})")]
    NoConvergence { iterations: usize, last: f64 },
}

/// Root of `f` inside `[lo, hi]`.
///
/// Bisection is interleaved with secant and inverse quadratic steps; the
/// iteration stops once the bracket half-width drops below `tol` (plus a
/// few ulps of the iterate) or `f` vanishes exactly.
pub fn find_root_bracketed<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
{
    let eval = |x: f64| -> Result<f64, RootError> {
        let v = f(x);
        if v.is_nan() {
            Err(RootError::NonFinite { at: x })
        } else {
            Ok(v)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::BracketInvalid {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }
    Err(RootError::NoConvergence {
        iterations: MAX_ITER,
        last: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let x = find_root_bracketed(|x| x * x - 2.0, 1.0, 2.0, 1e-14).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_linear_root() {
        let x = find_root_bracketed(|x| x, -1.0, 1.0, 1e-14).unwrap();
        assert!(x.abs() < 1e-14);
    }

    #[test]
    fn reversed_bracket_is_accepted() {
        let x = find_root_bracketed(|x: f64| x.cos() - x, 1.0, 0.0, 1e-13).unwrap();
        assert!((x.cos() - x).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_is_rejected() {
        let err = find_root_bracketed(|x| x * x + 1.0, -1.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, RootError::BracketInvalid { .. }));
    }

    #[test]
    fn deterministic_for_fixed_inputs() {
        let f = |x: f64| x.powi(3) - x - 1.0;
        let a = find_root_bracketed(f, 1.0, 2.0, 1e-12).unwrap();
        let b = find_root_bracketed(f, 1.0, 2.0, 1e-12).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn width_or_residual_contract() {
        let tol = 1e-6;
        let f = |x: f64| (x - 0.3).powi(3);
        let x = find_root_bracketed(f, 0.0, 1.0, tol).unwrap();
        assert!(f(x).abs() <= tol || (x - 0.3).abs() <= tol);
    }
}
