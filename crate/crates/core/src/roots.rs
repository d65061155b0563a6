//! Scalar root finding: geometric bracketing, Newton safeguarded by bisection,
//! and Brent's method for residuals without a derivative.

use crate::error::{Result, VixError};

/// Search for a sign change of `f` on `(0, inf)` by geometric expansion from
/// `start` (both directions). Returns `(lo, hi)` with `f(lo) * f(hi) <= 0`.
pub fn bracket_positive<F: FnMut(f64) -> f64>(mut f: F, start: f64) -> Result<(f64, f64)> {
    let f0 = f(start);
    if f0 == 0.0 {
        return Ok((start, start));
    }
    let (mut dn, mut up) = (start, start);
    for _ in 0..200 {
        let nu = up * 2.0;
        if f(nu) * f0 <= 0.0 {
            return Ok((up, nu));
        }
        up = nu;
        let nd = dn * 0.5;
        if f(nd) * f0 <= 0.0 {
            return Ok((nd, dn));
        }
        dn = nd;
    }
    Err(VixError::RootNotFound(format!(
        "no sign change found expanding from {start}"
    )))
}

/// Newton iteration kept inside `[lo, hi]`, falling back to bisection when a
/// step leaves the bracket. `f(lo)` and `f(hi)` must differ in sign.
pub fn newton_bisect<F, D>(mut f: F, mut df: D, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(VixError::RootNotFound(format!("[{a}, {b}] does not bracket a root")));
    }
    let rising = fb > 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..300 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            b = x;
        } else {
            a = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > a && next < b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= rel_tol * x.abs().max(f64::MIN_POSITIVE) || (b - a) <= rel_tol * b.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(VixError::RootNotFound("newton_bisect exceeded iteration limit".into()))
}

/// Brent's method on a bracket with known endpoint values.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a0: f64,
    b0: f64,
    fa0: f64,
    fb0: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    if fa == 0.0 {
        return Ok((a, 0.0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0));
    }
    if fa * fb > 0.0 {
        return Err(VixError::RootNotFound(format!("[{a0}, {b0}] does not bracket a root")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok((b, fb));
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
        fb = f(b);
    }
    Err(VixError::RootNotFound(format!(
        "brent did not converge in {max_iter} iterations (last x = {b}, f = {fb:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_then_newton() {
        let f = |x: f64| x * x - 2.0;
        let (lo, hi) = bracket_positive(f, 1e-3).unwrap();
        let r = newton_bisect(f, |x| 2.0 * x, lo, hi, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_cubic() {
        let f = |x: f64| x.powi(3) - x - 1.0;
        let (r, _) = brent(f, 1.0, 2.0, f(1.0), f(2.0), 1e-14, 100).unwrap();
        assert!(f(r).abs() < 1e-12);
    }

    #[test]
    fn no_bracket_is_error() {
        assert!(newton_bisect(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_err());
    }
}
