//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Safeguarded secant on a sign-changing bracket.
///
/// Alternates secant steps with bisection whenever the secant step leaves the
/// bracket or fails to halve it. Stops when the bracket is narrower than `xtol`
/// or `f` vanishes exactly.
pub fn bracketed_root<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!("no sign change on [{a}, {b}]")));
    }
    let mut bisect_next = false;
    for _ in 0..max_iter {
        let width = (b - a).abs();
        if width <= xtol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let mut x = if bisect_next { 0.5 * (a + b) } else { b - fb * (b - a) / (fb - fa) };
        let lo = a.min(b);
        let hi = a.max(b);
        if !(x > lo && x < hi) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // a secant step that did not halve the bracket is followed by a bisection
        bisect_next = !bisect_next && (b - a).abs() > 0.5 * width;
    }
    Err(Error::Convergence { iterations: max_iter, lo: a.min(b), hi: a.max(b) })
}

/// Round to the nearest integer when within `tol`, otherwise leave unchanged.
pub fn snap(x: f64, tol: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= tol {
        r
    } else {
        x
    }
}

/// Ceiling after snapping within 1e-9.
pub fn ceil_snapped(x: f64) -> i64 {
    snap(x, 1e-9).ceil() as i64
}

/// Floor after snapping within 1e-9.
pub fn floor_snapped(x: f64) -> i64 {
    snap(x, 1e-9).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cos_root() {
        let r = bracketed_root(|x| Ok(x.cos()), 0.0, 3.0, 1e-14, 200).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn flat_function_still_converges() {
        let r = bracketed_root(|x: f64| Ok((x - 1.0).powi(7)), 0.0, 3.0, 1e-12, 400).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bracketed_root(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn snapping() {
        assert_eq!(ceil_snapped(2.0 + 1e-12), 2);
        assert_eq!(ceil_snapped(2.0 + 1e-6), 3);
        assert_eq!(floor_snapped(3.0 - 1e-12), 3);
        assert_eq!(floor_snapped(0.5), 0);
    }
}
