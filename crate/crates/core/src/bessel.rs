//! Bessel functions of the first kind J_beta for real beta >= 0, their
//! positive zeros, and the inverse problems for beta_i and n_alpha^m.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::params::BaseParams;
use crate::roots::{bracketed_root, ceil_snapped};

/// |J_beta(z)| bound accepted at a computed zero.
pub const ZERO_RESIDUAL_TOL: f64 = 1e-10;
/// Accuracy of beta_i.
pub const BETA_TOL: f64 = 1e-8;

const SERIES_MAX_R: f64 = 8.0;
const HANKEL_MIN_R: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument(format!("Bessel order must be finite and >= 0, got {beta}")));
        }
        Ok(BesselOrder(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    pub beta: f64,
    pub zeros: Vec<f64>,
}

impl ZeroTable {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }
}

/// J_beta(r).
pub fn eval_bessel(order: BesselOrder, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("Bessel argument must be finite and >= 0, got {r}")));
    }
    let beta = order.0;
    if r == 0.0 {
        return Ok(if beta == 0.0 { 1.0 } else { 0.0 });
    }
    let v = if r <= SERIES_MAX_R || r * r <= 2.0 * (beta + 1.0) {
        series(beta, r)
    } else if r >= HANKEL_MIN_R + beta * beta {
        hankel(beta, r)
    } else {
        miller(beta, r)
    };
    Ok(v)
}

fn series(beta: f64, r: f64) -> f64 {
    let half = 0.5 * r;
    let q = half * half;
    let mut term = (beta * half.ln() - ln_gamma(beta + 1.0)).exp();
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + beta));
        sum += term;
        if k * (k + beta) > q && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

fn hankel(beta: f64, r: f64) -> f64 {
    let mu = 4.0 * beta * beta;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..=40 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * r);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // signs follow (-1)^{floor(k/2)} on alternate P/Q slots
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = r - (0.5 * beta + 0.25) * PI;
    (2.0 / (PI * r)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Backward recurrence from well above max(r, beta), normalized with
/// (x/2)^nu = sum_k (nu + 2k) Gamma(nu + k)/k! J_{nu+2k}(x).
fn miller(beta: f64, x: f64) -> f64 {
    let n = beta.floor() as usize;
    let nu = beta - n as f64;
    let top = (n as f64).max(x);
    let start = (top + 30.0 + (40.0 * top).sqrt()).ceil() as usize;

    let mut above = 0.0_f64;
    let mut cur = 1e-200_f64;
    let mut target = if start == n { cur } else { 0.0 };
    // f at even offsets, for the normalization sum
    let mut sum_index_values: Vec<f64> = vec![0.0; start / 2 + 1];
    if start % 2 == 0 {
        sum_index_values[start / 2] = cur;
    }
    let mut k = start;
    while k > 0 {
        let order = nu + k as f64;
        let below = 2.0 * order / x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if k == n {
            target = cur;
        }
        if k % 2 == 0 {
            sum_index_values[k / 2] = cur;
        }
        if cur.abs() > 1e200 {
            let s = 1e-200;
            cur *= s;
            above *= s;
            target *= s;
            for v in sum_index_values.iter_mut().skip(k / 2) {
                *v *= s;
            }
        }
    }

    let g = ln_gamma(nu + 1.0).exp();
    let mut sum = g * sum_index_values[0];
    let mut c = g;
    for (kk, &f) in sum_index_values.iter().enumerate().skip(1) {
        if kk > 1 {
            let km = (kk - 1) as f64;
            c *= (nu + km) / (km + 1.0);
        }
        sum += (nu + 2.0 * kk as f64) * c * f;
    }
    target * (0.5 * x).powf(nu) / sum
}

/// The first `count` positive zeros of J_beta.
pub fn zero_table(order: BesselOrder, count: usize) -> Result<ZeroTable> {
    let beta = order.0;
    let mut zeros = Vec::with_capacity(count);
    if count == 0 {
        return Ok(ZeroTable { beta, zeros });
    }
    // j_{beta,1} > sqrt(beta(beta+2)), so no zero is skipped below the origin
    let origin = (beta * (beta + 2.0)).sqrt();
    let horizon = origin + PI * (count as f64 + 2.0) + 8.0 * beta.cbrt() + 50.0;
    let step = FRAC_PI_4;
    let j = |r: f64| eval_bessel(order, r);
    let mut a = origin;
    let mut fa = j(a)?;
    while zeros.len() < count {
        let b = a + step;
        if b > horizon {
            return Err(Error::SearchExhausted { order: beta, index: zeros.len() + 1, horizon });
        }
        let fb = j(b)?;
        if fb == 0.0 {
            zeros.push(b);
            a = b + 1e-9;
            fa = j(a)?;
            continue;
        }
        if fa.signum() != fb.signum() {
            let z = bracketed_root(j, a, b, 4.0 * f64::EPSILON * b, 200)?;
            let res = j(z)?;
            if res.abs() > ZERO_RESIDUAL_TOL {
                return Err(Error::Numerical(format!("|J_{beta}({z})| = {res:e} above zero tolerance")));
            }
            zeros.push(z);
        }
        a = b;
        fa = fb;
    }
    Ok(ZeroTable { beta, zeros })
}

/// z_i(beta), the i-th positive zero (i >= 1).
pub fn bessel_zero(order: BesselOrder, i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidArgument("zero index starts at 1".into()));
    }
    Ok(zero_table(order, i)?.zeros[i - 1])
}

fn zero_at(beta: f64, i: usize) -> Result<f64> {
    bessel_zero(BesselOrder::new(beta)?, i)
}

/// beta_i solving z_i(beta_i) = z_m((N-2)/(2+alpha)).
pub fn solve_beta_i(base: &BaseParams, i: usize) -> Result<f64> {
    base.validate()?;
    let m = base.nodal_zones as usize;
    if i == 0 || i > m {
        return Err(Error::InvalidArgument(format!("beta index {i} outside 1..={m}")));
    }
    let b = base.bessel_base();
    if i == m {
        return Ok(b);
    }
    let target = zero_at(b, m)?;
    let mut lo = b + 2.0 * (m - i) as f64;
    if zero_at(lo, i)? >= target {
        lo = b;
    }
    let hi = target;
    bracketed_root(|beta| Ok(zero_at(beta, i)? - target), lo, hi, 0.1 * BETA_TOL, 200)
}

/// All beta_i with the matching zero z_i(beta_i) (which equals z_m(beta_m)).
pub fn beta_table(base: &BaseParams) -> Result<Vec<(usize, f64, f64)>> {
    let m = base.nodal_zones as usize;
    (1..=m)
        .map(|i| {
            let beta = solve_beta_i(base, i)?;
            Ok((i, beta, zero_at(beta, i)?))
        })
        .collect()
}

/// n_alpha^m = ceil(((2+alpha) beta_1 - N)/2), checked against its
/// characterization by Bessel zeros.
pub fn compute_n_alpha_m(base: &BaseParams) -> Result<u32> {
    base.validate()?;
    if base.dimension < 3 || base.nodal_zones < 2 {
        return Err(Error::InvalidArgument("n_alpha^m needs N >= 3 and m >= 2".into()));
    }
    let a = base.alpha;
    let nd = base.dimension as f64;
    let beta1 = solve_beta_i(base, 1)?;
    let n = ceil_snapped(((2.0 + a) * beta1 - nd) / 2.0);
    if n < 0 {
        return Err(Error::Inconsistency(format!("negative n_alpha^m = {n}")));
    }
    let target = zero_at(base.bessel_base(), base.nodal_zones as usize)?;
    let left = zero_at((2.0 * n as f64 + nd - 2.0) / (2.0 + a), 1)?;
    let right = zero_at((2.0 * n as f64 + nd) / (2.0 + a), 1)?;
    if !(left < target && target <= right) {
        return Err(Error::Inconsistency(format!(
            "n = {n}: z_1 = {left} < z_m = {target} <= z_1 = {right} fails"
        )));
    }
    Ok(n as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(beta: f64, r: f64) -> f64 {
        eval_bessel(BesselOrder::new(beta).unwrap(), r).unwrap()
    }

    #[test]
    fn half_integer_closed_form() {
        for &r in &[0.3, 1.0, 5.0, 11.0, 13.0, 29.0, 45.0, 120.0, 199.0] {
            let exact = (2.0 / (PI * r)).sqrt() * r.sin();
            assert!((j(0.5, r) - exact).abs() < 1e-13, "r = {r}");
            let exact = (2.0 / (PI * r)).sqrt() * (r.sin() / r - r.cos());
            assert!((j(1.5, r) - exact).abs() < 1e-13, "r = {r}");
        }
    }

    #[test]
    fn regimes_agree_at_crossovers() {
        for &beta in &[0.0, 0.3, 1.0, 2.7] {
            let r = HANKEL_MIN_R + beta * beta;
            assert!((hankel(beta, r) - miller(beta, r)).abs() < 1e-14);
        }
        for &beta in &[0.0, 0.5, 3.3, 8.0] {
            assert!((series(beta, 7.9) - miller(beta, 7.9)).abs() < 1e-14);
        }
    }

    #[test]
    fn small_argument_limit() {
        assert!((j(0.0, 1e-8) - 1.0).abs() < 1e-15);
        assert_eq!(j(0.0, 0.0), 1.0);
        assert_eq!(j(2.0, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BesselOrder::new(-1.0).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert!(eval_bessel(BesselOrder::new(1.0).unwrap(), f64::INFINITY).is_err());
        assert!(bessel_zero(BesselOrder::new(1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn sine_zeros() {
        let t = zero_table(BesselOrder::new(0.5).unwrap(), 10).unwrap();
        for (k, z) in t.zeros.iter().enumerate() {
            assert!((z - (k + 1) as f64 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn last_beta_is_exact() {
        let b = BaseParams::new(5, 1.0, 3).unwrap();
        assert_eq!(solve_beta_i(&b, 3).unwrap(), 1.0);
    }
}
