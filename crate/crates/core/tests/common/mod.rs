#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let gl = gauss_legendre(12);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let c = a + (k as f64 + 0.5) * h;
        for &(x, w) in &gl {
            s += w * f(c + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

/// Schlafli integral representation of J_nu(x).
pub fn bessel_integral(nu: f64, x: f64) -> f64 {
    let panels = 200 + (4.0 * x) as usize;
    let first = integrate(|t| (nu * t - x * t.sin()).cos(), 0.0, PI, panels) / PI;
    let s = (nu * PI).sin();
    if s.abs() < 1e-15 {
        return first;
    }
    let tmax = (60.0 / x).asinh().max(1.0) + 60.0 / (nu + 1.0);
    let second = integrate(|t| (-x * t.sinh() - nu * t).exp(), 0.0, tmax, 2000);
    first - s / PI * second
}

/// Truncated ascending series, for bisection oracles at small arguments.
pub fn bessel_series_oracle(nu: f64, x: f64) -> f64 {
    let mut gamma = 1.0;
    // Gamma(nu + 1) by the product Gamma(nu + 1 + K)/(nu+1)...(nu+K) and Stirling at large K
    let k = 40.0;
    let z = nu + 1.0 + k;
    let ln_g = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * z) - 1.0 / (360.0 * z.powi(3));
    for i in 0..40 {
        gamma *= nu + 1.0 + i as f64;
    }
    let g = ln_g.exp() / gamma;
    let mut term = (x / 2.0).powf(nu) / g;
    let mut sum = term;
    for kk in 1..80 {
        term *= -(x * x / 4.0) / (kk as f64 * (kk as f64 + nu));
        sum += term;
    }
    sum
}

pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if (f(c) > 0.0) == (fa > 0.0) {
            a = c;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}
