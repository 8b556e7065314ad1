use henon::cache::NuCache;
use henon::radial::{solve_radial, RadialProfile};
use henon::spectrum::{compute_spectrum, compute_spectrum_with, nu1_curve, SpectrumOptions, SweepContext};
use henon::{BaseParams, ProblemParams};
use proptest::prelude::*;

fn profile(n: u32, a: f64, m: u32, p: f64) -> RadialProfile {
    solve_radial(&ProblemParams::new(n, a, m, p).unwrap()).unwrap()
}

/// Sturm shooting oracle in s = ln t for -phi'' - (M-2) phi' - V phi = nu phi,
/// V(s) = t^2 a_p(t). RK4 on segments split at the zeros of the profile,
/// started from the decaying exponential at s0 and bisected on the number of
/// sign changes up to s = 0.
struct Shooter {
    m_dim: f64,
    s0: f64,
    // (s, h, V(s), V(s + h/2), V(s + h)) per step
    steps: Vec<(f64, f64, f64, f64, f64)>,
}

impl Shooter {
    fn new(prof: &RadialProfile, s0: f64, h: f64) -> Self {
        let m_dim = prof.params.fictitious_dimension();
        let v = |s: f64| {
            let t = s.exp();
            t * t * prof.potential_at(t)
        };
        let mut knots = vec![s0];
        knots.extend(prof.zeros.iter().map(|z| z.ln()));
        knots.push(0.0);
        let mut steps = Vec::new();
        for w in knots.windows(2) {
            let k = ((w[1] - w[0]) / h).ceil() as usize;
            let hh = (w[1] - w[0]) / k as f64;
            for i in 0..k {
                let s = w[0] + i as f64 * hh;
                // one-sided limits at the segment ends
                let a = if i == 0 { v(s + 1e-13) } else { v(s) };
                let b = if i + 1 == k { v(s + hh - 1e-13) } else { v(s + hh) };
                steps.push((s, hh, a, v(s + 0.5 * hh), b));
            }
        }
        Shooter { m_dim, s0, steps }
    }

    fn sign_changes(&self, nu: f64) -> usize {
        let c = self.m_dim - 2.0;
        let q = 0.25 * c * c;
        let r = -0.5 * c + (q - nu).sqrt();
        let _ = self.s0;
        let mut y = [1.0, r];
        let mut changes = 0;
        let f = |vv: f64, y: [f64; 2]| [y[1], -c * y[1] - (vv + nu) * y[0]];
        for &(_, h, va, vm, vb) in &self.steps {
            let k1 = f(va, y);
            let k2 = f(vm, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(vm, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(vb, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            let next = [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            if (next[0] < 0.0) != (y[0] < 0.0) {
                changes += 1;
            }
            y = next;
        }
        changes
    }

    fn eigenvalue(&self, k: usize, lo: f64) -> f64 {
        let (mut lo, mut hi) = (lo, 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.sign_changes(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[test]
fn matches_shooting_oracle() {
    for &(n, a, m, p) in &[(3, 0.0, 2, 2.0), (3, 0.0, 1, 3.0), (2, 0.0, 2, 5.0), (4, 1.0, 2, 2.5), (5, 3.5, 3, 2.0)] {
        let prof = profile(n, a, m, p);
        let spec = compute_spectrum(&prof, m as usize).unwrap();
        let shooter = Shooter::new(&prof, -30.0, 2e-3);
        for (k, &nu) in spec.eigenvalues.iter().enumerate() {
            let oracle = shooter.eigenvalue(k + 1, spec.eigenvalues[0] * 1.5 - 1.0);
            let rel = ((nu - oracle) / oracle).abs();
            assert!(rel < 1e-6, "({n},{a},{m},{p}) nu_{} = {nu}, shooting {oracle}, rel {rel:e}", k + 1);
        }
    }
}

#[test]
fn benchmark_values() {
    // shooting values for N = 3, alpha = 0, m = 2
    let spec = compute_spectrum(&profile(3, 0.0, 2, 2.0), 2).unwrap();
    assert!((spec.eigenvalues[0] + 10.54084075).abs() < 1e-6, "{:?}", spec.eigenvalues);
    assert!((spec.eigenvalues[1] + 1.74593854).abs() < 1e-6, "{:?}", spec.eigenvalues);
    let spec = compute_spectrum(&profile(3, 0.0, 2, 4.9), 2).unwrap();
    assert!((spec.eigenvalues[0] + 2.18050016).abs() < 1e-6, "{:?}", spec.eigenvalues);
}

#[test]
fn positive_solution_near_one_and_critical() {
    let nu = compute_spectrum(&profile(3, 0.0, 1, 1.01), 1).unwrap().eigenvalues[0];
    assert!(nu > -0.15 && nu < 0.0, "{nu}");
    let nu = compute_spectrum(&profile(3, 0.0, 1, 4.9), 1).unwrap().eigenvalues[0];
    assert!((nu + 2.0).abs() < 0.1, "{nu}");
}

#[test]
fn planar_two_zone_large_p() {
    let spec = compute_spectrum(&profile(2, 0.0, 2, 50.0), 2).unwrap();
    let k = (-spec.eigenvalues[0]).sqrt();
    assert!(k > 4.5 && k < 5.2, "{k}");
    assert!((spec.eigenvalues[1] + 1.0).abs() < 0.05);
}

#[test]
fn grid_convergence_at_benchmark() {
    let prof = profile(3, 0.0, 2, 2.0);
    let coarse = compute_spectrum(&prof, 2).unwrap();
    let opts = SpectrumOptions { step: 0.005, ..SpectrumOptions::default() };
    let fine = compute_spectrum_with(&prof, 2, &opts).unwrap();
    for (a, b) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
        assert!(((a - b) / b).abs() <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn eigenfunctions_normalized_and_signed() {
    let spec = compute_spectrum(&profile(3, 0.0, 3, 1.8), 3).unwrap();
    for i in 0..3 {
        assert!((spec.weighted_inner(i, i) - 1.0).abs() < 1e-10);
        let first = spec.eigenfunctions[i].iter().find(|v| v.abs() > 1e-6).unwrap();
        assert!(*first > 0.0);
        assert_eq!(spec.eigenfunctions[i].len(), spec.grid.len());
    }
    assert_eq!(spec.negative_count, 3);
    assert!(spec.rayleigh_residuals.iter().all(|r| *r < 1e-7));
    let m_dim = spec.params.fictitious_dimension();
    assert!((spec.admissibility_threshold - 0.25 * (m_dim - 2.0).powi(2)).abs() < 1e-15);
}

#[test]
fn fewer_than_m_requested() {
    let spec = compute_spectrum(&profile(3, 0.0, 3, 2.0), 1).unwrap();
    let full = compute_spectrum(&profile(3, 0.0, 3, 2.0), 3).unwrap();
    assert_eq!(spec.eigenvalues.len(), 1);
    assert!((spec.eigenvalues[0] - full.eigenvalues[0]).abs() < 1e-12);
    assert!(compute_spectrum(&profile(3, 0.0, 3, 2.0), 4).is_err());
}

#[test]
fn sweep_marks_failures_and_uses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let base = BaseParams::new(3, 0.0, 2).unwrap();
    let ctx = SweepContext { cache: Some(NuCache::new(dir.path())), jobs: Some(2), ..SweepContext::default() };
    let grid = [1.5, 2.0, 2.5];
    let first = nu1_curve(&base, &grid, &ctx).unwrap();
    assert!(first.iter().all(|pt| pt.nu.is_some() && pt.error.is_none()));
    let again = nu1_curve(&base, &grid, &ctx).unwrap();
    assert_eq!(first, again);
    let uncached = nu1_curve(&base, &grid, &SweepContext::default()).unwrap();
    assert_eq!(first, uncached);
    // a failing point does not poison its neighbours
    let tight = SweepContext {
        radial: henon::radial::RadialOptions { horizon: 1.0, ..Default::default() },
        ..SweepContext::default()
    };
    let pts = nu1_curve(&base, &[2.0], &tight).unwrap();
    assert!(pts[0].nu.is_none() && pts[0].error.is_some());
    assert!(nu1_curve(&base, &[0.5], &ctx).is_err());
}

#[test]
fn corrupted_cache_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let base = BaseParams::new(3, 0.0, 1).unwrap();
    let cache = NuCache::new(dir.path());
    let ctx = SweepContext { cache: Some(cache.clone()), ..SweepContext::default() };
    let good = nu1_curve(&base, &[2.0], &ctx).unwrap();
    std::fs::write(cache.path_for(&base), b"{\"dimension\": 3, \"samples\": [").unwrap();
    let again = nu1_curve(&base, &[2.0], &ctx).unwrap();
    assert_eq!(good, again);
    let text = std::fs::read_to_string(cache.path_for(&base)).unwrap();
    assert!(serde_json::from_str::<serde_json::Value>(&text).is_ok());
}

#[test]
fn concurrent_sweeps_share_one_cache() {
    let dir = tempfile::tempdir().unwrap();
    let base = BaseParams::new(3, 0.0, 1).unwrap();
    let ctx = SweepContext { cache: Some(NuCache::new(dir.path())), ..SweepContext::default() };
    let grids: Vec<Vec<f64>> = (0..4).map(|k| vec![1.5 + 0.1 * k as f64, 3.0 + 0.1 * k as f64]).collect();
    std::thread::scope(|s| {
        for g in &grids {
            let ctx = &ctx;
            s.spawn(move || nu1_curve(&base, g, ctx).unwrap());
        }
    });
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 1);
    let cache = NuCache::new(dir.path());
    let key_probe = nu1_curve(&base, &[1.5], &ctx).unwrap();
    assert!(key_probe[0].nu.is_some());
    let text = std::fs::read_to_string(cache.path_for(&base)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 8);
}

fn case() -> impl Strategy<Value = (u32, f64, u32, f64)> {
    (2u32..=5, 0.0f64..4.0, 1u32..=3, 0.1f64..0.5).prop_map(|(n, a, m, f)| {
        let pa = BaseParams::new(n, a, m).unwrap().critical_exponent().min(12.0);
        (n, a, m, 1.0 + f * (pa - 1.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn ordering_nodes_orthogonality((n, a, m, p) in case()) {
        let spec = compute_spectrum(&profile(n, a, m, p), m as usize).unwrap();
        prop_assert!(spec.bound_violations().is_empty(), "{:?}", spec.bound_violations());
        prop_assert_eq!(spec.negative_count, m as usize);
        for i in 0..m as usize {
            prop_assert_eq!(spec.sign_changes(i), i);
            for j in 0..m as usize {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((spec.weighted_inner(i, j) - want).abs() <= 1e-8);
            }
        }
    }
}
