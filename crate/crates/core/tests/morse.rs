use henon::bessel::solve_beta_i;
use henon::morse::*;
use henon::spectrum::SweepContext;
use henon::{BaseParams, Error, ProblemParams};
use proptest::prelude::*;

fn base(n: u32, a: f64, m: u32) -> BaseParams {
    BaseParams::new(n, a, m).unwrap()
}

/// Pascal-triangle binomials C(n, k) for k < 12, independent of the
/// library's product formula.
fn pascal(rows: usize) -> Vec<Vec<u128>> {
    let mut t = vec![vec![1u128]];
    for n in 1..=rows {
        let prev = &t[n - 1];
        let width = (n + 1).min(12);
        let mut row = vec![1u128; width];
        for k in 1..width {
            row[k] = prev[k - 1] + prev.get(k).copied().unwrap_or(0);
        }
        t.push(row);
    }
    t
}

fn choose(tri: &[Vec<u128>], n: usize, k: usize) -> u128 {
    tri[n][k.min(n - k)]
}

/// N_j = (N + 2j - 2)(N + j - 3)!/((N - 2)! j!) = (N + 2j - 2) C(N + j - 3, j)/(N - 2).
fn oracle_multiplicity(tri: &[Vec<u128>], n: u32, j: u32) -> u128 {
    if n == 2 {
        return if j == 0 { 1 } else { 2 };
    }
    let num = (n + 2 * j - 2) as u128 * choose(tri, (n + j - 3) as usize, j as usize);
    assert_eq!(num % (n - 2) as u128, 0);
    num / (n - 2) as u128
}

#[test]
fn multiplicity_matches_factorial_form() {
    let tri = pascal(220);
    for n in 2..=10 {
        for j in 0..=200 {
            assert_eq!(multiplicity(n, j).unwrap(), oracle_multiplicity(&tri, n, j), "N={n} j={j}");
        }
    }
}

#[test]
fn multiplicity_examples() {
    assert_eq!(multiplicity(3, 1).unwrap(), 3);
    for j in 0..50 {
        assert_eq!(multiplicity(3, j).unwrap(), 2 * j as u128 + 1);
    }
    for n in 3..=10 {
        for j in 1..100 {
            assert!(multiplicity(n, j + 1).unwrap() > multiplicity(n, j).unwrap());
        }
    }
    assert!(matches!(multiplicity(60, 1_000_000), Err(Error::Overflow(_))));
    assert!(multiplicity(1, 0).is_err());
}

#[test]
fn p1_index_examples() {
    for &(n, a) in &[(2, 0.0), (3, 0.0), (4, 1.5), (5, 3.5)] {
        assert_eq!(asymptotic_index_p1(&base(n, a, 1)).unwrap(), IndexValue::Exact { value: 1 });
    }
    // planar: 2 ceil(beta) with beta = 2.305
    assert_eq!(asymptotic_index_p1(&base(2, 0.0, 2)).unwrap(), IndexValue::Exact { value: 6 });
    let v = asymptotic_index_p1(&base(3, 0.0, 2)).unwrap();
    assert!(v.lower() >= 10, "{v}");
}

#[test]
fn p1_index_at_resonance_is_an_interval() {
    // alpha with ((2 + alpha) beta_1(alpha) - N)/2 = 3 for N = 3, m = 2
    let x = |a: f64| ((2.0 + a) * solve_beta_i(&base(3, a, 2), 1).unwrap() - 3.0) / 2.0 - 3.0;
    let (mut lo, mut hi) = (0.0, 3.0);
    assert!(x(lo) < 0.0 && x(hi) > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if x(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    let v = asymptotic_index_p1(&base(3, a, 2)).unwrap();
    // 1 + (N_0 + ... + N_3) below, plus N_4 at most
    assert_eq!(v, IndexValue::Interval { lo: 1 + 1 + 3 + 5 + 7, hi: 1 + 1 + 3 + 5 + 7 + 9 });
    let off = asymptotic_index_p1(&base(3, a + 1e-3, 2)).unwrap();
    assert!(matches!(off, IndexValue::Exact { .. }));
}

#[test]
fn sup_index_examples() {
    assert_eq!(asymptotic_index_sup(&base(2, 0.0, 1)).unwrap().accepted, IndexValue::Exact { value: 1 });
    assert_eq!(asymptotic_index_sup(&base(2, 4.0, 1)).unwrap().accepted, IndexValue::Exact { value: 5 });
    assert_eq!(asymptotic_index_sup(&base(2, 0.0, 2)).unwrap().accepted, IndexValue::Exact { value: 12 });
    let s = asymptotic_index_sup(&base(3, 0.0, 2)).unwrap();
    assert_eq!(s.closed_form, IndexValue::Exact { value: 4 });
    // m = 1, alpha = 0: the closed form omits the j = 0 term the ceiling formula keeps
    let s = asymptotic_index_sup(&base(3, 0.0, 1)).unwrap();
    assert_eq!((s.closed_form.lower(), s.via_limits.lower(), s.discrepancy), (0, 1, true));
    // resonant alpha'_n = 2(n/kappa - 1), n = 6
    let a = 2.0 * (6.0 / KAPPA - 1.0);
    let s = asymptotic_index_sup(&base(2, a, 2)).unwrap();
    assert_eq!(s.closed_form, IndexValue::Interval { lo: 14, hi: 16 });
    assert!(matches!(asymptotic_index_sup(&base(2, 0.0, 3)), Err(Error::Unsupported(_))));
}

#[test]
fn lower_bound_identity() {
    let tri = pascal(300);
    for n in 3..=5 {
        for &a in &[0.0, 0.5, 1.0, 3.5] {
            for m in 1..=5u32 {
                let c = lower_bound_chain(&base(n, a, m)).unwrap();
                assert_eq!(c.direct, c.rearranged, "N={n} alpha={a} m={m}");
                assert!(c.coarse <= c.rearranged);
                // direct form by hand
                let mut want: u128 = 1;
                for i in 1..m {
                    let top = ((2.0 + a) * (m - i) as f64).floor() as u32;
                    want += (0..=top).map(|j| oracle_multiplicity(&tri, n, j)).sum::<u128>();
                }
                assert_eq!(c.direct as u128, want);
            }
        }
    }
    assert_eq!(lower_bound_chain(&base(3, 0.0, 2)).unwrap().coarse, 10);
}

#[test]
fn gap_function_positive() {
    assert_eq!(gap_function(&base(3, 0.0, 2)).unwrap(), 2);
    let h3 = gap_function(&base(3, 0.0, 3)).unwrap();
    assert_eq!(h3, 2 + (5 + 7 + 9));
    for n in 3..=6 {
        for &a in &[0.0, 0.5, 1.0, 2.0, 3.5, 6.0] {
            for m in 2..=8 {
                assert!(gap_function(&base(n, a, m)).unwrap() > 0, "N={n} alpha={a} m={m}");
            }
        }
    }
}

#[test]
fn spectral_index_near_critical_exponent() {
    let ctx = SweepContext::default();
    let spec = ctx.spectrum_at(&base(3, 0.0, 1), 4.9).unwrap();
    let r = index_from_spectrum(&spec).unwrap();
    assert_eq!(r.total_index, 1);
    assert!(r.j_values[0] > 0.0 && r.j_values[0] <= 1.0);
    for &(n, a, m) in &[(3, 0.0, 1), (3, 0.0, 2), (3, 1.0, 2), (4, 0.0, 2), (3, 0.0, 3)] {
        let b = base(n, a, m);
        let p = 0.98 * b.critical_exponent();
        let r = index_from_spectrum(&ctx.spectrum_at(&b, p).unwrap()).unwrap();
        let sup = asymptotic_index_sup(&b).unwrap();
        let unresolved = r.ceiling_status.contains(&CeilingStatus::Unresolved);
        assert!(
            unresolved || sup.accepted.contains(r.total_index),
            "({n},{a},{m}) p={p}: index {} vs {:?}",
            r.total_index,
            sup
        );
        assert_eq!(r.radial_index, m);
    }
}

#[test]
fn spectral_index_planar_large_p() {
    let ctx = SweepContext::default();
    let r = index_from_spectrum(&ctx.spectrum_at(&base(2, 0.0, 2), 50.0).unwrap()).unwrap();
    assert_eq!(r.total_index, 12);
    let r = index_from_spectrum(&ctx.spectrum_at(&base(2, 0.0, 1), 50.0).unwrap()).unwrap();
    assert_eq!(r.total_index, 1);
}

#[test]
fn spectral_index_near_one() {
    let ctx = SweepContext::default();
    for &(n, a, m, p) in &[(3, 0.0, 2, 1.05), (2, 0.0, 2, 1.05), (4, 1.0, 2, 1.03), (3, 0.0, 3, 1.03)] {
        let b = base(n, a, m);
        let r = index_from_spectrum(&ctx.spectrum_at(&b, p).unwrap()).unwrap();
        assert!(r.total_index >= lower_bound_chain(&b).unwrap().coarse);
        let want = asymptotic_index_p1(&b).unwrap();
        assert!(want.contains(r.total_index), "({n},{a},{m}) p={p}: {} vs {want}", r.total_index);
    }
}

#[test]
fn gap_check_empirical() {
    let ctx = SweepContext::default();
    let b = base(3, 0.0, 2);
    let low = ctx.spectrum_at(&b, 1.05).unwrap();
    let high = ctx.spectrum_at(&b, 4.9).unwrap();
    let g = morse_gap_check(&b, Some((&low, &high))).unwrap();
    assert!(g.symbolic_holds);
    assert_eq!(g.empirical_holds, Some(true));
    assert_eq!((g.index_low, g.index_high), (Some(10), Some(5)));
    assert!(morse_gap_check(&base(2, 0.0, 2), None).is_err());
}

fn eigen_case() -> impl Strategy<Value = (BaseParams, Vec<f64>, usize, f64)> {
    (2u32..=6, 0.0f64..5.0, 1u32..=4)
        .prop_flat_map(|(n, a, m)| {
            (
                Just(base(n, a, m)),
                proptest::collection::vec(-60.0f64..-1e-3, m as usize),
                0..m as usize,
                0.0f64..5.0,
            )
        })
        .prop_map(|(b, mut nu, i, d)| {
            nu.sort_by(f64::total_cmp);
            (b, nu, i, d)
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, ..ProptestConfig::default() })]

    #[test]
    fn index_nonincreasing_in_each_eigenvalue((b, nu, i, d) in eigen_case()) {
        let params = b.with_power(1.5).unwrap();
        let before = index_from_eigenvalues(&params, &nu).unwrap();
        let mut raised = nu.clone();
        raised[i] = (raised[i] + d).min(-1e-4);
        let after = index_from_eigenvalues(&params, &raised).unwrap();
        prop_assert!(after.total_index <= before.total_index);
        prop_assert!(before.total_index >= b.nodal_zones as u64);
        prop_assert!(before.j_values.iter().all(|j| *j > 0.0));
        prop_assert_eq!(before.radial_index, b.nodal_zones);
    }

    #[test]
    fn multiplicity_sum_matches_terms(n in 2u32..=10, from in 0i64..40, len in 0i64..40) {
        let s = multiplicity_sum(n, from, from + len).unwrap();
        let t: u128 = (from..=from + len).map(|j| multiplicity(n, j as u32).unwrap()).sum();
        prop_assert_eq!(s, t);
    }
}

#[test]
fn report_serializes_with_stable_keys() {
    let p = ProblemParams::new(3, 0.0, 2, 2.0).unwrap();
    let r = index_from_eigenvalues(&p, &[-10.54, -1.75]).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        ["J", "ceiling_status", "ceilings", "contributions", "near_resonant", "nu", "params", "radial_index", "total_index"]
    );
    assert_eq!(r.total_index, 1 + 3 + 5 + 1);
}
