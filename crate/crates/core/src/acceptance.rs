//! The numbered acceptance checks, shared by the `acceptance` test target and
//! the `reproduce` subcommand.

use std::time::Instant;

use serde::Serialize;

use crate::bessel::{bessel_zero, compute_n_alpha_m, solve_beta_i, BesselOrder};
use crate::bifurcation::{locate_crossings, predicted_ranges, StatedCount, Theorem};
use crate::error::Result;
use crate::morse::{index_from_spectrum, lower_bound_chain};
use crate::params::BaseParams;
use crate::spectrum::{SpectrumOptions, SweepContext};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub within_budget: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn ok(&self) -> bool {
        self.passed && self.within_budget
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<34} {}  ({:.2} s of {:.0} s) {}",
            self.id,
            self.name,
            if self.ok() { "PASS" } else { "FAIL" },
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u32, &str, f64); 11] = [
    (1, "beta reproduction", 1.0),
    (2, "planar branch range", 1.0),
    (3, "Lane-Emden n-table", 10.0),
    (4, "Bessel zero inequality", 10.0),
    (5, "nu endpoint limits", 60.0),
    (6, "planar large-p spectral limit", 300.0),
    (7, "Morse index of positive solution", 30.0),
    (8, "Morse gap", 60.0),
    (9, "crossing existence and parity", 300.0),
    (10, "branch-count formulas", 30.0),
    (11, "property suites", 600.0),
];

type Check = fn(&SweepContext) -> Result<(bool, String)>;

fn check_for(id: u32) -> Check {
    match id {
        1 => c1,
        2 => c2,
        3 => c3,
        4 => c4,
        5 => c5,
        6 => c6,
        7 => c7,
        8 => c8,
        9 => c9,
        10 => c10,
        _ => c11,
    }
}

pub fn run_criterion(id: u32, ctx: &SweepContext) -> CriterionResult {
    let (_, name, budget) = CRITERIA[(id as usize).clamp(1, 11) - 1];
    let start = Instant::now();
    let (passed, detail) = match check_for(id)(ctx) {
        Ok(r) => r,
        Err(e) => (false, format!("error[{}]: {e}", e.category())),
    };
    let seconds = start.elapsed().as_secs_f64();
    CriterionResult { id, name, passed, within_budget: seconds < budget, seconds, budget_seconds: budget, detail }
}

pub fn run_all(ctx: &SweepContext) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _, _)| run_criterion(id, ctx)).collect()
}

pub fn markdown_report(results: &[CriterionResult]) -> String {
    let mut out = String::from("# Reproduction report\n\n");
    let passed = results.iter().filter(|r| r.ok()).count();
    out.push_str(&format!("{passed} of {} criteria pass.\n\n", results.len()));
    out.push_str("| # | criterion | verdict | time (s) | budget (s) | detail |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for r in results {
        out.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.0} | {} |\n",
            r.id,
            r.name,
            if r.ok() { "PASS" } else { "FAIL" },
            r.seconds,
            r.budget_seconds,
            r.detail.replace('|', "\\|")
        ));
    }
    out
}

fn base(n: u32, a: f64, m: u32) -> Result<BaseParams> {
    BaseParams::new(n, a, m)
}

fn c1(_: &SweepContext) -> Result<(bool, String)> {
    let beta = solve_beta_i(&base(2, 0.0, 2)?, 1)?;
    Ok(((2.300..=2.310).contains(&beta), format!("beta_1 = {beta:.9}")))
}

fn c2(_: &SweepContext) -> Result<(bool, String)> {
    let r = predicted_ranges(&base(2, 0.0, 2)?)?;
    Ok((r.n_range == (3, 5), format!("n = {}..={}", r.n_range.0, r.n_range.1)))
}

fn c3(_: &SweepContext) -> Result<(bool, String)> {
    let mut ok = true;
    let mut misses = Vec::new();
    for n in 3..=5 {
        for m in 2..=4u32 {
            let got = compute_n_alpha_m(&base(n, 0.0, m)?)?;
            if got != 2 * (m - 1) {
                ok = false;
                misses.push(format!("N={n} m={m}: {got} (expected {})", 2 * (m - 1)));
            }
        }
    }
    let detail = if ok { "all nine entries equal 2(m-1)".to_string() } else { misses.join("; ") };
    Ok((ok, detail))
}

fn c4(_: &SweepContext) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0, 0);
    for k in 0..=20 {
        let beta = 0.5 * k as f64;
        for m in 2..=5usize {
            let zm = bessel_zero(BesselOrder::new(beta)?, m)?;
            for i in 1..m {
                let zi = bessel_zero(BesselOrder::new(beta + 2.0 * (m - i) as f64)?, i)?;
                if zm - zi < worst {
                    worst = zm - zi;
                    at = (beta, i, m);
                }
            }
        }
    }
    Ok((worst > 0.0, format!("min margin {worst:.6} at beta={} i={} m={}", at.0, at.1, at.2)))
}

fn c5(ctx: &SweepContext) -> Result<(bool, String)> {
    let b = base(3, 0.0, 2)?;
    let beta1 = solve_beta_i(&b, 1)?;
    let limit1 = 0.25 - beta1 * beta1;
    let nu_low = ctx.eigenvalues_at(&b, 1.02)?[0];
    let nu_high = ctx.eigenvalues_at(&b, 4.9)?[0];
    let d1 = (nu_low - limit1).abs();
    let d2 = (nu_high + 2.0).abs();
    Ok((
        d1 <= 0.2 && d2 <= 0.15,
        format!("|nu_1(1.02) - ({limit1:.6})| = {d1:.4} (<= 0.2); |nu_1(4.9) + 2| = {d2:.4} (<= 0.15)"),
    ))
}

fn c6(ctx: &SweepContext) -> Result<(bool, String)> {
    let b = base(2, 0.0, 2)?;
    let mut roots = Vec::new();
    let mut last = Vec::new();
    for p in [20.0, 35.0, 50.0] {
        let nu = ctx.eigenvalues_at(&b, p)?;
        roots.push((-nu[0]).sqrt());
        last = nu;
    }
    let increasing = roots.windows(2).all(|w| w[1] > w[0]);
    let r2 = (-last[1]).sqrt();
    let ok = increasing && (4.4..=5.3).contains(&roots[2]) && (0.85..=1.1).contains(&r2);
    Ok((
        ok,
        format!(
            "sqrt(-nu_1) = {:.5}, {:.5}, {:.5}; sqrt(-nu_2(50)) = {r2:.5}",
            roots[0], roots[1], roots[2]
        ),
    ))
}

fn c7(ctx: &SweepContext) -> Result<(bool, String)> {
    let b = base(3, 0.0, 1)?;
    let mut idx = Vec::new();
    for p in [1.1, 2.0, 3.0, 4.5] {
        idx.push(index_from_spectrum(&ctx.spectrum_at(&b, p)?)?.total_index);
    }
    Ok((idx.iter().all(|&i| i == 1), format!("indices {idx:?}")))
}

fn c8(ctx: &SweepContext) -> Result<(bool, String)> {
    let b = base(3, 0.0, 2)?;
    let low = index_from_spectrum(&ctx.spectrum_at(&b, 1.05)?)?;
    let high = index_from_spectrum(&ctx.spectrum_at(&b, 4.8)?)?;
    let bound = lower_bound_chain(&b)?.coarse;
    Ok((
        low.total_index >= bound && high.total_index <= 5,
        format!("m(1.05) = {} (>= {bound}), m(4.8) = {} (<= 5)", low.total_index, high.total_index),
    ))
}

fn c9(ctx: &SweepContext) -> Result<(bool, String)> {
    let b = base(3, 0.0, 2)?;
    let scan = locate_crossings(&b, 2, (1.05, 4.8), 0.05, ctx)?;
    let count = scan.crossings.len();
    let flips = scan.crossings.iter().all(|c| {
        let known = |s: &Option<String>| matches!(s.as_deref(), Some("zero") | Some("plus-minus-one"));
        known(&c.cone_left) && known(&c.cone_right) && c.cone_left != c.cone_right
    });
    let ps: Vec<String> = scan.crossings.iter().map(|c| format!("{:.4}", c.p)).collect();
    Ok((count % 2 == 1 && flips, format!("{count} crossing(s) at p = [{}], index flips: {flips}", ps.join(", "))))
}

fn c10(_: &SweepContext) -> Result<(bool, String)> {
    let mut ok = true;
    let mut checked = 0;
    let mut misses = Vec::new();
    for n in 2..=4 {
        for &a in &[0.0, 1.0, 3.5] {
            for m in 1..=3 {
                let b = base(n, a, m)?;
                let pred = match predicted_ranges(&b) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                if pred.theorem == Theorem::PlanarNodal {
                    continue;
                }
                checked += 1;
                if !pred.count_consistent() {
                    ok = false;
                    let want = match pred.stated_count {
                        Some(StatedCount::Exact(k)) => format!("= {k}"),
                        Some(StatedCount::AtLeast(k)) => format!(">= {k}"),
                        None => String::new(),
                    };
                    misses.push(format!("N={n} alpha={a} m={m}: count {} (want {want})", pred.count));
                }
            }
        }
    }
    let detail = if ok { format!("{checked} cases consistent") } else { format!("{checked} cases; {}", misses.join("; ")) };
    Ok((ok, detail))
}

fn c11(ctx: &SweepContext) -> Result<(bool, String)> {
    let mut failures: Vec<String> = Vec::new();
    // eigenvalue bounds, node counts, orthogonality
    let cases = [(3, 0.0, 1, 2.0), (3, 0.0, 2, 2.0), (3, 0.0, 3, 1.5), (2, 0.0, 2, 3.0), (4, 1.0, 2, 2.0), (5, 3.5, 3, 1.3)];
    for &(n, a, m, p) in &cases {
        let b = base(n, a, m)?;
        let spec = ctx.spectrum_at(&b, p)?;
        for v in spec.bound_violations() {
            failures.push(format!("({n},{a},{m},{p}): {v}"));
        }
        for i in 0..spec.eigenvalues.len() {
            if spec.sign_changes(i) != i {
                failures.push(format!("({n},{a},{m},{p}): phi_{} has {} sign changes", i + 1, spec.sign_changes(i)));
            }
            for j in 0..spec.eigenvalues.len() {
                let g = spec.weighted_inner(i, j);
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-8 {
                    failures.push(format!("({n},{a},{m},{p}): <phi_{},phi_{}> = {g:e}", i + 1, j + 1));
                }
            }
        }
        let morse = index_from_spectrum(&spec)?;
        if morse.radial_index != m {
            failures.push(format!("radial index {} != {m}", morse.radial_index));
        }
    }
    // grid convergence at the benchmark point
    let b = base(3, 0.0, 2)?;
    let coarse = ctx.spectrum_at(&b, 2.0)?;
    let finer_opts = SpectrumOptions { step: ctx.spectrum.step / 2.0, ..ctx.spectrum.clone() };
    let finer_ctx = SweepContext { spectrum: finer_opts, cache: None, ..ctx.clone() };
    let fine = finer_ctx.spectrum_at(&b, 2.0)?;
    for (x, y) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
        let rel = ((x - y) / y).abs();
        if rel > 1e-6 {
            failures.push(format!("grid convergence: {x} vs {y} (rel {rel:e})"));
        }
    }
    // interlacing of Bessel zeros
    for k in 0..=8 {
        let beta = 0.75 * k as f64;
        let zb = crate::bessel::zero_table(BesselOrder::new(beta)?, 6)?;
        let zc = crate::bessel::zero_table(BesselOrder::new(beta + 1.0)?, 6)?;
        for i in 0..5 {
            if !(zb.zeros[i] < zc.zeros[i] && zc.zeros[i] < zb.zeros[i + 1]) {
                failures.push(format!("interlacing fails at beta = {beta}, i = {}", i + 1));
            }
        }
    }
    // summation identity
    for n in 3..=5 {
        for &a in &[0.0, 0.5, 1.0, 3.5] {
            for m in 1..=5 {
                let c = lower_bound_chain(&base(n, a, m)?)?;
                if c.direct != c.rearranged || c.coarse > c.rearranged {
                    failures.push(format!("lower-bound chain ({n},{a},{m}): {c:?}"));
                }
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok { "all property checks hold".to_string() } else { failures.join("; ") };
    Ok((ok, detail))
}
