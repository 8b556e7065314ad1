//! Nonradial bifurcation: predicted branch ranges, the sign condition on the
//! endpoint limits of nu_1, location of the crossings nu_1(p) = -c_n, and the
//! cone-index dichotomy on either side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{compute_n_alpha_m, solve_beta_i};
use crate::error::{Error, Result};
use crate::morse::KAPPA;
use crate::params::BaseParams;
use crate::roots::{ceil_snapped, floor_snapped};
use crate::spectrum::{nu1_curve, SingularSpectrum, SweepContext};

/// Residual below which nu_i = -c_j is treated as a degeneracy.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Width of the final bracket around a crossing.
pub const CROSSING_PTOL: f64 = 1e-4;
/// Offset used to sample the cone index on either side of a crossing.
pub const CONE_OFFSET: f64 = 0.02;
/// Default upper end of the scan window for N = 2.
pub const PLANAR_P_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Positive,
    PlanarNodal,
    HigherDim,
    LaneEmden,
}

impl Theorem {
    pub fn tag(self) -> &'static str {
        match self {
            Theorem::Positive => "positive",
            Theorem::PlanarNodal => "planar-nodal",
            Theorem::HigherDim => "higher-dim",
            Theorem::LaneEmden => "lane-emden",
        }
    }
}

/// What the theorem asserts about the number of branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum StatedCount {
    Exact(i64),
    AtLeast(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPrediction {
    pub theorem: Theorem,
    pub n_range: (i64, i64),
    pub count: i64,
    pub stated_count: Option<StatedCount>,
    pub formula: String,
}

impl BranchPrediction {
    pub fn contains(&self, n: i64) -> bool {
        self.n_range.0 <= n && n <= self.n_range.1
    }

    /// Whether `count` agrees with the theorem's count expression.
    pub fn count_consistent(&self) -> bool {
        match self.stated_count {
            Some(StatedCount::Exact(k)) => self.count == k,
            Some(StatedCount::AtLeast(k)) => self.count >= k,
            None => true,
        }
    }
}

fn unsupported_planar(m: u32) -> Error {
    Error::Unsupported(format!(
        "N = 2 with m = {m}: the limit of nu_1 as p -> infinity is only available for m <= 2"
    ))
}

/// Range of n for which a nonradial branch is predicted to bifurcate.
pub fn predicted_ranges(base: &BaseParams) -> Result<BranchPrediction> {
    base.validate()?;
    let a = base.alpha;
    let m = base.nodal_zones;
    let n = base.dimension;
    let (theorem, lo, hi, stated, formula) = if m == 1 {
        if a <= 0.0 {
            return Err(Error::InvalidArgument("positive solutions bifurcate only for alpha > 0".into()));
        }
        let hi = ceil_snapped(a / 2.0);
        (Theorem::Positive, 1, hi, Some(StatedCount::Exact(hi)), "n = 1 ..= ceil(alpha/2)")
    } else if n == 2 {
        if m != 2 {
            return Err(unsupported_planar(m));
        }
        let beta = solve_beta_i(base, 1)?;
        let lo = floor_snapped((2.0 + a) * beta / 2.0 + 1.0);
        let hi = ceil_snapped((2.0 + a) * KAPPA / 2.0 - 1.0);
        (
            Theorem::PlanarNodal,
            lo,
            hi,
            None,
            "n = [(2+alpha) beta/2 + 1] ..= ceil((2+alpha) kappa/2 - 1)",
        )
    } else {
        let top = compute_n_alpha_m(base)? as i64;
        let lo = 2 + floor_snapped(a / 2.0);
        let mi = m as i64;
        if a == 0.0 {
            (Theorem::LaneEmden, lo, top, Some(StatedCount::Exact(2 * mi - 3)), "n = 2 ..= n_0^m")
        } else {
            let bound = 2 * mi - 3 + floor_snapped(a * (mi - 1) as f64) - floor_snapped(a / 2.0);
            (
                Theorem::HigherDim,
                lo,
                top,
                Some(StatedCount::AtLeast(bound)),
                "n = 2 + [alpha/2] ..= n_alpha^m",
            )
        }
    };
    Ok(BranchPrediction {
        theorem,
        n_range: (lo, hi),
        count: (hi - lo + 1).max(0),
        stated_count: stated,
        formula: formula.to_string(),
    })
}

/// Limits of nu_1 at both ends of the existence range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub p_to_1: f64,
    pub p_to_sup: f64,
}

pub fn nu1_limits(base: &BaseParams) -> Result<Endpoints> {
    base.validate()?;
    let b = base.bessel_base();
    let beta1 = solve_beta_i(base, 1)?;
    let p_to_1 = b * b - beta1 * beta1;
    let p_to_sup = if base.dimension >= 3 {
        base.critical_level()
    } else {
        match base.nodal_zones {
            1 => -1.0,
            2 => -KAPPA * KAPPA,
            m => return Err(unsupported_planar(m)),
        }
    };
    Ok(Endpoints { p_to_1, p_to_sup })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientCondition {
    pub n: u32,
    pub level: f64,
    pub endpoints: Endpoints,
    pub product: f64,
    pub holds: bool,
}

/// (lim_{p->1} nu_1 + c_n)(lim_{p->sup} nu_1 + c_n) < 0, with factors that
/// vanish to rounding treated as zero.
pub fn check_sufficient_condition(base: &BaseParams, n: u32) -> Result<SufficientCondition> {
    if n == 0 {
        return Err(Error::InvalidArgument("angular mode n must be >= 1".into()));
    }
    let endpoints = nu1_limits(base)?;
    let c = base.angular_level(n);
    let g1 = endpoints.p_to_1 + c;
    let g2 = endpoints.p_to_sup + c;
    let zero = |g: f64, e: f64| g.abs() <= 1e-12 * c.abs().max(e.abs()).max(1.0);
    let product = g1 * g2;
    let holds = !zero(g1, endpoints.p_to_1) && !zero(g2, endpoints.p_to_sup) && product < 0.0;
    Ok(SufficientCondition { n, level: -c, endpoints, product, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeIndex {
    Zero,
    PlusMinusOne,
}

impl ConeIndex {
    pub fn label(self) -> &'static str {
        match self {
            ConeIndex::Zero => "zero",
            ConeIndex::PlusMinusOne => "plus-minus-one",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyEntry {
    pub i: usize,
    pub j: u32,
    pub residual: f64,
    pub degenerate: bool,
}

fn is_degenerate(residual: f64, level: f64) -> bool {
    residual.abs() <= DEGENERACY_TOL * level.abs().max(1.0)
}

/// nu_i + c_j for i <= m and 1 <= j <= j_max.
pub fn degeneracy_table_from(base: &BaseParams, nu: &[f64], j_max: u32) -> Result<Vec<DegeneracyEntry>> {
    if j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(nu.len() * j_max as usize);
    for (k, &v) in nu.iter().enumerate() {
        for j in 1..=j_max {
            let c = base.angular_level(j);
            let residual = v + c;
            out.push(DegeneracyEntry { i: k + 1, j, residual, degenerate: is_degenerate(residual, c) });
        }
    }
    Ok(out)
}

pub fn degeneracy_table(spec: &SingularSpectrum, j_max: u32) -> Result<Vec<DegeneracyEntry>> {
    degeneracy_table_from(&spec.params.base(), &spec.eigenvalues, j_max)
}

/// Smallest j_max whose level exceeds every |nu_i|: larger modes cannot match.
fn relevant_modes(base: &BaseParams, nu: &[f64]) -> u32 {
    let top = nu.iter().fold(0.0f64, |acc, v| acc.max(-v));
    let mut j = 1;
    while base.angular_level(j) <= top * (1.0 + DEGENERACY_TOL) + DEGENERACY_TOL {
        j += 1;
    }
    j
}

/// Cone index from nu_1 against the n-th level, after checking that no
/// nu_i meets any angular level.
pub fn classify_from_eigenvalues(base: &BaseParams, nu: &[f64], n: u32) -> Result<ConeIndex> {
    if n == 0 {
        return Err(Error::InvalidArgument("angular mode n must be >= 1".into()));
    }
    let j_max = relevant_modes(base, nu).max(n);
    if let Some(d) = degeneracy_table_from(base, nu, j_max)?.into_iter().find(|d| d.degenerate) {
        return Err(Error::Degenerate { i: d.i, j: d.j, residual: d.residual });
    }
    let level = -base.angular_level(n);
    Ok(if nu[0] < level { ConeIndex::Zero } else { ConeIndex::PlusMinusOne })
}

pub fn classify_cone_index(spec: &SingularSpectrum, n: u32) -> Result<ConeIndex> {
    classify_from_eigenvalues(&spec.params.base(), &spec.eigenvalues, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub p: f64,
    pub bracket: (f64, f64),
    pub cone_left: Option<String>,
    pub cone_right: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub n: u32,
    pub level: f64,
    pub crossings: Vec<Crossing>,
    pub failed_samples: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Default scan window: [1.05, 0.98 p_alpha] for N >= 3, [1.05, p_max] for N = 2.
pub fn default_window(base: &BaseParams, p_max: Option<f64>) -> (f64, f64) {
    if base.dimension == 2 {
        (1.05, p_max.unwrap_or(PLANAR_P_MAX))
    } else {
        let cap = 0.98 * base.critical_exponent();
        (1.05, p_max.map_or(cap, |p| p.min(cap)))
    }
}

/// Default sampling step: 0.05, or 0.25 for windows reaching beyond p = 10.
pub fn default_step(window: (f64, f64)) -> f64 {
    if window.1 > 10.0 {
        0.25
    } else {
        0.05
    }
}

/// Equally spaced samples lo, lo + step, ..., ending exactly at hi.
pub fn sample_grid(window: (f64, f64), step: f64) -> Vec<f64> {
    let (lo, hi) = window;
    let count = ((hi - lo) / step - 1e-9).ceil().max(0.0) as usize;
    let mut out: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();
    out.push(hi);
    out
}

fn covers_existence_range(base: &BaseParams, window: (f64, f64)) -> bool {
    let top = if base.dimension == 2 { 50.0 } else { 0.95 * base.critical_exponent() };
    window.0 <= 1.1 && window.1 >= top
}

fn validate_window(base: &BaseParams, window: (f64, f64), step: f64) -> Result<()> {
    let pa = base.critical_exponent();
    if !(window.0 > 1.0 && window.0 < window.1 && window.1 < pa) {
        return Err(Error::InvalidArgument(format!(
            "scan window [{}, {}] must lie inside (1, {pa})",
            window.0, window.1
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("p step {step} must be positive")));
    }
    Ok(())
}

fn cone_label(base: &BaseParams, ctx: &SweepContext, p: f64, n: u32) -> Option<String> {
    match ctx.eigenvalues_at(base, p) {
        Ok(nu) => Some(match classify_from_eigenvalues(base, &nu, n) {
            Ok(c) => c.label().to_string(),
            Err(Error::Degenerate { i, j, .. }) => format!("degenerate (i = {i}, j = {j})"),
            Err(e) => format!("failed: {e}"),
        }),
        Err(_) => None,
    }
}

fn refine(base: &BaseParams, ctx: &SweepContext, c: f64, mut a: f64, mut ga: f64, mut b: f64) -> Result<(f64, f64)> {
    while b - a > CROSSING_PTOL {
        let mid = 0.5 * (a + b);
        let g = ctx.eigenvalues_at(base, mid)?[0] + c;
        if g == 0.0 {
            return Ok((mid, mid));
        }
        if (g < 0.0) == (ga < 0.0) {
            a = mid;
            ga = g;
        } else {
            b = mid;
        }
    }
    Ok((a, b))
}

fn crossings_from_samples(
    base: &BaseParams,
    n: u32,
    window: (f64, f64),
    samples: &[(f64, Option<f64>)],
    ctx: &SweepContext,
) -> CrossingScan {
    let c = base.angular_level(n);
    let mut warnings = Vec::new();
    let failed_samples: Vec<f64> = samples.iter().filter(|s| s.1.is_none()).map(|s| s.0).collect();
    let good: Vec<(f64, f64)> = samples.iter().filter_map(|&(p, v)| v.map(|v| (p, v + c))).collect();
    let mut brackets = Vec::new();
    for w in good.windows(2) {
        let (pa, ga) = w[0];
        let (pb, gb) = w[1];
        if ga == 0.0 {
            brackets.push((pa, pa, ga));
        } else if (ga < 0.0) != (gb < 0.0) && gb != 0.0 {
            brackets.push((pa, pb, ga));
        }
    }
    if let Some(&(p, g)) = good.last() {
        if g == 0.0 {
            brackets.push((p, p, g));
        }
    }
    let refined: Vec<Result<(f64, f64)>> = ctx.install(|| {
        brackets
            .par_iter()
            .map(|&(a, b, ga)| if a == b { Ok((a, b)) } else { refine(base, ctx, c, a, ga, b) })
            .collect()
    });
    let mut crossings = Vec::new();
    for (r, br) in refined.into_iter().zip(&brackets) {
        match r {
            Ok((a, b)) => {
                let p = 0.5 * (a + b);
                crossings.push(Crossing {
                    p,
                    bracket: (a, b),
                    cone_left: cone_label(base, ctx, p - CONE_OFFSET, n),
                    cone_right: cone_label(base, ctx, p + CONE_OFFSET, n),
                });
            }
            Err(e) => warnings.push(format!("refinement in [{}, {}] failed: {e}", br.0, br.1)),
        }
    }
    if !failed_samples.is_empty() {
        warnings.push(format!("{} sample(s) failed and were skipped", failed_samples.len()));
    }
    if let Ok(cond) = check_sufficient_condition(base, n) {
        if cond.holds && crossings.is_empty() {
            warnings.push(format!(
                "no crossing found for n = {n} although the endpoint condition holds; window [{}, {}] may be too small",
                window.0, window.1
            ));
        } else if cond.holds && covers_existence_range(base, window) && crossings.len() % 2 == 0 {
            warnings.push(format!("even number ({}) of crossings for n = {n} on a full window", crossings.len()));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    CrossingScan { n, level: -c, crossings, failed_samples, warnings }
}

/// All p in the window where nu_1(p) crosses -c_n, each refined to
/// CROSSING_PTOL.
pub fn locate_crossings(
    base: &BaseParams,
    n: u32,
    window: (f64, f64),
    step: f64,
    ctx: &SweepContext,
) -> Result<CrossingScan> {
    if n == 0 {
        return Err(Error::InvalidArgument("angular mode n must be >= 1".into()));
    }
    validate_window(base, window, step)?;
    let grid = sample_grid(window, step);
    let curve = nu1_curve(base, &grid, ctx)?;
    let samples: Vec<(f64, Option<f64>)> = curve.iter().map(|pt| (pt.p, pt.nu1())).collect();
    Ok(crossings_from_samples(base, n, window, &samples, ctx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasParams {
    pub dimension: u32,
    pub alpha: f64,
    pub nodal_zones: u32,
    pub p_window: (f64, f64),
    pub p_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub n: u32,
    pub target_level: f64,
    pub condition_holds: bool,
    pub endpoints: Endpoints,
    pub crossings: Vec<Crossing>,
    pub cone_index_left: Option<String>,
    pub cone_index_right: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationAtlas {
    pub params: AtlasParams,
    pub entries: Vec<AtlasEntry>,
}

/// Scan n = n_min..=n_max on one shared nu_1 curve.
pub fn scan(
    base: &BaseParams,
    n_range: (u32, u32),
    window: (f64, f64),
    step: f64,
    ctx: &SweepContext,
) -> Result<BifurcationAtlas> {
    if n_range.0 == 0 || n_range.0 > n_range.1 {
        return Err(Error::InvalidArgument(format!("bad n range {}..={}", n_range.0, n_range.1)));
    }
    validate_window(base, window, step)?;
    let grid = sample_grid(window, step);
    let curve = nu1_curve(base, &grid, ctx)?;
    let samples: Vec<(f64, Option<f64>)> = curve.iter().map(|pt| (pt.p, pt.nu1())).collect();
    let mut entries = Vec::new();
    for n in n_range.0..=n_range.1 {
        let cond = check_sufficient_condition(base, n)?;
        let found = crossings_from_samples(base, n, window, &samples, ctx);
        entries.push(AtlasEntry {
            n,
            target_level: found.level,
            condition_holds: cond.holds,
            endpoints: cond.endpoints,
            cone_index_left: found.crossings.first().and_then(|c| c.cone_left.clone()),
            cone_index_right: found.crossings.last().and_then(|c| c.cone_right.clone()),
            crossings: found.crossings,
            warnings: found.warnings,
        });
    }
    Ok(BifurcationAtlas {
        params: AtlasParams {
            dimension: base.dimension,
            alpha: base.alpha,
            nodal_zones: base.nodal_zones,
            p_window: window,
            p_step: step,
        },
        entries,
    })
}
