//! Morse indices from singular eigenvalues, and the closed-form values at the
//! ends of the existence range.

use serde::{Deserialize, Serialize};

use crate::bessel::solve_beta_i;
use crate::error::{Error, Result};
use crate::params::{BaseParams, ProblemParams};
use crate::roots::{ceil_snapped, floor_snapped};
use crate::spectrum::SingularSpectrum;

/// Limit of sqrt(-nu_1) as p -> infinity for N = 2, m = 2 (four digits only).
pub const KAPPA: f64 = 5.1869;

/// J_i within this distance of an integer makes the ceiling unreliable.
pub const CEILING_GUARD: f64 = 1e-6;

/// Tolerance used when comparing alpha against a resonant value.
pub const RESONANCE_TOL: f64 = 1e-9;

/// N_j, the dimension of degree-j spherical harmonics on S^{N-1}.
pub fn multiplicity(dimension: u32, j: u32) -> Result<u128> {
    if dimension < 2 {
        return Err(Error::InvalidArgument(format!("dimension {dimension} < 2")));
    }
    let n = dimension as u128;
    let j = j as u128;
    // C(j+N-1, N-1) - C(j+N-3, N-1)
    let a = binomial(j + n - 1, n - 1)?;
    let b = if j >= 2 { binomial(j + n - 3, n - 1)? } else { 0 };
    Ok(a - b)
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(n - k + i)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k}) exceeds 128 bits")))?
            / i;
    }
    Ok(acc)
}

/// sum_{j=from}^{to} N_j (empty when to < from).
pub fn multiplicity_sum(dimension: u32, from: i64, to: i64) -> Result<u128> {
    let mut s: u128 = 0;
    for j in from.max(0)..=to {
        s = s
            .checked_add(multiplicity(dimension, j as u32)?)
            .ok_or_else(|| Error::Overflow("multiplicity sum exceeds 128 bits".into()))?;
    }
    Ok(s)
}

fn to_u64(x: u128) -> Result<u64> {
    u64::try_from(x).map_err(|_| Error::Overflow(format!("index {x} exceeds 64 bits")))
}

/// A Morse index that is either known exactly or only bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum IndexValue {
    Exact { value: u64 },
    Interval { lo: u64, hi: u64 },
}

impl IndexValue {
    pub fn contains(&self, x: u64) -> bool {
        match *self {
            IndexValue::Exact { value } => value == x,
            IndexValue::Interval { lo, hi } => lo <= x && x <= hi,
        }
    }

    pub fn lower(&self) -> u64 {
        match *self {
            IndexValue::Exact { value } => value,
            IndexValue::Interval { lo, .. } => lo,
        }
    }

    pub fn upper(&self) -> u64 {
        match *self {
            IndexValue::Exact { value } => value,
            IndexValue::Interval { hi, .. } => hi,
        }
    }
}

impl std::fmt::Display for IndexValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndexValue::Exact { value } => write!(f, "{value}"),
            IndexValue::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// How the ceiling of J_i - 1 was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CeilingStatus {
    Clear,
    /// J_i sits at (2+alpha)/2, where the sign of nu_i - critical level is
    /// known from the ordering bounds (above for i < m, below for i = m).
    ResolvedByBound,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub params: ProblemParams,
    pub nu: Vec<f64>,
    #[serde(rename = "J")]
    pub j_values: Vec<f64>,
    pub ceilings: Vec<i64>,
    pub ceiling_status: Vec<CeilingStatus>,
    pub total_index: u64,
    pub radial_index: u32,
    pub contributions: Vec<Vec<u64>>,
    pub near_resonant: bool,
}

/// J_i = ((2+alpha)/2)(sqrt(b^2 - nu) - b), b = (N-2)/(2+alpha).
pub fn j_value(base: &BaseParams, nu: f64) -> f64 {
    let b = base.bessel_base();
    0.5 * (2.0 + base.alpha) * ((b * b - nu).sqrt() - b)
}

/// Morse index from the m negative eigenvalues nu_1 < ... < nu_m.
pub fn index_from_eigenvalues(params: &ProblemParams, nu: &[f64]) -> Result<MorseReport> {
    let base = params.base();
    let m = base.nodal_zones as usize;
    if nu.len() != m {
        return Err(Error::CountMismatch { expected: m, found: nu.len() });
    }
    if let Some(bad) = nu.iter().find(|&&v| !(v < 0.0) || !v.is_finite()) {
        return Err(Error::Inconsistency(format!("eigenvalue {bad} is not negative")));
    }
    let resonant_j = 0.5 * (2.0 + base.alpha);
    let mut j_values = Vec::with_capacity(m);
    let mut ceilings = Vec::with_capacity(m);
    let mut status = Vec::with_capacity(m);
    let mut contributions = Vec::with_capacity(m);
    let mut total: u128 = 0;
    for (k, &v) in nu.iter().enumerate() {
        let j = j_value(&base, v);
        let near = (j - j.round()).abs() <= CEILING_GUARD;
        let (ceil, st) = if near && (j.round() - resonant_j).abs() <= CEILING_GUARD {
            let r = j.round() as i64;
            // above the level: ceil(J - 1) = r; below: r - 1
            if k + 1 < m {
                (r, CeilingStatus::ResolvedByBound)
            } else {
                (r - 1, CeilingStatus::ResolvedByBound)
            }
        } else if near {
            ((j - 1.0).ceil() as i64, CeilingStatus::Unresolved)
        } else {
            ((j - 1.0).ceil() as i64, CeilingStatus::Clear)
        };
        let terms = (0..=ceil.max(0))
            .map(|jj| multiplicity(base.dimension, jj as u32).and_then(to_u64))
            .collect::<Result<Vec<_>>>()?;
        total += terms.iter().map(|&t| t as u128).sum::<u128>();
        j_values.push(j);
        ceilings.push(ceil);
        status.push(st);
        contributions.push(terms);
    }
    Ok(MorseReport {
        params: params.clone(),
        nu: nu.to_vec(),
        j_values,
        ceilings,
        near_resonant: status.iter().any(|s| *s != CeilingStatus::Clear),
        ceiling_status: status,
        total_index: to_u64(total)?,
        radial_index: base.nodal_zones,
        contributions,
    })
}

pub fn index_from_spectrum(spec: &SingularSpectrum) -> Result<MorseReport> {
    index_from_eigenvalues(&spec.params, &spec.eigenvalues)
}

/// Morse index for p close to 1 from the beta_i.
pub fn asymptotic_index_p1(base: &BaseParams) -> Result<IndexValue> {
    base.validate()?;
    let m = base.nodal_zones as usize;
    let nd = base.dimension as f64;
    let a = base.alpha;
    let mut exact: u128 = 1;
    let mut extra: u128 = 0;
    for i in 1..m {
        let beta = solve_beta_i(base, i)?;
        let x = ((2.0 + a) * beta - nd) / 2.0;
        exact += multiplicity_sum(base.dimension, 0, ceil_snapped(x))?;
        // alpha_{i,n} = (2n + N)/beta_i - 2 for the nearest integer n
        let n = x.round();
        let alpha_res = (2.0 * n + nd) / beta - 2.0;
        if n >= 0.0 && (alpha_res - a).abs() <= RESONANCE_TOL {
            extra += multiplicity(base.dimension, (n as u32) + 1)?;
        }
    }
    if extra == 0 {
        Ok(IndexValue::Exact { value: to_u64(exact)? })
    } else {
        Ok(IndexValue::Interval { lo: to_u64(exact)?, hi: to_u64(exact + extra)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupIndex {
    /// The closed-form value at the top of the existence range.
    pub closed_form: IndexValue,
    /// The ceiling formula applied to the limiting eigenvalues, each placed on
    /// the side of its limit required by the ordering bounds.
    pub via_limits: IndexValue,
    pub discrepancy: bool,
    /// Hull of both values; what consistency checks compare against.
    pub accepted: IndexValue,
}

/// Morse index as p -> p_alpha (N >= 3) or p -> infinity (N = 2, m <= 2).
pub fn asymptotic_index_sup(base: &BaseParams) -> Result<SupIndex> {
    base.validate()?;
    let n = base.dimension;
    let m = base.nodal_zones as u128;
    let a = base.alpha;
    let half_ceil = ceil_snapped(a / 2.0);
    let (closed, via): (IndexValue, IndexValue) = if n >= 3 {
        let top = floor_snapped((2.0 + a) / 2.0);
        let closed = multiplicity_sum(n, 1, half_ceil)? + (m - 1) * multiplicity_sum(n, 0, top)?;
        // i < m: J_i slightly above (2+alpha)/2; i = m: slightly below.
        let via = (m - 1) * multiplicity_sum(n, 0, top)? + multiplicity_sum(n, 0, half_ceil)?;
        (IndexValue::Exact { value: to_u64(closed)? }, IndexValue::Exact { value: to_u64(via)? })
    } else if m == 1 {
        let v = to_u64(1 + 2 * half_ceil as u128)?;
        (IndexValue::Exact { value: v }, IndexValue::Exact { value: v })
    } else if m == 2 {
        let x = (2.0 + a) * KAPPA / 2.0;
        let tail = 2 * half_ceil as u64;
        let v = if (x - x.round()).abs() <= RESONANCE_TOL {
            let lo = 2 * x.round() as u64 + tail;
            IndexValue::Interval { lo, hi: lo + 2 }
        } else {
            IndexValue::Exact { value: 2 * x.ceil() as u64 + tail }
        };
        (v, v)
    } else {
        return Err(Error::Unsupported(format!(
            "N = 2 with m = {m}: the limit profile as p -> infinity is only available for m <= 2"
        )));
    };
    let accepted = IndexValue::Interval {
        lo: closed.lower().min(via.lower()),
        hi: closed.upper().max(via.upper()),
    };
    let accepted = match accepted {
        IndexValue::Interval { lo, hi } if lo == hi => IndexValue::Exact { value: lo },
        other => other,
    };
    Ok(SupIndex { closed_form: closed, discrepancy: closed != via, via_limits: via, accepted })
}

/// The three forms of the lower bound on the index for p near 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundChain {
    /// 1 + sum_{i<m} sum_{j=0}^{[(2+alpha)(m-i)]} N_j
    pub direct: u64,
    /// m + sum_k (m-k) sum_{j=1+[(2+alpha)(k-1)]}^{[(2+alpha)k]} N_j
    pub rearranged: u64,
    /// m + sum_k (m-k) sum_{j=1+(2+[alpha])(k-1)}^{(2+[alpha])k} N_j
    pub coarse: u64,
}

pub fn lower_bound_chain(base: &BaseParams) -> Result<LowerBoundChain> {
    base.validate()?;
    let n = base.dimension;
    let m = base.nodal_zones as i64;
    let a = base.alpha;
    let fl = |k: i64| floor_snapped((2.0 + a) * k as f64);
    let mut direct: u128 = 1;
    for i in 1..m {
        direct += multiplicity_sum(n, 0, fl(m - i))?;
    }
    let mut rearranged: u128 = m as u128;
    for k in 1..m {
        rearranged += (m - k) as u128 * multiplicity_sum(n, 1 + fl(k - 1), fl(k))?;
    }
    let step = 2 + floor_snapped(a);
    let mut coarse: u128 = m as u128;
    for k in 1..m {
        coarse += (m - k) as u128 * multiplicity_sum(n, 1 + step * (k - 1), step * k)?;
    }
    Ok(LowerBoundChain { direct: to_u64(direct)?, rearranged: to_u64(rearranged)?, coarse: to_u64(coarse)? })
}

/// h(m) = sum_{i<m} (m-i) sum_{j=1+(2+[alpha])(i-1)}^{(2+[alpha])i} N_j - m sum_{j=1}^{1+[alpha/2]} N_j
pub fn gap_function(base: &BaseParams) -> Result<i128> {
    base.validate()?;
    let n = base.dimension;
    let m = base.nodal_zones as i64;
    let step = 2 + floor_snapped(base.alpha);
    let mut pos: u128 = 0;
    for i in 1..m {
        pos += (m - i) as u128 * multiplicity_sum(n, 1 + step * (i - 1), step * i)?;
    }
    let neg = m as u128 * multiplicity_sum(n, 1, 1 + floor_snapped(base.alpha / 2.0))?;
    let pos = i128::try_from(pos).map_err(|_| Error::Overflow("h(m) exceeds 127 bits".into()))?;
    let neg = i128::try_from(neg).map_err(|_| Error::Overflow("h(m) exceeds 127 bits".into()))?;
    Ok(pos - neg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub h: i128,
    pub symbolic_holds: bool,
    pub p_low: Option<f64>,
    pub p_high: Option<f64>,
    pub index_low: Option<u64>,
    pub index_high: Option<u64>,
    pub empirical_holds: Option<bool>,
}

/// Checks that the index drops between p near 1 and p near p_alpha: the
/// symbolic h(m) > 0, and, when spectra are given, the computed indices.
pub fn morse_gap_check(base: &BaseParams, spectra: Option<(&SingularSpectrum, &SingularSpectrum)>) -> Result<GapReport> {
    if base.dimension < 3 || base.nodal_zones < 2 {
        return Err(Error::InvalidArgument("the Morse gap needs N >= 3 and m >= 2".into()));
    }
    let h = gap_function(base)?;
    let mut report = GapReport {
        h,
        symbolic_holds: h > 0,
        p_low: None,
        p_high: None,
        index_low: None,
        index_high: None,
        empirical_holds: None,
    };
    if let Some((low, high)) = spectra {
        let il = index_from_spectrum(low)?.total_index;
        let ih = index_from_spectrum(high)?.total_index;
        report.p_low = Some(low.params.power);
        report.p_high = Some(high.params.power);
        report.index_low = Some(il);
        report.index_high = Some(ih);
        report.empirical_holds = Some(il > ih);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: u32, a: f64, m: u32) -> BaseParams {
        BaseParams::new(n, a, m).unwrap()
    }

    #[test]
    fn multiplicities() {
        for n in 2..=10 {
            assert_eq!(multiplicity(n, 0).unwrap(), 1);
        }
        assert_eq!(multiplicity(3, 1).unwrap(), 3);
        assert_eq!(multiplicity(2, 7).unwrap(), 2);
        assert_eq!(multiplicity(4, 2).unwrap(), 9);
        assert_eq!(multiplicity(5, 1).unwrap(), 5);
        assert!(multiplicity(10, 200).unwrap() > 0);
    }

    #[test]
    fn ceiling_formula_at_critical_level() {
        let p = ProblemParams::new(3, 0.0, 1, 4.9).unwrap();
        let r = index_from_eigenvalues(&p, &[-2.0]).unwrap();
        assert_eq!(r.total_index, 1);
        assert_eq!(r.ceiling_status[0], CeilingStatus::ResolvedByBound);
        let p = ProblemParams::new(3, 0.0, 2, 4.9).unwrap();
        let r = index_from_eigenvalues(&p, &[-2.0 - 1e-9, -2.0 + 1e-9]).unwrap();
        assert_eq!(r.total_index, 4 + 1);
    }

    #[test]
    fn unresolved_flagged() {
        // J = 2 is an integer but not the critical value 1 when alpha = 0
        let p = ProblemParams::new(3, 0.0, 1, 2.0).unwrap();
        let nu = -(2.5f64 * 2.5 - 0.25);
        let r = index_from_eigenvalues(&p, &[nu]).unwrap();
        assert!(r.near_resonant);
        assert_eq!(r.ceiling_status[0], CeilingStatus::Unresolved);
    }

    #[test]
    fn rejects_nonnegative_and_wrong_count() {
        let p = ProblemParams::new(3, 0.0, 2, 2.0).unwrap();
        assert!(index_from_eigenvalues(&p, &[-1.0]).is_err());
        assert!(index_from_eigenvalues(&p, &[-3.0, 0.0]).is_err());
    }

    #[test]
    fn sup_closed_forms() {
        assert_eq!(asymptotic_index_sup(&base(2, 0.0, 1)).unwrap().closed_form, IndexValue::Exact { value: 1 });
        assert_eq!(asymptotic_index_sup(&base(2, 0.0, 2)).unwrap().closed_form, IndexValue::Exact { value: 12 });
        let s = asymptotic_index_sup(&base(3, 0.0, 2)).unwrap();
        assert_eq!(s.closed_form, IndexValue::Exact { value: 4 });
        assert_eq!(s.via_limits, IndexValue::Exact { value: 5 });
        assert!(s.discrepancy);
        let s = asymptotic_index_sup(&base(3, 0.0, 1)).unwrap();
        assert_eq!(s.closed_form, IndexValue::Exact { value: 0 });
        assert_eq!(s.via_limits, IndexValue::Exact { value: 1 });
        assert!(matches!(asymptotic_index_sup(&base(2, 0.0, 3)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_function(&base(3, 0.0, 2)).unwrap(), 2);
        assert!(gap_function(&base(3, 2.0, 2)).unwrap() > 0);
        let h3 = gap_function(&base(3, 0.0, 3)).unwrap();
        let tail: i128 = (2..=4).map(|j| multiplicity(3, j).unwrap() as i128).sum();
        assert_eq!(h3, 2 + tail);
    }
}
