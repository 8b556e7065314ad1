//! Negative singular eigenvalues nu_1 < ... < nu_m of
//! -(t^{M-1} phi')' - t^{M-1} a_p phi = nu t^{M-3} phi on (0, 1), phi(1) = 0.
//!
//! In s = ln t the problem reads -(w phi_s)_s - w V phi = nu w phi with
//! w = e^{(M-2)s} and V(s) = t^2 a_p(t), which is scale free. It is
//! discretized by cell-centred finite volumes on a piecewise uniform s-mesh
//! whose nodes include the zeros of v_p (where V has a cusp), truncated on the
//! left where the eigenfunctions have decayed, and Richardson-extrapolated
//! over two mesh widths.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::cache::NuCache;
use crate::error::{Error, Result};
use crate::params::{BaseParams, ProblemParams};
use crate::radial::{solve_radial_with, RadialOptions, RadialProfile};
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Mesh width in s on the coarse grid; the fine grid halves it.
    pub step: f64,
    /// Mesh width multiplier left of the region where V is significant.
    pub far_step_factor: f64,
    /// Required sqrt(q - nu_m) * extent, i.e. decay of phi_m in e-folds.
    pub decay_margin: f64,
    pub initial_extent: f64,
    pub max_extent: f64,
    pub richardson: bool,
    pub rayleigh_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            step: 0.01,
            far_step_factor: 4.0,
            decay_margin: 20.0,
            initial_extent: 20.0,
            max_extent: 4000.0,
            richardson: true,
            rayleigh_tol: 1e-7,
        }
    }
}

impl SpectrumOptions {
    /// Stable text key for cache lookups.
    pub fn fingerprint(&self) -> String {
        format!(
            "h{:e}-f{:e}-d{:e}-x{:e}-r{}",
            self.step, self.far_step_factor, self.decay_margin, self.max_extent, self.richardson
        )
    }
}

/// A singular problem in s = ln t on (-inf, 0].
pub struct SingularProblem<'a> {
    pub m_dim: f64,
    /// V(s) = t^2 a(t).
    pub potential: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Points in (core_start, 0) where V is not smooth; they become mesh nodes.
    pub kinks: Vec<f64>,
    /// Left of this point V is negligible and the coarser far mesh is used.
    pub core_start: f64,
}

/// The discretized operator, scaled to a standard symmetric problem
/// C psi = nu psi with psi = B^{1/2} phi.
pub struct Discretization {
    /// Mesh nodes, endpoints included (phi vanishes there).
    pub nodes: Vec<f64>,
    pub matrix: SymTridiagonal,
    /// ln B_k at interior nodes.
    pub log_mass: Vec<f64>,
    /// Cell averages of V against w at interior nodes.
    pub cell_potential: Vec<f64>,
    m_dim: f64,
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// int_0^d e^{c u} du for either sign of d.
fn exp_integral(c: f64, d: f64) -> f64 {
    if (c * d).abs() < 1e-8 {
        d * (1.0 + 0.5 * c * d)
    } else {
        (c * d).exp_m1() / c
    }
}

impl<'a> SingularProblem<'a> {
    fn mesh(&self, extent: f64, step: f64, far_factor: f64) -> Vec<f64> {
        let left = self.core_start - extent;
        let mut breaks = vec![left, self.core_start];
        breaks.extend(self.kinks.iter().copied().filter(|&k| k > self.core_start && k < 0.0));
        breaks.push(0.0);
        let mut nodes = vec![left];
        for (idx, w) in breaks.windows(2).enumerate() {
            let h = if idx == 0 { step * far_factor } else { step };
            let n = ((w[1] - w[0]) / h).ceil().max(2.0) as usize;
            for k in 1..=n {
                nodes.push(if k == n { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / n as f64 });
            }
        }
        nodes
    }

    /// int over [x, x + d] of e^{(M-2)(s - x)} V(s) ds (d of either sign),
    /// graded towards x when x is a kink.
    fn half_cell(&self, x: f64, d: f64, graded: bool) -> f64 {
        let c = self.m_dim - 2.0;
        let v = self.potential;
        let gauss = |a: f64, b: f64| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            GL4.iter().map(|&(u, w)| {
                let s = mid + half * u;
                w * (c * (s - x)).exp() * v(s)
            }).sum::<f64>() * half
        };
        if !graded {
            return gauss(x, x + d);
        }
        let mut total = 0.0;
        let mut outer = d;
        for _ in 0..40 {
            let inner = 0.5 * outer;
            total += gauss(x + inner, x + outer);
            outer = inner;
        }
        total + gauss(x, x + outer)
    }

    pub fn discretize(&self, extent: f64, step: f64, far_factor: f64) -> Discretization {
        let nodes = self.mesh(extent, step, far_factor);
        let c = self.m_dim - 2.0;
        let n = nodes.len() - 2;
        let kink_tol = 1e-12;
        let is_kink = |x: f64| self.kinks.iter().any(|k| (k - x).abs() <= kink_tol);
        let mut log_mass = Vec::with_capacity(n);
        let mut cell_potential = Vec::with_capacity(n);
        let mut stiff_left = Vec::with_capacity(n);
        let mut stiff_right = Vec::with_capacity(n);
        for k in 1..=n {
            let x = nodes[k];
            let hl = x - nodes[k - 1];
            let hr = nodes[k + 1] - x;
            let i = exp_integral(c, 0.5 * hr) - exp_integral(c, -0.5 * hl);
            let lb = c * x + i.ln();
            let graded = is_kink(x);
            let vint = self.half_cell(x, 0.5 * hr, graded) - self.half_cell(x, -0.5 * hl, graded);
            log_mass.push(lb);
            cell_potential.push(vint / i);
            stiff_left.push((c * (x - 0.5 * hl) - lb).exp() / hl);
            stiff_right.push((c * (x + 0.5 * hr) - lb).exp() / hr);
        }
        let diag: Vec<f64> = (0..n).map(|k| stiff_left[k] + stiff_right[k] - cell_potential[k]).collect();
        let off: Vec<f64> = (0..n.saturating_sub(1))
            .map(|k| {
                let mid = 0.5 * (nodes[k + 1] + nodes[k + 2]);
                let h = nodes[k + 2] - nodes[k + 1];
                -(c * mid - 0.5 * (log_mass[k] + log_mass[k + 1])).exp() / h
            })
            .collect();
        Discretization { nodes, matrix: SymTridiagonal::new(diag, off), log_mass, cell_potential, m_dim: self.m_dim }
    }
}

impl Discretization {
    pub fn negative_count(&self) -> usize {
        self.matrix.count_below(0.0)
    }

    /// Lowest `count` eigenvalues with phi at interior nodes, normalized by
    /// sum B_k phi_k^2 = 1.
    pub fn lowest(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        (0..count)
            .map(|k| {
                let lam = self.matrix.eigenvalue(k);
                let psi = self.matrix.eigenvector(lam);
                let phi: Vec<f64> = psi.iter().zip(&self.log_mass).map(|(p, lb)| p * (-0.5 * lb).exp()).collect();
                (lam, phi)
            })
            .collect()
    }

    /// Q(phi) = int w (phi_s^2 - V phi^2) ds and the weighted mass
    /// int w phi^2 ds, assembled edge by edge from the unscaled operator.
    pub fn quadratic_form(&self, phi: &[f64]) -> (f64, f64) {
        let c = self.m_dim - 2.0;
        let n = phi.len();
        let at = |k: usize| if k == 0 || k > n { 0.0 } else { phi[k - 1] };
        let mut grad = 0.0;
        for e in 0..=n {
            let (a, b) = (self.nodes[e], self.nodes[e + 1]);
            let d = at(e + 1) - at(e);
            grad += (c * 0.5 * (a + b)).exp() * d * d / (b - a);
        }
        let mut pot = 0.0;
        let mut mass = 0.0;
        for k in 0..n {
            let b = self.log_mass[k].exp();
            pot += self.cell_potential[k] * b * phi[k] * phi[k];
            mass += b * phi[k] * phi[k];
        }
        (grad - pot, mass)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub params: ProblemParams,
    /// Interior zeros of the analyzed profile.
    pub profile_zeros: Vec<f64>,
    pub profile_sup_norm: f64,
    /// Richardson-extrapolated eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues of the fine discretization.
    pub fine_eigenvalues: Vec<f64>,
    pub coarse_eigenvalues: Vec<f64>,
    /// t-nodes of the fine mesh, endpoints included.
    pub grid: Vec<f64>,
    /// phi_i on `grid`, with int t^{M-3} phi_i^2 dt = 1 and phi_i > 0 on
    /// the nodal domain nearest the origin.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// ((M-2)/2)^2, the bottom of the continuous spectrum.
    pub admissibility_threshold: f64,
    pub negative_count: usize,
    /// Length in s of the truncated domain below the core.
    pub extent: f64,
    pub step: f64,
    pub rayleigh_residuals: Vec<f64>,
    /// Quadrature weights int_cell t^{M-3} dt at `grid` (0 at the ends).
    #[serde(skip)]
    pub weights: Vec<f64>,
}

impl SingularSpectrum {
    /// int t^{M-3} phi_i phi_j dt.
    pub fn weighted_inner(&self, i: usize, j: usize) -> f64 {
        self.weights
            .iter()
            .zip(&self.eigenfunctions[i])
            .zip(&self.eigenfunctions[j])
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// Sign changes of phi_i, ignoring values below 1e-8 of its maximum.
    pub fn sign_changes(&self, i: usize) -> usize {
        let f = &self.eigenfunctions[i];
        let top = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut last = 0.0;
        let mut changes = 0;
        for &v in f {
            if v.abs() <= 1e-8 * top {
                continue;
            }
            if last != 0.0 && v.signum() != last {
                changes += 1;
            }
            last = v.signum();
        }
        changes
    }

    /// Violations of nu_i < level < nu_m < 0 (i < m), level = -(2N-2+alpha)/(2+alpha).
    pub fn bound_violations(&self) -> Vec<String> {
        let level = self.params.base().critical_level();
        let m = self.eigenvalues.len();
        let mut out = Vec::new();
        for (i, &nu) in self.eigenvalues.iter().enumerate() {
            if nu >= 0.0 {
                out.push(format!("nu_{} = {nu} is not negative", i + 1));
            }
            if i + 1 < m && nu >= level {
                out.push(format!("nu_{} = {nu} is not below {level}", i + 1));
            }
            if i + 1 == m && nu <= level {
                out.push(format!("nu_{} = {nu} is not above {level}", i + 1));
            }
        }
        for w in self.eigenvalues.windows(2) {
            if w[0] >= w[1] {
                out.push(format!("eigenvalues not increasing: {} >= {}", w[0], w[1]));
            }
        }
        out
    }
}

pub fn compute_spectrum(profile: &RadialProfile, count: usize) -> Result<SingularSpectrum> {
    compute_spectrum_with(profile, count, &SpectrumOptions::default())
}

pub fn compute_spectrum_with(profile: &RadialProfile, count: usize, opts: &SpectrumOptions) -> Result<SingularSpectrum> {
    let params = profile.params;
    let m = params.nodal_zones as usize;
    if count == 0 || count > m {
        return Err(Error::InvalidArgument(format!("eigenvalue count must be in 1..={m}, got {count}")));
    }
    if !(opts.step > 0.0 && opts.far_step_factor >= 1.0 && opts.decay_margin > 0.0 && opts.max_extent > 0.0) {
        return Err(Error::InvalidArgument("spectrum options must be positive".into()));
    }
    let m_dim = params.fictitious_dimension();
    let potential = |s: f64| profile.log_potential(s);
    let log_zeros = profile.log_zeros();
    let problem = SingularProblem {
        m_dim,
        potential: &potential,
        kinks: log_zeros[..log_zeros.len() - 1].to_vec(),
        core_start: profile.log_series_start(),
    };
    let threshold = 0.25 * (m_dim - 2.0) * (m_dim - 2.0);

    let mut extent = opts.initial_extent.min(opts.max_extent);
    let (coarse, coarse_disc) = loop {
        let disc = problem.discretize(extent, opts.step, opts.far_step_factor);
        let neg = disc.negative_count();
        if neg < m {
            if extent >= opts.max_extent {
                return Err(Error::CountMismatch { expected: m, found: neg });
            }
            extent = (4.0 * extent).min(opts.max_extent);
            continue;
        }
        if neg > m {
            return Err(Error::CountMismatch { expected: m, found: neg });
        }
        let nu_m = disc.matrix.eigenvalue(m - 1);
        let kappa = (threshold - nu_m).sqrt();
        let need = opts.decay_margin / kappa;
        if extent < need && extent < opts.max_extent {
            extent = (1.2 * need).min(opts.max_extent);
            continue;
        }
        let values: Vec<f64> = (0..count).map(|k| disc.matrix.eigenvalue(k)).collect();
        break (values, disc);
    };
    drop(coarse_disc);

    let fine_disc = problem.discretize(extent, 0.5 * opts.step, opts.far_step_factor);
    let fine_neg = fine_disc.negative_count();
    if fine_neg != m {
        return Err(Error::CountMismatch { expected: m, found: fine_neg });
    }
    let pairs = fine_disc.lowest(count);
    let fine: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvalues: Vec<f64> = if opts.richardson {
        fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
    } else {
        fine.clone()
    };

    let mut residuals = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for (i, (lam, mut phi)) in pairs.into_iter().enumerate() {
        let (q, mass) = fine_disc.quadratic_form(&phi);
        let r = (q - lam * mass).abs();
        if !(r <= opts.rayleigh_tol * mass) {
            return Err(Error::Numerical(format!("Rayleigh residual {r:e} for nu_{}", i + 1)));
        }
        residuals.push(r / mass);
        let top = phi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if let Some(first) = phi.iter().find(|v| v.abs() > 1e-3 * top) {
            if *first < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut full = Vec::with_capacity(phi.len() + 2);
        full.push(0.0);
        full.extend(phi);
        full.push(0.0);
        eigenfunctions.push(full);
    }
    let mut weights = vec![0.0];
    weights.extend(fine_disc.log_mass.iter().map(|lb| lb.exp()));
    weights.push(0.0);

    Ok(SingularSpectrum {
        params,
        profile_zeros: profile.zeros.clone(),
        profile_sup_norm: profile.sup_norm,
        eigenvalues,
        fine_eigenvalues: fine,
        coarse_eigenvalues: coarse,
        grid: fine_disc.nodes.iter().map(|s| s.exp()).collect(),
        eigenfunctions,
        admissibility_threshold: threshold,
        negative_count: fine_neg,
        extent,
        step: 0.5 * opts.step,
        rayleigh_residuals: residuals,
        weights,
    })
}

/// Solver settings shared by sweeps over p.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub radial: RadialOptions,
    pub spectrum: SpectrumOptions,
    pub cache: Option<NuCache>,
    /// Worker threads; None uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SweepContext {
    fn default() -> Self {
        SweepContext { radial: RadialOptions::default(), spectrum: SpectrumOptions::default(), cache: None, jobs: None }
    }
}

impl SweepContext {
    fn cache_key(&self) -> String {
        format!("g{}-{}", self.radial.grid_size, self.spectrum.fingerprint())
    }

    /// All m eigenvalues at one p, through the cache when present.
    pub fn eigenvalues_at(&self, base: &BaseParams, p: f64) -> Result<Vec<f64>> {
        let key = self.cache_key();
        if let Some(cache) = &self.cache {
            if let Some(nu) = cache.lookup(base, &key, p) {
                return Ok(nu);
            }
        }
        let params = base.with_power(p)?;
        let profile = solve_radial_with(&params, &self.radial)?;
        let spec = compute_spectrum_with(&profile, base.nodal_zones as usize, &self.spectrum)?;
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.store(base, &key, p, &spec.eigenvalues) {
                log::warn!("could not write nu cache: {e}");
            }
        }
        Ok(spec.eigenvalues)
    }

    /// Full spectrum at one p (never cached: it carries eigenfunctions).
    pub fn spectrum_at(&self, base: &BaseParams, p: f64) -> Result<SingularSpectrum> {
        let params = base.with_power(p)?;
        let profile = solve_radial_with(&params, &self.radial)?;
        compute_spectrum_with(&profile, base.nodal_zones as usize, &self.spectrum)
    }

    pub(crate) fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        match self.jobs {
            Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(op),
                Err(_) => op(),
            },
            _ => op(),
        }
    }
}

/// One sample of the eigenvalue curves; failed points carry the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub nu: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl CurvePoint {
    pub fn nu1(&self) -> Option<f64> {
        self.nu.as_ref().and_then(|v| v.first().copied())
    }
}

/// nu_1(p) (and the other m - 1 eigenvalues) along `p_grid`. Failed points are
/// marked, not fatal.
pub fn nu1_curve(base: &BaseParams, p_grid: &[f64], ctx: &SweepContext) -> Result<Vec<CurvePoint>> {
    base.validate()?;
    let pa = base.critical_exponent();
    if let Some(bad) = p_grid.iter().find(|&&p| !(p > 1.0 && p < pa)) {
        return Err(Error::InvalidArgument(format!("p = {bad} outside (1, {pa})")));
    }
    let points = ctx.install(|| {
        p_grid
            .par_iter()
            .map(|&p| match ctx.eigenvalues_at(base, p) {
                Ok(nu) => CurvePoint { p, nu: Some(nu), error: None },
                Err(e) => CurvePoint { p, nu: None, error: Some(e.to_string()) },
            })
            .collect()
    });
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_has_no_negative_eigenvalues() {
        for &m_dim in &[2.0, 2.5, 3.0] {
            let zero = |_s: f64| 0.0;
            let problem = SingularProblem { m_dim, potential: &zero, kinks: vec![], core_start: -5.0 };
            let disc = problem.discretize(60.0, 0.01, 4.0);
            assert_eq!(disc.negative_count(), 0);
        }
    }

    #[test]
    fn exact_planar_well() {
        // M = 2, V = k^2 on (-a, 0): -phi'' - k^2 phi = nu phi has
        // nu = (pi/a)^2-type ground state shifted by the decaying tail
        // matched at s = -a: tan(a sqrt(k^2 + nu)) = -sqrt(k^2+nu)/sqrt(-nu).
        let (a, k2) = (2.0_f64, 4.0_f64);
        let well = move |s: f64| if s > -a { k2 } else { 0.0 };
        let problem = SingularProblem { m_dim: 2.0, potential: &well, kinks: vec![-a], core_start: -a };
        let coarse = problem.discretize(40.0, 0.01, 1.0);
        let fine = problem.discretize(40.0, 0.005, 1.0);
        assert_eq!(fine.negative_count(), 1);
        let nu = (4.0 * fine.matrix.eigenvalue(0) - coarse.matrix.eigenvalue(0)) / 3.0;
        let g = |nu: f64| {
            let q = (k2 + nu).sqrt();
            (a * q).tan() + q / (-nu).sqrt()
        };
        // root of g between the pole of tan and 0
        let root = crate::roots::bracketed_root(|x| Ok(g(x)), -k2 + (std::f64::consts::FRAC_PI_2 / a).powi(2) + 1e-9, -1e-9, 1e-14, 300).unwrap();
        assert!((nu - root).abs() < 1e-6, "{nu} vs {root}");
    }
}
