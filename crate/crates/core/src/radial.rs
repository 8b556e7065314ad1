//! Radial profiles: the solution v_p of
//! (t^{M-1} v')' + t^{M-1} |v|^{p-1} v = 0 on (0,1), v'(0) = 0, v(1) = 0,
//! with m nodal zones and v(0) > 0.
//!
//! The initial value problem v(0) = 1 is integrated in sigma = ln r, where it
//! reads v'' + (M-2) v' + e^{2 sigma} |v|^{p-1} v = 0, and then rescaled by
//! the first m zeros: v_p(t) = tau_m^{2/(p-1)} v(tau_m t).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, hermite, Failure, Node, Tolerances};
use crate::params::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Number of Chebyshev points on [0, 1] in the sampled profile.
    pub grid_size: usize,
    pub rtol: f64,
    pub atol: f64,
    /// First step in sigma.
    pub initial_step: f64,
    /// Step cap in sigma; keeps the dense output's second derivative
    /// accurate across the |v|^{p-1}v cusps at the zeros.
    pub max_step: f64,
    /// Radius where the series start is handed to the integrator.
    pub start_radius: f64,
    /// Largest ln r reached before giving up.
    pub horizon: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions {
            grid_size: 2048,
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-2,
            max_step: 5e-2,
            start_radius: 1e-6,
            horizon: 340.0,
        }
    }
}

/// The integrated initial value problem, in sigma = ln r.
#[derive(Debug, Clone)]
pub struct Trajectory {
    m_dim: f64,
    power: f64,
    nodes: Vec<Node>,
    zeros: Vec<f64>,
}

impl Trajectory {
    fn series_coefficients(&self) -> (f64, f64) {
        let m = self.m_dim;
        (1.0 / (2.0 * m), self.power / (8.0 * m * (m + 2.0)))
    }

    /// v, v_sigma, v_sigma_sigma at sigma <= zero_m.
    pub fn eval(&self, sigma: f64) -> [f64; 3] {
        let first = &self.nodes[0];
        if sigma <= first.t {
            let r2 = (2.0 * sigma).exp();
            let (a, c) = self.series_coefficients();
            let r4 = r2 * r2;
            return [1.0 - a * r2 + c * r4, -2.0 * a * r2 + 4.0 * c * r4, -4.0 * a * r2 + 16.0 * c * r4];
        }
        let k = self.nodes.partition_point(|n| n.t < sigma).clamp(1, self.nodes.len() - 1);
        hermite(&self.nodes[k - 1], &self.nodes[k], sigma)
    }

    /// sigma-locations of the zeros of v, in increasing order.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// ln tau_m.
    pub fn last_zero(&self) -> f64 {
        *self.zeros.last().expect("trajectory has at least one zero")
    }
}

fn nonlinearity(sigma: f64, v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * (2.0 * sigma + p * v.abs().ln()).exp()
    }
}

/// Integrate the IVP until the m-th zero.
pub fn integrate_ivp(params: &ProblemParams, opts: &RadialOptions) -> Result<Trajectory> {
    params.validate()?;
    let m_dim = params.fictitious_dimension();
    let p = params.power;
    let m = params.nodal_zones as usize;
    let f = move |s: f64, y: &[f64; 2]| [y[1], -(m_dim - 2.0) * y[1] - nonlinearity(s, y[0], p)];

    let s0 = opts.start_radius.ln();
    let r2 = opts.start_radius * opts.start_radius;
    let (a, c) = (1.0 / (2.0 * m_dim), p / (8.0 * m_dim * (m_dim + 2.0)));
    let y0 = [1.0 - a * r2 + c * r2 * r2, -2.0 * a * r2 + 4.0 * c * r2 * r2];
    let start = Node { t: s0, y: y0, dy: f(s0, &y0) };
    let tol = Tolerances { rtol: opts.rtol, atol: opts.atol, initial_step: opts.initial_step, max_step: opts.max_step, max_steps: 5_000_000, split_at_zeros: true };

    let mut crossings = 0usize;
    // approach each zero geometrically so the cusp of |v|^{p-1}v is resolved
    let cap = |n: &Node| {
        if n.y[1] == 0.0 {
            f64::INFINITY
        } else {
            (0.2 * (n.y[0] / n.y[1]).abs()).max(1e-7)
        }
    };
    let nodes = ode::integrate(f, start, opts.horizon, tol, cap, |a, b| {
        if a.y[0] != 0.0 && (b.y[0] == 0.0 || a.y[0].signum() != b.y[0].signum()) {
            crossings += 1;
        }
        crossings >= m
    })
    .map_err(|e| match e {
        Failure::Horizon { t } => Error::Horizon { found: crossings, wanted: m, horizon: t },
        Failure::StepUnderflow { t, h } => Error::Stiffness { at: t, step: h },
        Failure::MaxSteps { t } => Error::Horizon { found: crossings, wanted: m, horizon: t },
    })?;

    let zeros: Vec<f64> = nodes[1..].iter().filter(|n| n.y[0] == 0.0).map(|n| n.t).collect();
    if zeros.len() != m {
        return Err(Error::Numerical(format!("located {} zeros, expected {m}", zeros.len())));
    }
    Ok(Trajectory { m_dim, power: p, nodes, zeros })
}

/// Sampled radial profile v_p on a Chebyshev grid of [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: ProblemParams,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// Interior zeros in (0, 1).
    pub zeros: Vec<f64>,
    pub sup_norm: f64,
    #[serde(skip)]
    pub potential: Vec<f64>,
    #[serde(skip)]
    trajectory: Option<Arc<Trajectory>>,
}

/// t_k = (1 - cos(pi k/(K-1)))/2.
pub fn chebyshev_grid(size: usize) -> Vec<f64> {
    let k1 = (size - 1) as f64;
    (0..size)
        .map(|k| {
            if k == 0 {
                0.0
            } else if k == size - 1 {
                1.0
            } else {
                0.5 * (1.0 - (PI * k as f64 / k1).cos())
            }
        })
        .collect()
}

pub fn solve_radial(params: &ProblemParams) -> Result<RadialProfile> {
    solve_radial_with(params, &RadialOptions::default())
}

pub fn solve_radial_with(params: &ProblemParams, opts: &RadialOptions) -> Result<RadialProfile> {
    if opts.grid_size < 3 {
        return Err(Error::InvalidArgument("profile grid needs at least 3 points".into()));
    }
    let traj = Arc::new(integrate_ivp(params, opts)?);
    let mut profile = RadialProfile {
        params: *params,
        grid: chebyshev_grid(opts.grid_size),
        values: Vec::new(),
        derivatives: Vec::new(),
        zeros: Vec::new(),
        sup_norm: 0.0,
        potential: Vec::new(),
        trajectory: Some(traj.clone()),
    };
    let sm = traj.last_zero();
    profile.zeros = traj.zeros()[..traj.zeros().len() - 1].iter().map(|z| (z - sm).exp()).collect();
    let (values, derivatives): (Vec<f64>, Vec<f64>) =
        profile.grid.iter().map(|&t| (profile.value_at(t), profile.derivative_at(t))).unzip();
    // v(1) = 0 by construction; the interpolant only gets within rounding
    let n = values.len();
    profile.values = values;
    profile.values[n - 1] = 0.0;
    profile.derivatives = derivatives;
    profile.sup_norm = profile.values.iter().fold(profile.scale(), |a, v| a.max(v.abs()));
    profile.potential = potential_on_grid(&profile);
    Ok(profile)
}

/// a_p(t_k) = p |v_p(t_k)|^{p-1}.
pub fn potential_on_grid(profile: &RadialProfile) -> Vec<f64> {
    let p = profile.params.power;
    profile.values.iter().map(|v| p * v.abs().powf(p - 1.0)).collect()
}

impl RadialProfile {
    pub fn trajectory(&self) -> &Trajectory {
        self.trajectory.as_deref().expect("profile carries its trajectory until serialized")
    }

    /// lambda = tau_m^{2/(p-1)} = v_p(0).
    pub fn scale(&self) -> f64 {
        (2.0 * self.trajectory().last_zero() / (self.params.power - 1.0)).exp()
    }

    /// ln tau_m.
    pub fn log_tau(&self) -> f64 {
        self.trajectory().last_zero()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.scale();
        }
        let sigma = self.log_tau() + t.ln();
        let traj = self.trajectory();
        if traj.zeros().iter().any(|z| (z - sigma).abs() <= 1e-13 * z.abs().max(1.0)) {
            return 0.0;
        }
        self.scale() * traj.eval(sigma)[0]
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.scale() * self.trajectory().eval(self.log_tau() + t.ln())[1] / t
    }

    /// a_p(t) = p |v_p(t)|^{p-1}.
    pub fn potential_at(&self, t: f64) -> f64 {
        let p = self.params.power;
        p * self.value_at(t).abs().powf(p - 1.0)
    }

    /// The same potential written through w_p = ((2+alpha)/2)^{2/(p-1)} v_p.
    pub fn potential_via_w(&self, t: f64) -> f64 {
        let p = self.params.power;
        let g = (2.0 + self.params.alpha) / 2.0;
        let w = g.powf(2.0 / (p - 1.0)) * self.value_at(t);
        p * (1.0 / g).powi(2) * w.abs().powf(p - 1.0)
    }

    /// t^2 a_p(t) at t = e^s, computed without forming the scale factor.
    pub fn log_potential(&self, s: f64) -> f64 {
        let sigma = s + self.log_tau();
        let v = self.trajectory().eval(sigma)[0];
        if v == 0.0 {
            return 0.0;
        }
        let p = self.params.power;
        p * (2.0 * sigma + (p - 1.0) * v.abs().ln()).exp()
    }

    /// ln of every zero of v_p in (0, 1], the last one being 0.
    pub fn log_zeros(&self) -> Vec<f64> {
        let sm = self.log_tau();
        self.trajectory().zeros().iter().map(|z| z - sm).collect()
    }

    /// ln t below which the profile is given by the origin series.
    pub fn log_series_start(&self) -> f64 {
        self.trajectory().nodes()[0].t - self.log_tau()
    }

    /// Largest |(t^{M-1}v')' + t^{M-1}|v|^{p-1}v| / max|v|^p over interior
    /// grid points, with the second derivative from the dense interpolant.
    pub fn ode_residual_max(&self) -> f64 {
        let traj = self.trajectory();
        let m_dim = self.params.fictitious_dimension();
        let p = self.params.power;
        let sm = self.log_tau();
        let tau2 = (2.0 * sm).exp();
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for &t in &self.grid[1..n - 1] {
            let s = t.ln();
            let sigma = s + sm;
            let [v, w, vss] = traj.eval(sigma);
            let r = vss + (m_dim - 2.0) * w + nonlinearity(sigma, v, p);
            worst = worst.max(((m_dim - 3.0) * s).exp() * r.abs() / tau2);
        }
        worst
    }

    /// (int t^{M-1} |v'|^2, int t^{M-1} |v|^{p+1}) up to the common factor
    /// lambda^2 tau^{2-M}; the two agree for an exact solution.
    pub fn energy_balance(&self) -> (f64, f64) {
        let traj = self.trajectory();
        let m_dim = self.params.fictitious_dimension();
        let p = self.params.power;
        const GL: [(f64, f64); 5] = [
            (0.0, 0.568_888_888_888_888_9),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let (mut kin, mut pot) = (0.0, 0.0);
        let sm = traj.last_zero();
        for w in traj.nodes().windows(2) {
            let (a, b) = (w[0].t, w[1].t.min(sm));
            if b <= a {
                break;
            }
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, wt) in &GL {
                let s = c + h * x;
                let [v, dv, _] = hermite(&w[0], &w[1], s);
                kin += wt * h * ((m_dim - 2.0) * s).exp() * dv * dv;
                if v != 0.0 {
                    pot += wt * h * (m_dim * s + (p + 1.0) * v.abs().ln()).exp();
                }
            }
        }
        (kin, pot)
    }
}
