//! Minimizers of the Lagrangian for fixed multipliers.
//!
//! For fixed local ratios and multipliers the Lagrangian separates into one
//! offload-time problem and one WPT-power problem per user, plus a single
//! problem for the server frequencies that stays coupled through cooling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lambertw::w0_plus_one;
use crate::model::{cooling_power, SystemConfig, UserParams};

/// Lagrange multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVars {
    /// Per-user energy-causality multipliers.
    pub causality: Vec<f64>,
    /// Per-user offload-latency multipliers, W.
    pub latency: Vec<f64>,
    /// Server-capacity multiplier, J/Hz.
    pub capacity: f64,
    /// AP power-budget multiplier, s.
    pub budget: f64,
}

impl DualVars {
    pub fn zeros(n: usize) -> Self {
        DualVars { causality: vec![0.0; n], latency: vec![0.0; n], capacity: 0.0, budget: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.causality.len()
    }

    pub fn is_empty(&self) -> bool {
        self.causality.is_empty()
    }

    pub fn is_valid(&self, n: usize) -> bool {
        self.causality.len() == n
            && self.latency.len() == n
            && self.causality.iter().chain(&self.latency).all(|&m| m >= 0.0 && m.is_finite())
            && self.capacity >= 0.0
            && self.budget >= 0.0
    }
}

/// Offload time minimizing `λ E_off(T) + μ T` for one user.
///
/// Zero when nothing is offloaded or the causality multiplier vanishes.
/// Otherwise the rate `r = (1−a)R/T` solves `P(r) − rP'(r) = −gμ/(σ²λ)`,
/// i.e. `r = w [W₀(gμ/(σ²eλ) − 1/e) + 1]`. A vanishing latency multiplier
/// drives the rate to zero and the time to infinity.
pub fn optimal_offload_time(causality: f64, latency: f64, a: f64, cfg: &SystemConfig, user: &UserParams) -> f64 {
    let nats = (1.0 - a) * user.task;
    if nats <= 0.0 || causality <= 0.0 {
        return 0.0;
    }
    let offset = user.uplink_gain * latency / (cfg.noise_power * causality);
    let rate = cfg.user_bandwidth() * w0_plus_one(offset);
    if rate > 0.0 {
        nats / rate
    } else {
        f64::INFINITY
    }
}

/// Coefficient of `P_b` in the Lagrangian, `φT − λφTθH + π`.
pub fn wpt_power_coefficient(causality: f64, budget: f64, cfg: &SystemConfig, user: &UserParams) -> f64 {
    cfg.wpt_time() - causality * user.harvest_per_watt(cfg) + budget
}

/// WPT power minimizing the linear Lagrangian term for one user.
///
/// `tie_tol` is the half-width (relative to `φT`) of the band in which the
/// coefficient counts as zero; there the energy-causality-tight power is used.
pub fn optimal_wpt_power(
    causality: f64,
    budget: f64,
    a: f64,
    offload_time: f64,
    cfg: &SystemConfig,
    user: &UserParams,
    tie_tol: f64,
) -> Result<f64> {
    let c = wpt_power_coefficient(causality, budget, cfg, user);
    if c.abs() <= tie_tol * cfg.wpt_time() {
        tight_wpt_power(a, offload_time, cfg, user)
    } else if c > 0.0 {
        Ok(0.0)
    } else {
        Ok(cfg.ap_power_max)
    }
}

/// Transmit power at which the user harvests exactly its energy demand.
pub fn tight_wpt_power(a: f64, offload_time: f64, cfg: &SystemConfig, user: &UserParams) -> Result<f64> {
    let demand = user.energy_demand(a, offload_time, cfg)?;
    if demand == 0.0 {
        return Ok(0.0);
    }
    Ok(demand / user.harvest_per_watt(cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSolverOptions {
    /// Sweeps stop once no coordinate moves more than this fraction of `f_s_max`.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
    /// Final golden-section bracket width as a fraction of `f_s_max`.
    pub line_tol: f64,
}

impl Default for EdgeSolverOptions {
    fn default() -> Self {
        EdgeSolverOptions { sweep_tol: 1e-6, max_sweeps: 200, line_tol: 1e-13 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Per-user part of the server-frequency objective, cooling excluded.
fn edge_user_term(f: f64, cycles: f64, latency: f64, capacity: f64, cfg: &SystemConfig) -> f64 {
    if cycles <= 0.0 {
        return capacity * f;
    }
    let deadline = if latency > 0.0 { latency * cycles / f } else { 0.0 };
    cycles * cfg.server_capacitance * f * f + deadline + capacity * f
}

/// Value of the server-frequency objective for a given frequency vector.
pub fn edge_objective(freqs: &[f64], dual: &DualVars, a: &[f64], cfg: &SystemConfig, users: &[UserParams]) -> f64 {
    let mut total = 0.0;
    let mut power = 0.0;
    for (i, &f) in freqs.iter().enumerate() {
        let cycles = (1.0 - a[i]) * users[i].cycles();
        total += edge_user_term(f, cycles, dual.latency[i], dual.capacity, cfg);
        power += cfg.server_capacitance * f * f * f;
    }
    total + cooling_power(power, &cfg.cooling) * cfg.compute_window()
}

/// Minimize the server-frequency subproblem by block-coordinate descent.
///
/// Each coordinate is minimized by golden section over `[0, f_s_max]`;
/// users with nothing to offload, or with a zero latency multiplier, get
/// exactly zero.
pub fn solve_edge_frequencies(
    dual: &DualVars,
    a: &[f64],
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &EdgeSolverOptions,
) -> Result<Vec<f64>> {
    let n = users.len();
    if a.len() != n || dual.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.len().min(dual.len()) });
    }
    let delta = cfg.server_capacitance;
    let window = cfg.compute_window();
    let f_max = cfg.server_freq_max;
    let cycles: Vec<f64> = (0..n).map(|i| (1.0 - a[i]) * users[i].cycles()).collect();
    let active: Vec<bool> = (0..n).map(|i| cycles[i] > 0.0 && dual.latency[i] > 0.0).collect();
    let mut freqs = vec![0.0; n];
    if !active.iter().any(|&x| x) {
        return Ok(freqs);
    }
    let cooled = cfg.cooling.oa_coeff > 0.0 || cfg.cooling.cw_coeff > 0.0;
    let width = opts.line_tol * f_max;

    let mut sweeps = 0;
    loop {
        if sweeps >= opts.max_sweeps {
            return Err(Error::NonConvergence { solver: "edge frequency sweep", iterations: sweeps });
        }
        sweeps += 1;
        let mut largest_move: f64 = 0.0;
        let mut power: f64 = freqs.iter().map(|f| delta * f * f * f).sum();
        for i in 0..n {
            if !active[i] {
                continue;
            }
            let old = freqs[i];
            let others = (power - delta * old * old * old).max(0.0);
            let objective = |f: f64| {
                edge_user_term(f, cycles[i], dual.latency[i], dual.capacity, cfg)
                    + if cooled { cooling_power(others + delta * f * f * f, &cfg.cooling) * window } else { 0.0 }
            };
            let (f, _) = golden_section(objective, 0.0, f_max, width);
            freqs[i] = f;
            power = others + delta * f * f * f;
            largest_move = largest_move.max((f - old).abs());
        }
        if !cooled {
            break;
        }
        if largest_move < opts.sweep_tol * f_max && !polish_on_kink(&mut freqs, &cycles, &active, dual, cfg, width) {
            break;
        }
    }
    Ok(freqs)
}

/// Pairwise moves that keep total computing power fixed.
///
/// Coordinate descent can stall where the cooling curve has a kink, since
/// single-coordinate moves there pay the steeper one-sided slope. Moving
/// power between two users along the kink surface leaves cooling unchanged.
/// Returns true if any pair improved.
fn polish_on_kink(
    freqs: &mut [f64],
    cycles: &[f64],
    active: &[bool],
    dual: &DualVars,
    cfg: &SystemConfig,
    width: f64,
) -> bool {
    let delta = cfg.server_capacitance;
    let threshold = cfg.cooling.threshold();
    let power: f64 = freqs.iter().map(|f| delta * f * f * f).sum();
    if !threshold.is_finite() || (power - threshold).abs() > 1e-6 * threshold.max(1e-300) {
        return false;
    }
    let p_max = delta * cfg.server_freq_max * cfg.server_freq_max * cfg.server_freq_max;
    let mut improved = false;
    for i in 0..freqs.len() {
        for j in (i + 1)..freqs.len() {
            if !active[i] || !active[j] {
                continue;
            }
            let (pi, pj) = (delta * freqs[i] * freqs[i] * freqs[i], delta * freqs[j] * freqs[j] * freqs[j]);
            let pair = |t: f64| {
                let fi = libm::cbrt((pi + t).max(0.0) / delta);
                let fj = libm::cbrt((pj - t).max(0.0) / delta);
                edge_user_term(fi, cycles[i], dual.latency[i], dual.capacity, cfg)
                    + edge_user_term(fj, cycles[j], dual.latency[j], dual.capacity, cfg)
            };
            let before = pair(0.0);
            let lo = -pi.min(p_max - pj);
            let hi = pj.min(p_max - pi);
            let p_width = width / cfg.server_freq_max * p_max;
            let (t, value) = golden_section(pair, lo, hi, p_width.max(1e-300));
            if value < before * (1.0 - 1e-12) {
                freqs[i] = libm::cbrt((pi + t).max(0.0) / delta);
                freqs[j] = libm::cbrt((pj - t).max(0.0) / delta);
                improved = true;
            }
        }
    }
    improved
}
