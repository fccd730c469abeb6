//! Load-management half-step: the local ratios at fixed offload times,
//! powers, server frequencies and multipliers.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{cooling_energy, cooling_power, Allocation, SystemConfig, UserParams};
use crate::subproblems::{golden_section, DualVars};

/// Admissible local ratios: `a_i ∈ [0, min(1, f_u_max(1−φ)T/(RB))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl LoadBounds {
    pub fn new(cfg: &SystemConfig, users: &[UserParams]) -> Self {
        LoadBounds { min: alloc::vec![0.0; users.len()], max: users.iter().map(|u| u.max_local_ratio(cfg)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Re-express the server frequency through the binding deadline,
    /// `f_s(a) = (1−a)RB/((1−φ)T − T_off)`, so edge and cooling energy vary with `a`.
    pub couple_fs_in_a_step: bool,
    /// Width of the final bisection bracket.
    pub tol: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { couple_fs_in_a_step: false, tol: 1e-12 }
    }
}

fn check(fixed: &Allocation, dual: &DualVars, users: &[UserParams]) -> Result<()> {
    let n = users.len();
    if fixed.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: fixed.len() });
    }
    if dual.causality.len() != n || dual.latency.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: dual.causality.len().min(dual.latency.len()) });
    }
    Ok(())
}

/// One user's share of the load Lagrangian at local ratio `a`, cooling excluded.
fn user_term(i: usize, a: f64, fixed: &Allocation, dual: &DualVars, cfg: &SystemConfig, u: &UserParams) -> Result<f64> {
    let x = &fixed.users[i];
    let (lambda, mu) = (dual.causality[i], dual.latency[i]);
    let window = cfg.compute_window();
    let cycles = (1.0 - a) * u.cycles();
    let offload = u.offload_energy(a, x.offload_time, cfg).map_err(|e| e.for_user(i))?;
    let edge = cycles * cfg.server_capacitance * x.server_freq * x.server_freq;
    let deadline = if cycles > 0.0 && mu > 0.0 { mu * cycles / x.server_freq } else { 0.0 };
    Ok(edge
        + lambda * (u.local_energy_at_deadline(a, cfg) + offload - x.wpt_power * u.harvest_per_watt(cfg))
        + mu * (x.offload_time - window)
        + deadline)
}

/// Lagrangian of the load subproblem at fixed offload times, powers and frequencies.
///
/// Cooling depends only on the fixed server frequencies and enters as a
/// constant. A user with no offload time contributes finitely only at `a = 1`.
pub fn lagrangian_a(
    a: &[f64],
    fixed: &Allocation,
    dual: &DualVars,
    cfg: &SystemConfig,
    users: &[UserParams],
) -> Result<f64> {
    check(fixed, dual, users)?;
    if a.len() != users.len() {
        return Err(Error::DimensionMismatch { expected: users.len(), found: a.len() });
    }
    let mut total = cooling_energy(fixed.users.iter().map(|x| x.server_freq), cfg);
    for (i, u) in users.iter().enumerate() {
        total += user_term(i, a[i], fixed, dual, cfg, u)?;
    }
    Ok(total)
}

/// Derivative of user `i`'s term of [`lagrangian_a`] with respect to its ratio.
pub fn lagrangian_a_derivative(
    i: usize,
    a: f64,
    fixed: &Allocation,
    dual: &DualVars,
    cfg: &SystemConfig,
    users: &[UserParams],
) -> f64 {
    let u = &users[i];
    let x = &fixed.users[i];
    let (lambda, mu) = (dual.causality[i], dual.latency[i]);
    let window = cfg.compute_window();
    let rb = u.cycles();
    let local = 3.0 * a * a * rb * rb * rb * u.capacitance / (window * window);
    let offload = if x.offload_time > 0.0 {
        let exponent = (1.0 - a) * u.task / (x.offload_time * cfg.user_bandwidth());
        cfg.noise_power * u.task / (u.uplink_gain * cfg.user_bandwidth()) * libm::exp(exponent)
    } else if a < 1.0 && u.task > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let deadline = if mu > 0.0 { mu * rb / x.server_freq } else { 0.0 };
    -rb * cfg.server_capacitance * x.server_freq * x.server_freq + lambda * (local - offload) - deadline
}

/// Minimize the load Lagrangian over [`LoadBounds`], one user at a time.
///
/// The per-user objective is convex, so the derivative is bisected on the
/// admissible interval; a derivative of constant sign selects an endpoint.
/// Users without offload time are kept local.
pub fn optimize_a(
    fixed: &Allocation,
    dual: &DualVars,
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &LoadOptions,
) -> Result<Vec<f64>> {
    check(fixed, dual, users)?;
    let bounds = LoadBounds::new(cfg, users);
    if opts.couple_fs_in_a_step {
        return optimize_a_coupled(fixed, dual, cfg, users, &bounds, opts);
    }
    let mut out = Vec::with_capacity(users.len());
    for (i, u) in users.iter().enumerate() {
        let (lo, hi) = (bounds.min[i], bounds.max[i]);
        if u.task <= 0.0 {
            out.push(1.0);
            continue;
        }
        if fixed.users[i].offload_time <= 0.0 {
            out.push(hi);
            continue;
        }
        let d = |a: f64| lagrangian_a_derivative(i, a, fixed, dual, cfg, users);
        if d(lo) >= 0.0 {
            out.push(lo);
            continue;
        }
        if d(hi) <= 0.0 {
            out.push(hi);
            continue;
        }
        let (mut l, mut h) = (lo, hi);
        while h - l > opts.tol {
            let mid = 0.5 * (l + h);
            if d(mid) > 0.0 {
                h = mid;
            } else {
                l = mid;
            }
        }
        out.push(0.5 * (l + h));
    }
    Ok(out)
}

/// Server frequency that makes user `i`'s deadline bind at ratio `a`.
fn deadline_freq(i: usize, a: f64, fixed: &Allocation, cfg: &SystemConfig, u: &UserParams) -> f64 {
    let x = &fixed.users[i];
    let left = cfg.compute_window() - x.offload_time;
    let cycles = (1.0 - a) * u.cycles();
    if cycles <= 0.0 {
        0.0
    } else if left > 0.0 {
        cycles / left
    } else {
        x.server_freq
    }
}

fn optimize_a_coupled(
    fixed: &Allocation,
    dual: &DualVars,
    cfg: &SystemConfig,
    users: &[UserParams],
    bounds: &LoadBounds,
    opts: &LoadOptions,
) -> Result<Vec<f64>> {
    let n = users.len();
    let delta = cfg.server_capacitance;
    let mut a: Vec<f64> = fixed.users.iter().map(|x| x.local_ratio).collect();
    let mut freqs: Vec<f64> = (0..n).map(|i| deadline_freq(i, a[i], fixed, cfg, &users[i])).collect();
    for _ in 0..3 {
        for (i, u) in users.iter().enumerate() {
            if u.task <= 0.0 {
                a[i] = 1.0;
                freqs[i] = 0.0;
                continue;
            }
            if fixed.users[i].offload_time <= 0.0 {
                a[i] = bounds.max[i];
                freqs[i] = 0.0;
                continue;
            }
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| delta * freqs[j] * freqs[j] * freqs[j]).sum();
            let x = fixed.users[i];
            let (lambda, window) = (dual.causality[i], cfg.compute_window());
            let objective = |r: f64| {
                let f = deadline_freq(i, r, fixed, cfg, u);
                let cycles = (1.0 - r) * u.cycles();
                let offload = u.offload_energy(r, x.offload_time, cfg).unwrap_or(f64::INFINITY);
                cycles * delta * f * f
                    + lambda * (u.local_energy_at_deadline(r, cfg) + offload)
                    + cooling_power(others + delta * f * f * f, &cfg.cooling) * window
            };
            let (r, _) = golden_section(objective, bounds.min[i], bounds.max[i], opts.tol.max(1e-12));
            // endpoints are admissible and may win for monotone objectives
            let best = [bounds.min[i], r, bounds.max[i]]
                .into_iter()
                .min_by(|p, q| objective(*p).total_cmp(&objective(*q)))
                .unwrap_or(r);
            a[i] = best;
            freqs[i] = deadline_freq(i, best, fixed, cfg, u);
        }
    }
    Ok(a)
}
