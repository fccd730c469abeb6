//! Dual decomposition of the fixed-ratio problem.
//!
//! For a fixed local-ratio vector the remaining problem in offload times,
//! WPT powers and server frequencies is convex. Relaxing energy causality
//! (`λ`), offload latency (`μ`), server capacity (`ν`) and the power budget
//! (`π`) splits the Lagrangian into the subproblems in
//! [`crate::subproblems`]; the dual is maximized by projected subgradient
//! ascent and a primal allocation is recovered from the multipliers with
//! energy causality and offload latency met with equality.
//!
//! Every decision variable is minimized over an implicit box implied by the
//! constraints (`T_off ≤ (1−φ)T`, `P_b ≤ P_b_max`, `f_s ≤ f_s_max`), which
//! keeps the dual finite without changing its optimal value.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Infeasibility, Result};
use crate::lambertw::w0_plus_one;
use crate::model::{
    cooling_energy, local_cpu_frequency, validate_instance, Allocation, SystemConfig, UserAllocation, UserParams,
};
use crate::subproblems::{
    optimal_offload_time, optimal_wpt_power, solve_edge_frequencies, tight_wpt_power, wpt_power_coefficient,
    DualVars, EdgeSolverOptions,
};

/// How the energy-causality multipliers are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaRule {
    /// Exact maximization along each `λ_i`: `λ_i = (φT + π)/(φTθH)`.
    ///
    /// The dual is piecewise linear in `λ_i` with its kink where the WPT
    /// coefficient vanishes, so a plain subgradient step keeps jumping across
    /// the kink. Setting `λ_i` to the kink is its exact maximizer whenever the
    /// user's demand fits under `P_b_max`.
    #[default]
    TiePoint,
    /// Plain projected subgradient steps, floored at `lambda_floor`.
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    /// Initial stepsize `η0`; the step at iteration `n` is `η0/√(n+1)`.
    pub step0: f64,
    pub max_iter: usize,
    /// Relative duality gap at which the ascent stops.
    pub gap_tol: f64,
    /// Largest normalized constraint violation of an accepted primal.
    pub residual_tol: f64,
    /// Bound on each normalized subgradient component.
    pub clamp: f64,
    /// Lower bound on `λ_i` for users that offload.
    pub lambda_floor: f64,
    /// Relative band in which the WPT coefficient counts as zero.
    pub tie_tol: f64,
    pub lambda_rule: LambdaRule,
    /// Keep every iterate in the trace.
    pub record_trace: bool,
    pub edge: EdgeSolverOptions,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            step0: 0.1,
            max_iter: 20_000,
            gap_tol: 1e-3,
            residual_tol: 1e-6,
            clamp: 1e3,
            lambda_floor: 1e-6,
            tie_tol: 1e-12,
            lambda_rule: LambdaRule::TiePoint,
            record_trace: false,
            edge: EdgeSolverOptions::default(),
        }
    }
}

impl DualOptions {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("solver.step0", self.step0, self.step0 > 0.0 && self.step0.is_finite()),
            ("solver.gap_tol", self.gap_tol, self.gap_tol > 0.0),
            ("solver.residual_tol", self.residual_tol, self.residual_tol >= 0.0),
            ("solver.clamp", self.clamp, self.clamp > 0.0),
            ("solver.lambda_floor", self.lambda_floor, self.lambda_floor >= 0.0),
            ("solver.tie_tol", self.tie_tol, self.tie_tol >= 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter { name: "solver.max_iter", value: 0.0 });
        }
        Ok(())
    }
}

/// One iteration of the dual ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub multipliers: DualVars,
    pub dual_value: f64,
    /// Relative gap between the best primal and best dual value so far.
    pub gap: f64,
    /// Euclidean norm of the normalized subgradient.
    pub subgradient_norm: f64,
    /// Largest normalized constraint violation of the recovered primal.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualTrace {
    /// Per-iteration records, kept only when requested.
    pub iterates: Vec<TraceEntry>,
    pub iterations: usize,
    pub converged: bool,
    pub final_gap: f64,
}

impl DualTrace {
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Result of the dual ascent at a fixed local-ratio vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Multipliers at which the returned primal was recovered.
    pub multipliers: DualVars,
    /// Best feasible recovered allocation (or the last recovered one when none was feasible).
    pub primal: Allocation,
    /// Objective of `primal`, `+∞` when no feasible primal was found.
    pub objective: f64,
    /// Best dual value seen.
    pub dual_value: f64,
    pub feasible: bool,
    pub trace: DualTrace,
}

fn check_dims(n: usize, a: &[f64], dual: Option<&DualVars>) -> Result<()> {
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.len() });
    }
    if let Some(d) = dual {
        if d.causality.len() != n || d.latency.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: d.causality.len().min(d.latency.len()) });
        }
    }
    Ok(())
}

fn offloaded_nats(a: f64, user: &UserParams) -> f64 {
    (1.0 - a) * user.task
}

/// Evaluate the dual function and the Lagrangian minimizer.
///
/// The candidate allocation carries the minimizing offload times, WPT powers
/// and server frequencies; its local frequencies are the latency-tight ones.
/// With `λ_i = 0` and work to offload the time term is minimized at
/// `T_off → 0`; the candidate then carries the offload time of the
/// floored multiplier instead.
pub fn dual_value(
    dual: &DualVars,
    a: &[f64],
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &DualOptions,
) -> Result<(f64, Allocation)> {
    check_dims(users.len(), a, Some(dual))?;
    let window = cfg.compute_window();
    let freqs = solve_edge_frequencies(dual, a, cfg, users, &opts.edge)?;
    let mut value = -dual.capacity * cfg.server_freq_max - dual.budget * cfg.ap_power_max;
    let mut cand = Allocation::zeros(users.len());
    for (i, u) in users.iter().enumerate() {
        let (lambda, mu) = (dual.causality[i], dual.latency[i]);
        let nats = offloaded_nats(a[i], u);
        let cycles = nats * u.cycles_per_nat;
        let mut offload_term = 0.0;
        let t_off = if nats > 0.0 {
            if lambda > 0.0 {
                let t = optimal_offload_time(lambda, mu, a[i], cfg, u).min(window);
                offload_term = lambda * u.offload_energy(a[i], t, cfg).map_err(|e| e.for_user(i))? + mu * t;
                t
            } else {
                optimal_offload_time(opts.lambda_floor.max(f64::MIN_POSITIVE), mu, a[i], cfg, u).min(window)
            }
        } else {
            0.0
        };
        let c = wpt_power_coefficient(lambda, dual.budget, cfg, u);
        let p = optimal_wpt_power(lambda, dual.budget, a[i], t_off, cfg, u, opts.tie_tol).map_err(|e| e.for_user(i))?;
        let f = freqs[i];
        let edge_term = if cycles > 0.0 {
            let deadline = if mu > 0.0 { mu * cycles / f } else { 0.0 };
            cycles * cfg.server_capacitance * f * f + deadline
        } else {
            0.0
        };
        value += c * p
            + lambda * u.local_energy_at_deadline(a[i], cfg)
            + offload_term
            - mu * window
            + edge_term
            + dual.capacity * f;
        cand.users[i] = UserAllocation {
            local_ratio: a[i],
            local_freq: local_cpu_frequency(a[i], cfg, u).map_err(|e| e.for_user(i))?,
            server_freq: f,
            wpt_power: p,
            offload_time: t_off,
        };
    }
    value += cooling_energy(freqs.iter().copied(), cfg);
    Ok((value, cand))
}

/// Subgradient of the dual function at the multipliers that produced `candidate`.
///
/// Components are the constraint functions evaluated at the minimizer,
/// in the layout of [`DualVars`].
pub fn subgradients(candidate: &Allocation, a: &[f64], cfg: &SystemConfig, users: &[UserParams]) -> Result<DualVars> {
    check_dims(users.len(), a, None)?;
    if candidate.len() != users.len() {
        return Err(Error::DimensionMismatch { expected: users.len(), found: candidate.len() });
    }
    let window = cfg.compute_window();
    let n = users.len();
    let mut g = DualVars::zeros(n);
    for (i, (x, u)) in candidate.users.iter().zip(users).enumerate() {
        let demand = u.energy_demand(a[i], x.offload_time, cfg).map_err(|e| e.for_user(i))?;
        g.causality[i] = demand - x.wpt_power * u.harvest_per_watt(cfg);
        let cycles = (1.0 - a[i]) * u.cycles();
        let edge_time = if cycles > 0.0 { cycles / x.server_freq } else { 0.0 };
        let t_off = if cycles > 0.0 { x.offload_time } else { 0.0 };
        g.latency[i] = t_off + edge_time - window;
    }
    g.capacity = candidate.users.iter().map(|x| x.server_freq).sum::<f64>() - cfg.server_freq_max;
    g.budget = candidate.users.iter().map(|x| x.wpt_power).sum::<f64>() - cfg.ap_power_max;
    Ok(g)
}

/// Primal allocation implied by the multipliers.
///
/// Offload times follow the Lambert-W rule, WPT powers meet energy
/// causality with equality, server frequencies meet the offload deadline
/// with equality and local frequencies are latency-tight.
pub fn recover_primal(dual: &DualVars, a: &[f64], cfg: &SystemConfig, users: &[UserParams]) -> Result<Allocation> {
    check_dims(users.len(), a, Some(dual))?;
    let window = cfg.compute_window();
    let mut out = Allocation::zeros(users.len());
    for (i, u) in users.iter().enumerate() {
        let nats = offloaded_nats(a[i], u);
        let (t_off, f_s) = if nats > 0.0 {
            let t = optimal_offload_time(dual.causality[i], dual.latency[i], a[i], cfg, u);
            if t <= 0.0 {
                return Err(Error::DegenerateOffload { user: Some(i) });
            }
            if t >= window {
                return Err(Error::LatencyExhausted { user: Some(i) });
            }
            (t, nats * u.cycles_per_nat / (window - t))
        } else {
            (0.0, 0.0)
        };
        out.users[i] = UserAllocation {
            local_ratio: a[i],
            local_freq: local_cpu_frequency(a[i], cfg, u).map_err(|e| e.for_user(i))?,
            server_freq: f_s,
            wpt_power: tight_wpt_power(a[i], t_off, cfg, u).map_err(|e| e.for_user(i))?,
            offload_time: t_off,
        };
    }
    Ok(out)
}

/// AP energy of an allocation whose offload times are valid.
pub(crate) fn objective(alloc: &Allocation, cfg: &SystemConfig, users: &[UserParams]) -> f64 {
    let mut total = 0.0;
    for (x, u) in alloc.users.iter().zip(users) {
        let cycles = (1.0 - x.local_ratio) * u.cycles();
        total += cfg.wpt_time() * x.wpt_power;
        if cycles > 0.0 {
            total += cycles * cfg.server_capacitance * x.server_freq * x.server_freq;
        }
    }
    total + cooling_energy(alloc.users.iter().map(|x| x.server_freq), cfg)
}

/// Largest violation of the coupling constraints, which recovery does not enforce.
fn coupling_residual(alloc: &Allocation, cfg: &SystemConfig) -> f64 {
    let f: f64 = alloc.users.iter().map(|x| x.server_freq).sum();
    let p: f64 = alloc.users.iter().map(|x| x.wpt_power).sum();
    let rf = (f - cfg.server_freq_max) / cfg.server_freq_max;
    let rp = (p - cfg.ap_power_max) / cfg.ap_power_max;
    rf.max(rp).max(0.0)
}

/// Reject load splits that no choice of the remaining variables can serve.
///
/// Uses necessary conditions only: latency-tight local frequencies within
/// the chip limit, `Σ(1−a)RB/((1−φ)T) ≤ f_s_max`, and harvested energy at
/// least the demand with the longest possible offload time.
pub fn precheck(a: &[f64], cfg: &SystemConfig, users: &[UserParams]) -> Result<()> {
    validate_instance(cfg, users)?;
    check_dims(users.len(), a, None)?;
    let window = cfg.compute_window();
    let mut cycles = 0.0;
    let mut power = 0.0;
    for (i, u) in users.iter().enumerate() {
        if !(0.0..=1.0).contains(&a[i]) {
            return Err(Error::InvalidParameter { name: "a", value: a[i] });
        }
        local_cpu_frequency(a[i], cfg, u).map_err(|e| e.for_user(i))?;
        let x = (1.0 - a[i]) * u.cycles();
        cycles += x;
        if x > 0.0 && window <= 0.0 {
            return Err(Error::Infeasible(Infeasibility::ServerCapacity { required: f64::INFINITY, limit: cfg.server_freq_max }));
        }
        let demand = if x > 0.0 { u.energy_demand(a[i], window, cfg)? } else { u.local_energy_at_deadline(a[i], cfg) };
        if demand > 0.0 {
            power += demand / u.harvest_per_watt(cfg);
        }
    }
    if cycles > 0.0 {
        let required = cycles / window;
        if required > cfg.server_freq_max {
            return Err(Error::Infeasible(Infeasibility::ServerCapacity { required, limit: cfg.server_freq_max }));
        }
    }
    if power > cfg.ap_power_max {
        return Err(Error::Infeasible(Infeasibility::PowerBudget { required: power, limit: cfg.ap_power_max }));
    }
    Ok(())
}

/// Multipliers at which every user's deadline binds when coupling is ignored.
///
/// For each offloading user, bisects `log μ` until the Lambert-W offload
/// time plus the uncoupled edge time `(1−a)RB/f`, `2δf³ = μ`, fills the
/// compute window. `λ` sits at its tie point with `π = 0`.
pub fn initial_multipliers(a: &[f64], cfg: &SystemConfig, users: &[UserParams]) -> DualVars {
    let n = users.len();
    let window = cfg.compute_window();
    let mut dual = DualVars::zeros(n);
    for (i, u) in users.iter().enumerate() {
        dual.causality[i] = tie_point(0.0, cfg, u);
        let cycles = (1.0 - a[i]) * u.cycles();
        if cycles <= 0.0 || dual.causality[i] <= 0.0 {
            continue;
        }
        let latency = |mu: f64| {
            let t = optimal_offload_time(dual.causality[i], mu, a[i], cfg, u);
            let f = libm::cbrt(mu / (2.0 * cfg.server_capacitance)).min(cfg.server_freq_max);
            t + cycles / f - window
        };
        let (mut lo, mut hi) = (-80.0_f64, 80.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if latency(libm::exp(mid * core::f64::consts::LN_10)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        dual.latency[i] = libm::exp(hi * core::f64::consts::LN_10);
    }
    dual
}

fn tie_point(budget: f64, cfg: &SystemConfig, user: &UserParams) -> f64 {
    let h = user.harvest_per_watt(cfg);
    if h > 0.0 {
        (cfg.wpt_time() + budget) / h
    } else {
        0.0
    }
}

/// Sensitivities of the Lambert-W offload time: `(∂T/∂μ, ∂T/∂λ)`.
fn offload_time_slopes(lambda: f64, mu: f64, t: f64, cfg: &SystemConfig, user: &UserParams) -> (f64, f64) {
    if lambda <= 0.0 || mu <= 0.0 || !t.is_finite() || t <= 0.0 {
        return (0.0, 0.0);
    }
    let d = user.uplink_gain * mu / (cfg.noise_power * lambda);
    let v = w0_plus_one(d);
    if !(v > 0.0) {
        return (0.0, 0.0);
    }
    // T = nats/(w v), v e^v − (e^v − 1) = d
    let dt_dd = -t / (v * v * libm::exp(v));
    (dt_dd * d / mu, -dt_dd * d / lambda)
}

/// `dE_off/dT` at fixed offloaded nats.
fn offload_energy_slope(nats: f64, t: f64, cfg: &SystemConfig, user: &UserParams) -> f64 {
    let z = nats / (t * cfg.user_bandwidth());
    cfg.noise_power / user.uplink_gain * (libm::expm1(z) - z * libm::exp(z))
}

/// Curvature of one user's uncoupled edge objective at `f`, or `None` when `f` sits on a bound.
fn edge_curvature(f: f64, cycles: f64, mu: f64, cfg: &SystemConfig) -> Option<f64> {
    if cycles <= 0.0 || f <= 0.0 || f >= cfg.server_freq_max * (1.0 - 1e-9) {
        return None;
    }
    Some(2.0 * cycles * cfg.server_capacitance + 2.0 * mu * cycles / (f * f * f))
}

/// Maximize the dual from [`initial_multipliers`].
pub fn solve_dual(a: &[f64], cfg: &SystemConfig, users: &[UserParams], opts: &DualOptions) -> Result<DualSolution> {
    solve_dual_from(a, cfg, users, opts, None)
}

/// Maximize the dual by projected subgradient ascent starting from `start`.
///
/// Each multiplier moves in units of its constraint's right-hand side divided
/// by the local slope of its subgradient, so `η0` is a fraction of a
/// Newton step for every constraint. Latency multipliers never change by more
/// than a factor of ten per iteration. The ascent stops once the best
/// recovered feasible primal is within `gap_tol` of the best dual value;
/// hitting `max_iter` yields [`Error::DualNonConvergence`] with the best iterate.
pub fn solve_dual_from(
    a: &[f64],
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &DualOptions,
    start: Option<&DualVars>,
) -> Result<DualSolution> {
    opts.validate()?;
    precheck(a, cfg, users)?;
    let n = users.len();
    let window = cfg.compute_window();
    let cycles: Vec<f64> = (0..n).map(|i| (1.0 - a[i]) * users[i].cycles()).collect();

    let mut dual = match start {
        Some(s) if s.is_valid(n) => {
            let mut d = s.clone();
            let fresh = initial_multipliers(a, cfg, users);
            for ((mu, &c), &init) in d.latency.iter_mut().zip(&cycles).zip(&fresh.latency) {
                if c <= 0.0 {
                    *mu = 0.0;
                } else if *mu <= 0.0 {
                    *mu = init;
                }
            }
            d
        }
        _ => initial_multipliers(a, cfg, users),
    };

    let mut trace = DualTrace::default();
    let mut best_dual = f64::NEG_INFINITY;
    let mut best: Option<(Allocation, f64, DualVars)> = None;
    let mut last_primal = None;

    for iter in 0..opts.max_iter {
        if opts.lambda_rule == LambdaRule::TiePoint {
            for (i, u) in users.iter().enumerate() {
                dual.causality[i] = tie_point(dual.budget, cfg, u);
            }
        }
        let (value, cand) = dual_value(&dual, a, cfg, users, opts)?;
        if value > best_dual {
            best_dual = value;
        }

        let mut residual = f64::INFINITY;
        if let Ok(x) = recover_primal(&dual, a, cfg, users) {
            residual = coupling_residual(&x, cfg);
            let obj = objective(&x, cfg, users);
            if residual <= opts.residual_tol && best.as_ref().is_none_or(|b| obj < b.1) {
                best = Some((x.clone(), obj, dual.clone()));
            }
            last_primal = Some(x);
        }
        let gap = match &best {
            Some((_, obj, _)) if *obj > 0.0 => (obj - best_dual) / obj,
            Some(_) => (-best_dual).max(0.0),
            None => f64::INFINITY,
        };
        trace.iterations = iter + 1;
        trace.final_gap = gap;

        let g = subgradients(&cand, a, cfg, users)?;
        let norm_g = DualVars {
            causality: (0..n)
                .map(|i| clamp(g.causality[i] / (users[i].harvest_per_watt(cfg) * cfg.ap_power_max), opts.clamp))
                .collect(),
            latency: (0..n).map(|i| if cycles[i] > 0.0 { clamp(g.latency[i] / window, opts.clamp) } else { 0.0 }).collect(),
            capacity: clamp(g.capacity / cfg.server_freq_max, opts.clamp),
            budget: clamp(g.budget / cfg.ap_power_max, opts.clamp),
        };
        if opts.record_trace {
            let sq: f64 = norm_g.causality.iter().chain(&norm_g.latency).map(|x| x * x).sum::<f64>()
                + norm_g.capacity * norm_g.capacity
                + norm_g.budget * norm_g.budget;
            trace.iterates.push(TraceEntry {
                iteration: iter,
                multipliers: dual.clone(),
                dual_value: value,
                gap,
                subgradient_norm: libm::sqrt(sq),
                residual,
            });
        }
        if best.is_some() && gap <= opts.gap_tol {
            trace.converged = true;
            break;
        }

        let eta = opts.step0 / libm::sqrt((iter + 1) as f64);
        step(&mut dual, &cand, &norm_g, &cycles, eta, cfg, users, opts);
    }

    let sol = match best {
        Some((primal, objective, multipliers)) => DualSolution {
            multipliers,
            primal,
            objective,
            dual_value: best_dual,
            feasible: true,
            trace,
        },
        None => DualSolution {
            multipliers: dual,
            primal: last_primal.unwrap_or_else(|| Allocation::zeros(n)),
            objective: f64::INFINITY,
            dual_value: best_dual,
            feasible: false,
            trace,
        },
    };
    if sol.trace.converged {
        Ok(sol)
    } else {
        Err(Error::DualNonConvergence(Box::new(sol)))
    }
}

fn clamp(x: f64, bound: f64) -> f64 {
    if x.is_nan() {
        bound
    } else {
        x.clamp(-bound, bound)
    }
}

/// One preconditioned projected subgradient step.
#[allow(clippy::too_many_arguments)]
fn step(
    dual: &mut DualVars,
    cand: &Allocation,
    g: &DualVars,
    cycles: &[f64],
    eta: f64,
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &DualOptions,
) {
    let n = users.len();
    let window = cfg.compute_window();
    let mut capacity_slope = 0.0;
    let mut budget_slope = 0.0;
    let mut latency = vec![0.0; n];
    let mut causality = dual.causality.clone();

    for (i, u) in users.iter().enumerate() {
        let x = &cand.users[i];
        let (lambda, mu) = (dual.causality[i], dual.latency[i]);
        let nats = (1.0 - x.local_ratio) * u.task;
        let h = u.harvest_per_watt(cfg);
        let unclamped_time = x.offload_time < window && nats > 0.0;
        let (dt_dmu, dt_dlambda) =
            if unclamped_time { offload_time_slopes(lambda, mu, x.offload_time, cfg, u) } else { (0.0, 0.0) };

        if cycles[i] > 0.0 {
            let f = x.server_freq;
            // ∂L/∂μ, ∂f/∂μ, ∂f/∂ν for the latency function L = T_off + X/f − (1−φ)T
            let (mut slope, mut df_dmu, mut df_dnu) = (dt_dmu, 0.0, 0.0);
            if let Some(curv) = edge_curvature(f, cycles[i], mu, cfg) {
                df_dmu = cycles[i] / (f * f) / curv;
                df_dnu = -1.0 / curv;
                slope -= cycles[i] / (f * f) * df_dmu;
            }
            let balanced = slope < 0.0 && slope.is_finite() && mu > 0.0;
            let next = if balanced {
                mu + eta * (window / -slope) * g.latency[i]
            } else if g.latency[i] > 0.0 {
                mu.max(f64::MIN_POSITIVE) * (1.0 + eta)
            } else {
                mu * (1.0 - eta)
            };
            latency[i] = if mu > 0.0 { next.clamp(mu / 10.0, mu * 10.0) } else { next.max(0.0) };

            // Coupling slopes along the curve on which this user's deadline
            // stays binding, i.e. with μ following π and ν.
            let (dmu_dpi, dmu_dnu) = if balanced {
                (-dt_dlambda / (h * slope), cycles[i] / (f * f) * df_dnu / slope)
            } else {
                (0.0, 0.0)
            };
            capacity_slope += df_dnu + df_dmu * dmu_dnu;
            if unclamped_time {
                let de_dt = offload_energy_slope(nats, x.offload_time, cfg, u);
                budget_slope += de_dt / h * (dt_dlambda / h + dt_dmu * dmu_dpi);
            }
        }

        if opts.lambda_rule == LambdaRule::Subgradient {
            let unit = tie_point(dual.budget, cfg, u);
            let floor = if nats > 0.0 { opts.lambda_floor } else { 0.0 };
            causality[i] = (lambda + eta * unit * g.causality[i]).max(floor);
        }
    }

    let capacity = if capacity_slope < 0.0 {
        dual.capacity + eta * cfg.server_freq_max / -capacity_slope * g.capacity
    } else {
        dual.capacity
    };
    let budget = if budget_slope < 0.0 {
        dual.budget + eta * cfg.ap_power_max / -budget_slope * g.budget
    } else {
        dual.budget
    };
    dual.latency = latency;
    dual.causality = causality;
    dual.capacity = capacity.max(0.0);
    dual.budget = budget.max(0.0);
}
