//! Joint design by alternating optimization, and the fixed-ratio baselines.

use alloc::vec;
use alloc::vec::Vec;

use crate::dual::{solve_dual_from, DualOptions, DualSolution, DualTrace};
use crate::error::{Error, Infeasibility, Result};
use crate::load::{optimize_a, LoadBounds, LoadOptions};
use crate::model::{total_ap_energy, validate_instance, Allocation, EnergyReport, SystemConfig, UserParams};
use crate::subproblems::DualVars;

/// Allocation policy that produced a [`Solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Joint optimization of the local ratios and all other variables.
    Proposed,
    /// Every task computed locally (`a = 1`).
    Local,
    /// Every task offloaded (`a = 0`).
    Full,
    /// Half of every task offloaded (`a = 0.5`).
    Half,
    /// Brute-force grid search.
    Oracle,
}

impl Scheme {
    pub const BASELINES: [Scheme; 3] = [Scheme::Local, Scheme::Full, Scheme::Half];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Local => "local",
            Scheme::Full => "full",
            Scheme::Half => "half",
            Scheme::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        [Scheme::Proposed, Scheme::Local, Scheme::Full, Scheme::Half, Scheme::Oracle]
            .into_iter()
            .find(|s| s.name() == name)
    }

    /// Local ratio a fixed-ratio scheme assigns to every user.
    pub fn fixed_ratio(self) -> Option<f64> {
        match self {
            Scheme::Local => Some(1.0),
            Scheme::Full => Some(0.0),
            Scheme::Half => Some(0.5),
            Scheme::Proposed | Scheme::Oracle => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub scheme: Scheme,
    pub allocation: Allocation,
    pub report: EnergyReport,
    /// Multipliers of the final inner problem (zero for the oracle).
    pub dual: DualVars,
    /// Outer iterations (1 for fixed-ratio schemes).
    pub iterations: usize,
    /// Dual-ascent iterations summed over all inner solves.
    pub inner_iterations: usize,
    pub converged: bool,
    /// Objective after each accepted outer iteration, starting with the initial point.
    pub history: Vec<f64>,
    /// Relative gap between the final objective and its dual bound.
    pub duality_gap: f64,
    /// Dual traces of the inner solves, kept when requested.
    pub traces: Vec<DualTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    pub dual: DualOptions,
    /// Duality-gap tolerance of inner solves inside the alternating loop.
    pub inner_gap_tol: f64,
    pub load: LoadOptions,
    /// Outer stop: largest change of any local ratio.
    pub a_tol: f64,
    /// Outer stop: relative objective decrease.
    pub obj_tol: f64,
    pub max_outer: usize,
    /// Smallest fraction of the load step tried before the outer loop gives up.
    pub min_step: f64,
    pub keep_traces: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            dual: DualOptions::default(),
            inner_gap_tol: 1e-7,
            load: LoadOptions::default(),
            a_tol: 1e-4,
            obj_tol: 1e-5,
            max_outer: 200,
            min_step: 1.0 / 64.0,
            keep_traces: false,
        }
    }
}

/// Solve the inner problem, accepting a feasible best iterate at the iteration cap.
fn inner(
    a: &[f64],
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &DualOptions,
    warm: Option<&DualVars>,
) -> Result<DualSolution> {
    match solve_dual_from(a, cfg, users, opts, warm) {
        Ok(s) => Ok(s),
        Err(Error::DualNonConvergence(s)) if s.feasible => Ok(*s),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scheme: Scheme,
    sol: DualSolution,
    cfg: &SystemConfig,
    users: &[UserParams],
    iterations: usize,
    inner_iterations: usize,
    converged: bool,
    history: Vec<f64>,
    traces: Vec<DualTrace>,
) -> Result<Solution> {
    let report = total_ap_energy(&sol.primal, cfg, users)?;
    let duality_gap = if report.total > 0.0 { (report.total - sol.dual_value) / report.total } else { 0.0 };
    Ok(Solution {
        scheme,
        allocation: sol.primal,
        report,
        dual: sol.multipliers,
        iterations,
        inner_iterations,
        converged,
        history,
        duality_gap,
        traces,
    })
}

/// Solve the problem for a fixed-ratio scheme.
pub fn run_baseline(cfg: &SystemConfig, users: &[UserParams], scheme: Scheme, opts: &DualOptions) -> Result<Solution> {
    validate_instance(cfg, users)?;
    let ratio = scheme.fixed_ratio().ok_or(Error::InvalidParameter { name: "scheme", value: f64::NAN })?;
    let window = cfg.compute_window();
    let mut a = Vec::with_capacity(users.len());
    for (i, u) in users.iter().enumerate() {
        if u.task <= 0.0 {
            a.push(1.0);
            continue;
        }
        if ratio > u.max_local_ratio(cfg) {
            return Err(Error::Infeasible(Infeasibility::LocalFrequency {
                user: i,
                required: ratio * u.cycles() / window,
                limit: u.freq_max,
            }));
        }
        a.push(ratio);
    }
    let sol = inner(&a, cfg, users, opts, None)?;
    let iterations = sol.trace.iterations;
    let converged = sol.trace.converged;
    let objective = sol.objective;
    let traces = if opts.record_trace { vec![sol.trace.clone()] } else { Vec::new() };
    finish(scheme, sol, cfg, users, 1, iterations, converged, vec![objective], traces)
}

/// Starting ratios: `min(0.5, a_max)`, then other fractions of `a_max` if that is infeasible.
fn initial_point(
    bounds: &LoadBounds,
    cfg: &SystemConfig,
    users: &[UserParams],
    opts: &DualOptions,
) -> Result<(Vec<f64>, DualSolution)> {
    let start: Vec<f64> =
        users.iter().zip(&bounds.max).map(|(u, &hi)| if u.task <= 0.0 { 1.0 } else { hi.min(0.5) }).collect();
    match inner(&start, cfg, users, opts, None) {
        Ok(s) => return Ok((start, s)),
        Err(Error::Infeasible(_)) | Err(Error::DualNonConvergence(_)) => {}
        Err(e) => return Err(e),
    }
    for frac in [1.0, 0.0, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875] {
        let a: Vec<f64> =
            users.iter().zip(&bounds.max).map(|(u, &hi)| if u.task <= 0.0 { 1.0 } else { frac * hi }).collect();
        if let Ok(s) = inner(&a, cfg, users, opts, None) {
            return Ok((a, s));
        }
    }
    Err(Error::Infeasible(Infeasibility::NoFeasibleLoad))
}

/// Alternate between the inner dual solve at fixed ratios and the load step.
///
/// The load step is evaluated at the recovered primal and multipliers. For
/// users that currently compute everything locally the load step sees the
/// limits of an infinitesimal offload instead, `T_off = (1−φ)T`, `f_s = 0`,
/// `μ = 0`, so it can tell whether offloading a little would pay off. A
/// proposed ratio vector is accepted only if the re-solved inner objective
/// does not increase; otherwise the step is halved down to `min_step`, and
/// the loop ends when no fraction helps.
pub fn run_joint(cfg: &SystemConfig, users: &[UserParams], opts: &JointOptions) -> Result<Solution> {
    validate_instance(cfg, users)?;
    let bounds = LoadBounds::new(cfg, users);
    let dual_opts = DualOptions { gap_tol: opts.inner_gap_tol, ..opts.dual };
    let window = cfg.compute_window();

    let (mut a, mut sol) = initial_point(&bounds, cfg, users, &dual_opts)?;
    let mut history = vec![sol.objective];
    let mut inner_iterations = sol.trace.iterations;
    let mut traces = Vec::new();
    if opts.keep_traces {
        traces.push(sol.trace.clone());
    }
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_outer {
        iterations += 1;
        let mut probe = sol.primal.clone();
        let mut multipliers = sol.multipliers.clone();
        for (i, u) in users.iter().enumerate() {
            if u.task > 0.0 && a[i] >= 1.0 {
                probe.users[i].offload_time = window;
                probe.users[i].server_freq = 0.0;
                multipliers.latency[i] = 0.0;
            }
        }
        let target = optimize_a(&probe, &multipliers, cfg, users, &opts.load)?;

        let mut t = 1.0;
        let mut accepted = None;
        while t >= opts.min_step {
            let trial: Vec<f64> = (0..users.len())
                .map(|i| (a[i] + t * (target[i] - a[i])).clamp(bounds.min[i], bounds.max[i]))
                .collect();
            let moved = trial.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if moved == 0.0 {
                break;
            }
            match inner(&trial, cfg, users, &dual_opts, Some(&sol.multipliers)) {
                Ok(s) => {
                    inner_iterations += s.trace.iterations;
                    if opts.keep_traces {
                        traces.push(s.trace.clone());
                    }
                    if s.objective <= sol.objective {
                        accepted = Some((trial, s, moved));
                        break;
                    }
                }
                Err(Error::Infeasible(_)) | Err(Error::DualNonConvergence(_)) | Err(Error::InfeasibleLocalLoad { .. }) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }

        let Some((trial, s, moved)) = accepted else {
            converged = true;
            break;
        };
        let decrease = if sol.objective > 0.0 { (sol.objective - s.objective) / sol.objective } else { 0.0 };
        a = trial;
        sol = s;
        history.push(sol.objective);
        if moved <= opts.a_tol && decrease <= opts.obj_tol {
            converged = true;
            break;
        }
    }
    finish(Scheme::Proposed, sol, cfg, users, iterations, inner_iterations, converged, history, traces)
}
