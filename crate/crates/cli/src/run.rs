//! Execution of scenario points under the requested schemes.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use wpt_mec_core::{
    grid_search, run_baseline, run_joint, DualOptions, DualTrace, Error as CoreError, JointOptions, Scheme, Solution,
};

use crate::scenario::{Point, Scenario, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Proposed,
    Local,
    Full,
    Half,
    Oracle,
    /// The proposed design and the three baselines.
    All,
}

impl Mode {
    pub fn from_name(name: &str) -> Option<Mode> {
        match name {
            "proposed" => Some(Mode::Proposed),
            "local" => Some(Mode::Local),
            "full" => Some(Mode::Full),
            "half" => Some(Mode::Half),
            "oracle" => Some(Mode::Oracle),
            "all" => Some(Mode::All),
            _ => None,
        }
    }

    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            Mode::Proposed => vec![Scheme::Proposed],
            Mode::Local => vec![Scheme::Local],
            Mode::Full => vec![Scheme::Full],
            Mode::Half => vec![Scheme::Half],
            Mode::Oracle => vec![Scheme::Oracle],
            Mode::All => vec![Scheme::Proposed, Scheme::Local, Scheme::Full, Scheme::Half],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: Mode,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Keep per-iteration dual traces.
    pub trace: bool,
    /// Record wall time (makes output non-reproducible).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { mode: Mode::Proposed, jobs: 1, trace: false, timing: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A solution was produced but the iteration cap stopped the solver.
    NotConverged,
    Infeasible,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotConverged => "not_converged",
            Status::Infeasible => "infeasible",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCoord {
    pub param: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub total: f64,
    pub wpt: f64,
    /// Edge execution energy summed over users.
    pub comp: f64,
    pub cool: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub a: f64,
    pub f_u: f64,
    pub f_s: f64,
    pub t_off: f64,
    pub p_b: f64,
}

/// One dual-ascent iteration; non-finite values are stored as `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Index of the inner solve within the record.
    pub solve: usize,
    pub iteration: usize,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    pub subgradient_norm: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sweep: Vec<SweepCoord>,
    pub scheme: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub energy: Option<Energies>,
    pub users: Vec<UserRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// Relative duality gap; absent for the oracle.
    pub duality_gap: Option<f64>,
    /// Objective after each outer iteration.
    pub history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceRecord>,
}

impl Record {
    pub fn failed(&self) -> bool {
        self.status != Status::Ok
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn trace_records(traces: &[DualTrace]) -> Vec<TraceRecord> {
    traces
        .iter()
        .enumerate()
        .flat_map(|(solve, t)| {
            t.iterates.iter().map(move |e| TraceRecord {
                solve,
                iteration: e.iteration,
                dual_value: finite(e.dual_value),
                gap: finite(e.gap),
                subgradient_norm: finite(e.subgradient_norm),
                residual: finite(e.residual),
            })
        })
        .collect()
}

fn solve(point: &Point, scheme: Scheme, settings: &SolverSettings, trace: bool) -> Result<Solution, CoreError> {
    let (cfg, users) = (&point.config, &point.users[..]);
    match scheme {
        Scheme::Proposed => {
            let dual = DualOptions { record_trace: trace, ..settings.joint.dual };
            run_joint(cfg, users, &JointOptions { dual, keep_traces: trace, ..settings.joint })
        }
        Scheme::Oracle => grid_search(cfg, users, &settings.grid),
        _ => run_baseline(cfg, users, scheme, &DualOptions { record_trace: trace, ..settings.dual }),
    }
}

/// Solve one point under one scheme; failures become records, never panics or aborts.
pub fn solve_point(point: &Point, scheme: Scheme, settings: &SolverSettings, opts: &RunOptions) -> Record {
    let start = Instant::now();
    let outcome = solve(point, scheme, settings, opts.trace);
    let wall_time_s = opts.timing.then(|| start.elapsed().as_secs_f64());
    let sweep = point.coords.iter().map(|(param, value)| SweepCoord { param: param.clone(), value: *value }).collect();
    let mut record = Record {
        sweep,
        scheme: scheme.name().to_string(),
        status: Status::Error,
        message: None,
        energy: None,
        users: Vec::new(),
        converged: false,
        iterations: 0,
        inner_iterations: 0,
        duality_gap: None,
        history: Vec::new(),
        wall_time_s,
        traces: Vec::new(),
    };
    match outcome {
        Ok(sol) => {
            let r = &sol.report;
            record.status = if !sol.report.violations.is_empty() {
                record.message = Some(format!("{} constraint violation(s)", sol.report.violations.len()));
                Status::Error
            } else if sol.converged {
                Status::Ok
            } else {
                Status::NotConverged
            };
            record.energy = Some(Energies { total: r.total, wpt: r.wpt, comp: r.edge, cool: r.cooling });
            record.users = sol
                .allocation
                .users
                .iter()
                .map(|x| UserRecord {
                    a: x.local_ratio,
                    f_u: x.local_freq,
                    f_s: x.server_freq,
                    t_off: x.offload_time,
                    p_b: x.wpt_power,
                })
                .collect();
            record.converged = sol.converged;
            record.iterations = sol.iterations;
            record.inner_iterations = sol.inner_iterations;
            record.duality_gap = finite(sol.duality_gap);
            record.history = sol.history.clone();
            record.traces = trace_records(&sol.traces);
        }
        Err(CoreError::Infeasible(why)) => {
            record.status = Status::Infeasible;
            record.message = Some(CoreError::Infeasible(why).to_string());
        }
        Err(e) => record.message = Some(e.to_string()),
    }
    record
}

/// Run every point of the scenario under every scheme of the mode.
///
/// Records come back point-major, schemes in mode order, independent of
/// how many workers ran them.
pub fn run(points: &[Point], scenario: &Scenario, opts: &RunOptions) -> Vec<Record> {
    let schemes = opts.mode.schemes();
    let tasks: Vec<(usize, Scheme)> =
        (0..points.len()).flat_map(|p| schemes.iter().map(move |&s| (p, s))).collect();
    let settings = &scenario.solver;
    let workers = opts.jobs.max(1).min(tasks.len().max(1));
    if workers == 1 {
        return tasks.iter().map(|&(p, s)| solve_point(&points[p], s, settings, opts)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Record>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(p, s)) = tasks.get(k) else { break };
                let record = solve_point(&points[p], s, settings, opts);
                slots.lock().expect("result buffer poisoned")[k] = Some(record);
            });
        }
    });
    slots.into_inner().expect("result buffer poisoned").into_iter().map(|r| r.expect("every task ran")).collect()
}
