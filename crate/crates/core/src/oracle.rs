//! Independent checks of solver output: a brute-force grid search and a
//! KKT residual report.
//!
//! Given a user's local ratio and offload time, the cheapest feasible WPT
//! power meets energy causality with equality and the cheapest server
//! frequency meets the offload deadline with equality, so the search space
//! is two-dimensional per user.

use alloc::vec::Vec;

use crate::algorithm::{Scheme, Solution};
use crate::error::{Error, Infeasibility, Result};
use crate::model::{
    constraint_residuals, cooling_power, local_cpu_frequency, total_ap_energy, validate_instance, Allocation,
    SystemConfig, UserAllocation, UserParams, Violation,
};
use crate::subproblems::DualVars;

/// Grid resolution of [`grid_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Local-ratio points per user over `[0, a_max]`.
    pub a_points: usize,
    /// Offload-time points per user, log-spaced over `(0, (1−φ)T)`.
    pub t_points: usize,
    /// Rounds of zooming in on the incumbent.
    pub refinement_levels: usize,
    /// Bound on objective evaluations per level.
    pub max_evaluations: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { a_points: 200, t_points: 200, refinement_levels: 3, max_evaluations: 10_000_000 }
    }
}

/// Shortest offload time on the grid, relative to the compute window.
const T_MIN_FRACTION: f64 = 1e-6;
/// Refinement keeps this many grid cells on each side of the incumbent.
const ZOOM_CELLS: f64 = 2.0;

/// Per-user search box for one level.
#[derive(Debug, Clone, Copy)]
struct Box2 {
    a_lo: f64,
    a_hi: f64,
    t_lo: f64,
    t_hi: f64,
}

impl Box2 {
    fn a_at(&self, j: usize, n: usize) -> f64 {
        if n <= 1 {
            return self.a_lo;
        }
        if j + 1 == n {
            return self.a_hi;
        }
        self.a_lo + (self.a_hi - self.a_lo) * j as f64 / (n - 1) as f64
    }

    fn t_at(&self, k: usize, n: usize) -> f64 {
        if n <= 1 || k == 0 {
            return self.t_lo;
        }
        if k + 1 == n {
            return self.t_hi;
        }
        self.t_lo * libm::pow(self.t_hi / self.t_lo, k as f64 / (n - 1) as f64)
    }
}

/// A per-user grid point with the energy terms that do not couple users.
#[derive(Debug, Clone, Copy)]
struct Point {
    a: f64,
    t_off: f64,
    power: f64,
    freq: f64,
    /// `φT P_b + (1−a)RBδ f_s²`.
    cost: f64,
}

fn evaluate(a: f64, t_off: f64, cfg: &SystemConfig, u: &UserParams) -> Option<Point> {
    let window = cfg.compute_window();
    let cycles = (1.0 - a) * u.cycles();
    let (t_off, freq) = if cycles > 0.0 {
        if !(t_off > 0.0 && t_off < window) {
            return None;
        }
        (t_off, cycles / (window - t_off))
    } else {
        (0.0, 0.0)
    };
    local_cpu_frequency(a, cfg, u).ok()?;
    let demand = u.energy_demand(a, t_off, cfg).ok()?;
    let power = if demand > 0.0 { demand / u.harvest_per_watt(cfg) } else { 0.0 };
    if !(power <= cfg.ap_power_max) || !(freq <= cfg.server_freq_max) {
        return None;
    }
    let cost = cfg.wpt_time() * power + cycles * cfg.server_capacitance * freq * freq;
    Some(Point { a, t_off, power, freq, cost })
}

fn user_points(b: &Box2, spec: &GridSpec, cfg: &SystemConfig, u: &UserParams, a_max: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    if u.task <= 0.0 {
        pts.extend(evaluate(1.0, 0.0, cfg, u));
        return pts;
    }
    for j in 0..spec.a_points {
        let a = b.a_at(j, spec.a_points);
        if a >= 1.0 {
            continue;
        }
        for k in 0..spec.t_points {
            pts.extend(evaluate(a, b.t_at(k, spec.t_points), cfg, u));
        }
    }
    if a_max >= 1.0 && b.a_hi >= 1.0 {
        pts.extend(evaluate(1.0, 0.0, cfg, u));
    }
    pts
}

fn total_of(points: &[Point], cfg: &SystemConfig) -> Option<f64> {
    let mut cost = 0.0;
    let (mut power, mut freq, mut comp) = (0.0, 0.0, 0.0);
    for p in points {
        cost += p.cost;
        power += p.power;
        freq += p.freq;
        comp += cfg.server_capacitance * p.freq * p.freq * p.freq;
    }
    if power > cfg.ap_power_max || freq > cfg.server_freq_max {
        return None;
    }
    Some(cost + cooling_power(comp, &cfg.cooling) * cfg.compute_window())
}

/// Best combination of per-user candidate lists.
///
/// Joint enumeration for up to two users, cyclic coordinate search for more.
/// Ties go to the lexicographically first grid index.
fn combine(lists: &[Vec<Point>], incumbent: Option<&[Point]>, cfg: &SystemConfig) -> Option<(Vec<Point>, f64)> {
    if lists.iter().any(|l| l.is_empty()) {
        return None;
    }
    let mut best: Option<(Vec<Point>, f64)> = incumbent.and_then(|c| total_of(c, cfg).map(|v| (c.to_vec(), v)));
    let consider = |cand: &[Point], best: &mut Option<(Vec<Point>, f64)>| {
        if let Some(v) = total_of(cand, cfg) {
            if best.as_ref().is_none_or(|b| v < b.1) {
                *best = Some((cand.to_vec(), v));
            }
        }
    };
    match lists.len() {
        1 => {
            for p in &lists[0] {
                consider(&[*p], &mut best);
            }
        }
        2 => {
            for p in &lists[0] {
                for q in &lists[1] {
                    consider(&[*p, *q], &mut best);
                }
            }
        }
        _ => {
            // start from each user's own cheapest point
            let mut current: Vec<Point> = match &best {
                Some((c, _)) => c.clone(),
                None => lists
                    .iter()
                    .map(|l| *l.iter().min_by(|x, y| x.cost.total_cmp(&y.cost)).expect("nonempty"))
                    .collect(),
            };
            consider(&current, &mut best);
            for _ in 0..20 {
                let before = best.as_ref().map(|b| b.1);
                for i in 0..lists.len() {
                    if let Some((c, _)) = &best {
                        current = c.clone();
                    }
                    for p in &lists[i] {
                        current[i] = *p;
                        consider(&current, &mut best);
                    }
                }
                if best.as_ref().map(|b| b.1) == before {
                    break;
                }
            }
        }
    }
    best
}

fn to_solution(points: &[Point], levels: usize, cfg: &SystemConfig, users: &[UserParams]) -> Result<Solution> {
    let mut alloc = Allocation::zeros(users.len());
    for (i, (p, u)) in points.iter().zip(users).enumerate() {
        alloc.users[i] = UserAllocation {
            local_ratio: p.a,
            local_freq: local_cpu_frequency(p.a, cfg, u).map_err(|e| e.for_user(i))?,
            server_freq: p.freq,
            wpt_power: p.power,
            offload_time: p.t_off,
        };
    }
    let report = total_ap_energy(&alloc, cfg, users)?;
    Ok(Solution {
        scheme: Scheme::Oracle,
        allocation: alloc,
        history: alloc::vec![report.total],
        report,
        dual: DualVars::zeros(users.len()),
        iterations: levels + 1,
        inner_iterations: 0,
        converged: true,
        duality_gap: f64::NAN,
        traces: Vec::new(),
    })
}

/// Exhaustive search over per-user (local ratio, offload time) grids.
///
/// Points violating the shared server or power budget are discarded, the
/// feasible minimum is kept, and each refinement level re-grids a box of
/// two cells around the incumbent. Limited to three users.
pub fn grid_search(cfg: &SystemConfig, users: &[UserParams], spec: &GridSpec) -> Result<Solution> {
    validate_instance(cfg, users)?;
    if users.len() > 3 {
        return Err(Error::InvalidParameter { name: "system.I", value: users.len() as f64 });
    }
    if spec.a_points < 2 || spec.t_points < 2 {
        return Err(Error::InvalidParameter { name: "oracle.points", value: spec.a_points.min(spec.t_points) as f64 });
    }
    let per_user = spec.a_points * spec.t_points + 1;
    let evaluations = match users.len() {
        1 => per_user,
        2 => per_user * per_user,
        n => per_user * n * 21,
    };
    if evaluations > spec.max_evaluations {
        return Err(Error::InvalidParameter { name: "oracle.max_evaluations", value: evaluations as f64 });
    }

    let window = cfg.compute_window();
    let a_max: Vec<f64> = users.iter().map(|u| u.max_local_ratio(cfg)).collect();
    let mut boxes: Vec<Box2> = a_max
        .iter()
        .map(|&hi| Box2 { a_lo: 0.0, a_hi: hi, t_lo: T_MIN_FRACTION * window, t_hi: window * (1.0 - 1e-9) })
        .collect();

    let mut incumbent: Option<(Vec<Point>, f64)> = None;
    for level in 0..=spec.refinement_levels {
        let lists: Vec<Vec<Point>> =
            users.iter().enumerate().map(|(i, u)| user_points(&boxes[i], spec, cfg, u, a_max[i])).collect();
        if let Some(found) = combine(&lists, incumbent.as_ref().map(|c| c.0.as_slice()), cfg) {
            incumbent = Some(found);
        }
        let Some((best, _)) = &incumbent else {
            return Err(Error::Infeasible(Infeasibility::NoGridPoint));
        };
        if level == spec.refinement_levels {
            break;
        }
        for (i, p) in best.iter().enumerate() {
            let b = boxes[i];
            let da = (b.a_hi - b.a_lo) / (spec.a_points - 1) as f64 * ZOOM_CELLS;
            let ratio = libm::pow(b.t_hi / b.t_lo, ZOOM_CELLS / (spec.t_points - 1) as f64);
            let centre = if p.t_off > 0.0 { p.t_off } else { b.t_lo };
            boxes[i] = Box2 {
                a_lo: (p.a - da).max(0.0),
                a_hi: (p.a + da).min(a_max[i]),
                t_lo: (centre / ratio).max(T_MIN_FRACTION * window * 1e-3),
                t_hi: (centre * ratio).min(window * (1.0 - 1e-12)),
            };
        }
    }
    let (best, _) = incumbent.ok_or(Error::Infeasible(Infeasibility::NoGridPoint))?;
    to_solution(&best, spec.refinement_levels, cfg, users)
}

/// Complementary-slackness, primal and stationarity residuals of a solution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KktReport {
    /// `|λ_i (E_loc + E_off − E_h)|` relative to the objective.
    pub causality: Vec<f64>,
    /// `|μ_i (T_off + T_exe − (1−φ)T)|` relative to the objective.
    pub latency: Vec<f64>,
    /// `|ν (Σ f_s − f_s_max)|` relative to the objective.
    pub capacity: f64,
    /// `|π (Σ P_b − P_b_max)|` relative to the objective.
    pub budget: f64,
    /// Constraints with positive normalized residual.
    pub primal: Vec<Violation>,
    /// Offload-time first-order residual `|λ dE_off/dT + μ| / μ` per user.
    pub stationarity: Vec<f64>,
}

impl KktReport {
    pub fn max_slackness(&self) -> f64 {
        self.causality.iter().chain(&self.latency).copied().fold(self.capacity.max(self.budget), f64::max)
    }

    pub fn max_primal(&self) -> f64 {
        self.primal.iter().map(|v| v.residual).fold(0.0, f64::max)
    }

    pub fn max_stationarity(&self) -> f64 {
        self.stationarity.iter().copied().fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(sol: &Solution, cfg: &SystemConfig, users: &[UserParams]) -> Result<KktReport> {
    let alloc = &sol.allocation;
    let n = users.len();
    if alloc.len() != n || sol.dual.causality.len() != n || sol.dual.latency.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: alloc.len() });
    }
    let scale = if sol.report.total > 0.0 { sol.report.total } else { 1.0 };
    let window = cfg.compute_window();
    let mut out = KktReport::default();
    for (i, (x, u)) in alloc.users.iter().zip(users).enumerate() {
        let (lambda, mu) = (sol.dual.causality[i], sol.dual.latency[i]);
        let nats = (1.0 - x.local_ratio) * u.task;
        let offload = u.offload_energy(x.local_ratio, x.offload_time, cfg).unwrap_or(f64::INFINITY);
        let gap = u.local_energy_at_deadline(x.local_ratio, cfg) + offload - x.wpt_power * u.harvest_per_watt(cfg);
        out.causality.push(if lambda == 0.0 { 0.0 } else { (lambda * gap).abs() / scale });
        let cycles = nats * u.cycles_per_nat;
        let busy = if cycles > 0.0 { x.offload_time + cycles / x.server_freq } else { 0.0 };
        out.latency.push(if mu == 0.0 { 0.0 } else { (mu * (busy - window)).abs() / scale });
        let stationarity = if nats > 0.0 && lambda > 0.0 && mu > 0.0 && x.offload_time > 0.0 {
            let z = nats / (x.offload_time * cfg.user_bandwidth());
            let slope = cfg.noise_power / u.uplink_gain * (libm::expm1(z) - z * libm::exp(z));
            (lambda * slope + mu).abs() / mu
        } else {
            0.0
        };
        out.stationarity.push(stationarity);
    }
    let f: f64 = alloc.users.iter().map(|x| x.server_freq).sum();
    let p: f64 = alloc.users.iter().map(|x| x.wpt_power).sum();
    out.capacity = if sol.dual.capacity == 0.0 { 0.0 } else { (sol.dual.capacity * (f - cfg.server_freq_max)).abs() / scale };
    out.budget = if sol.dual.budget == 0.0 { 0.0 } else { (sol.dual.budget * (p - cfg.ap_power_max)).abs() / scale };
    out.primal = constraint_residuals(alloc, cfg, users).into_iter().filter(|v| v.residual > 0.0).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::run_baseline;
    use crate::dual::DualOptions;
    use crate::model::Constraint;
    use alloc::vec;

    #[test]
    fn empty_workload_is_free() {
        let cfg = SystemConfig { num_users: 1, ..SystemConfig::default() };
        let sol = grid_search(&cfg, &[UserParams { task: 0.0, ..UserParams::default() }], &GridSpec::default()).unwrap();
        assert_eq!(sol.report.total, 0.0);
    }

    #[test]
    fn three_point_ratio_grid_matches_baselines() {
        // a-grid {0, 0.5, 1}: the best point per ratio is that baseline's optimum up to the T_off grid.
        let cfg = SystemConfig { num_users: 1, ..SystemConfig::default() };
        let users = [UserParams { task: 2.5e3, ..UserParams::default() }];
        let spec = GridSpec { a_points: 3, t_points: 400, refinement_levels: 0, ..GridSpec::default() };
        let grid = grid_search(&cfg, &users, &spec).unwrap();
        let best = Scheme::BASELINES
            .iter()
            .filter_map(|&s| run_baseline(&cfg, &users, s, &DualOptions { gap_tol: 1e-9, ..DualOptions::default() }).ok())
            .map(|s| s.report.total)
            .fold(f64::INFINITY, f64::min);
        assert!(grid.report.total >= best * (1.0 - 1e-9));
        assert!(grid.report.total <= best * (1.0 + 1e-3), "{} vs {best}", grid.report.total);
    }

    #[test]
    fn refinement_never_hurts() {
        let cfg = SystemConfig { num_users: 1, ..SystemConfig::default() };
        let users = [UserParams { task: 3e3, ..UserParams::default() }];
        let mut last = f64::INFINITY;
        for levels in 0..4 {
            let spec = GridSpec { a_points: 30, t_points: 30, refinement_levels: levels, ..GridSpec::default() };
            let v = grid_search(&cfg, &users, &spec).unwrap().report.total;
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn two_users_enumerated_jointly() {
        let cfg = SystemConfig { num_users: 2, ..SystemConfig::default() };
        let users = [UserParams { task: 3e3, ..UserParams::default() }, UserParams { task: 1e3, ..UserParams::default() }];
        let spec = GridSpec { a_points: 20, t_points: 20, refinement_levels: 1, ..GridSpec::default() };
        let sol = grid_search(&cfg, &users, &spec).unwrap();
        assert!(sol.report.violations.is_empty());
        assert_eq!(sol.allocation.users[1].local_ratio, 1.0);
    }

    #[test]
    fn rejects_oversized_grids_and_instances() {
        let cfg = SystemConfig { num_users: 2, ..SystemConfig::default() };
        let users = [UserParams::default(); 2];
        assert!(matches!(grid_search(&cfg, &users, &GridSpec::default()), Err(Error::InvalidParameter { .. })));
        let cfg4 = SystemConfig { num_users: 4, ..SystemConfig::default() };
        assert!(grid_search(&cfg4, &[UserParams::default(); 4], &GridSpec::default()).is_err());
    }

    #[test]
    fn kkt_flags_infeasible_allocation() {
        let cfg = SystemConfig { num_users: 1, ..SystemConfig::default() };
        let users = [UserParams::default()];
        let mut sol = run_baseline(&cfg, &users, Scheme::Local, &DualOptions::default()).unwrap();
        let ok = kkt_residuals(&sol, &cfg, &users).unwrap();
        assert!(ok.primal.is_empty() && ok.max_slackness() < 1e-12);
        sol.allocation.users[0].wpt_power *= 0.5;
        sol.dual = DualVars::zeros(1);
        let bad = kkt_residuals(&sol, &cfg, &users).unwrap();
        assert_eq!(bad.primal[0].constraint, Constraint::EnergyCausality { user: 0 });
        // zero multiplier on a violated constraint contributes no slackness
        assert_eq!(bad.causality, vec![0.0]);
    }
}
