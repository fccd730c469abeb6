//! Physical model of a wireless-powered multiuser edge computing slot.
//!
//! A slot of length `T` is split into a wireless power transfer phase of
//! length `φT` and a compute window of length `(1−φ)T`. Each user harvests
//! `P_b φ T θ H` joules, runs a fraction `a` of its task locally at the
//! latency-tight DVFS frequency, and offloads the rest over an orthogonal
//! uplink channel of bandwidth `W/I`. The AP pays for WPT, edge execution
//! (`δ f³` power) and cooling of the server.
//!
//! Everything here is a pure function of its inputs.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Cooling of the edge server: outside-air (cubic) complemented by chilled water (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingParams {
    /// Outside-air coefficient, W⁻².
    pub oa_coeff: f64,
    /// Chilled-water coefficient, dimensionless.
    pub cw_coeff: f64,
    /// Outside-air capacity, W.
    pub oa_capacity: f64,
}

impl Default for CoolingParams {
    fn default() -> Self {
        CoolingParams { oa_coeff: 1e-3, cw_coeff: 0.5, oa_capacity: 10.0 }
    }
}

impl CoolingParams {
    /// Disabled cooling (both coefficients zero).
    pub const OFF: CoolingParams = CoolingParams { oa_coeff: 0.0, cw_coeff: 0.0, oa_capacity: f64::INFINITY };

    /// Computing power above which chilled water takes over the marginal load.
    pub fn threshold(&self) -> f64 {
        let balance = if self.oa_coeff > 0.0 {
            libm::sqrt(self.cw_coeff / (3.0 * self.oa_coeff))
        } else {
            f64::INFINITY
        };
        self.oa_capacity.min(balance)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.oa_coeff >= 0.0 && self.oa_coeff.is_finite(), "cooling.eps1", self.oa_coeff)?;
        check(self.cw_coeff >= 0.0 && self.cw_coeff.is_finite(), "cooling.eps2", self.cw_coeff)?;
        check(self.oa_capacity >= 0.0, "cooling.P_a_max", self.oa_capacity)
    }
}

/// Slot, band, AP and server parameters shared by all users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Slot duration `T`, s.
    pub slot: f64,
    /// Fraction of the slot spent on wireless power transfer, `φ`.
    pub wpt_fraction: f64,
    /// System bandwidth `W`, Hz, shared equally by the users.
    pub bandwidth: f64,
    pub num_users: usize,
    /// Server CPU capacity, Hz.
    pub server_freq_max: f64,
    /// AP maximum transmit power, W.
    pub ap_power_max: f64,
    /// Receiver noise power at the AP, W.
    pub noise_power: f64,
    /// Server switched-capacitance coefficient `δ`.
    pub server_capacitance: f64,
    pub cooling: CoolingParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            slot: 0.2,
            wpt_fraction: 0.4,
            bandwidth: 5e6,
            num_users: 5,
            server_freq_max: 2e9,
            ap_power_max: 20.0,
            noise_power: 1e-9,
            server_capacitance: 1e-26,
            cooling: CoolingParams::default(),
        }
    }
}

impl SystemConfig {
    /// Per-user uplink bandwidth `W/I`.
    pub fn user_bandwidth(&self) -> f64 {
        self.bandwidth / self.num_users as f64
    }

    /// Duration of the power-transfer phase, `φT`.
    pub fn wpt_time(&self) -> f64 {
        self.wpt_fraction * self.slot
    }

    /// Time left for offloading and computing, `(1−φ)T`.
    pub fn compute_window(&self) -> f64 {
        (1.0 - self.wpt_fraction) * self.slot
    }

    pub fn validate(&self) -> Result<()> {
        check(self.slot > 0.0 && self.slot.is_finite(), "system.T", self.slot)?;
        check((0.0..=1.0).contains(&self.wpt_fraction), "system.phi", self.wpt_fraction)?;
        check(self.bandwidth > 0.0 && self.bandwidth.is_finite(), "system.W", self.bandwidth)?;
        check(self.num_users >= 1, "system.I", self.num_users as f64)?;
        check(self.server_freq_max > 0.0, "system.f_s_max", self.server_freq_max)?;
        check(self.ap_power_max > 0.0, "system.P_b_max", self.ap_power_max)?;
        check(self.noise_power > 0.0, "system.sigma2", self.noise_power)?;
        check(self.server_capacitance > 0.0, "system.delta", self.server_capacitance)?;
        self.cooling.validate()
    }
}

/// Task, chip and channel parameters of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserParams {
    /// Task size `R`, nats.
    pub task: f64,
    /// CPU cycles per nat `B`.
    pub cycles_per_nat: f64,
    /// Switched-capacitance coefficient `k` of the user chip.
    pub capacitance: f64,
    /// Maximum local CPU frequency, Hz.
    pub freq_max: f64,
    /// RF-to-DC conversion efficiency `θ`.
    pub efficiency: f64,
    /// Downlink (power transfer) channel gain `H`.
    pub downlink_gain: f64,
    /// Effective uplink channel gain `g`.
    pub uplink_gain: f64,
}

impl Default for UserParams {
    fn default() -> Self {
        UserParams {
            task: 1.5e3,
            cycles_per_nat: 1e3,
            capacitance: 1e-26,
            freq_max: 1e9,
            efficiency: 0.3,
            downlink_gain: 1e-3,
            uplink_gain: 1e-7,
        }
    }
}

impl UserParams {
    pub fn validate(&self) -> Result<()> {
        check(self.task >= 0.0 && self.task.is_finite(), "user.R", self.task)?;
        check(self.cycles_per_nat > 0.0, "user.B", self.cycles_per_nat)?;
        check(self.capacitance > 0.0, "user.k", self.capacitance)?;
        check(self.freq_max > 0.0, "user.f_u_max", self.freq_max)?;
        check(self.efficiency > 0.0 && self.efficiency < 1.0, "user.theta", self.efficiency)?;
        check(self.downlink_gain > 0.0, "user.H", self.downlink_gain)?;
        check(self.uplink_gain > 0.0, "user.g", self.uplink_gain)
    }

    /// Total CPU cycles of the task, `R·B`.
    pub fn cycles(&self) -> f64 {
        self.task * self.cycles_per_nat
    }

    /// Joules harvested per watt of transmit power, `φTθH`.
    pub fn harvest_per_watt(&self, cfg: &SystemConfig) -> f64 {
        cfg.wpt_time() * self.efficiency * self.downlink_gain
    }

    /// Local computing energy when the local part just meets the deadline,
    /// `a³R³kB³ / ((1−φ)T)²`.
    pub fn local_energy_at_deadline(&self, a: f64, cfg: &SystemConfig) -> f64 {
        let window = cfg.compute_window();
        let cycles = a * self.cycles();
        self.capacitance * cycles * cycles * cycles / (window * window)
    }

    /// Offloading energy `P_tra · T_off` with the convention that an empty
    /// offload costs nothing.
    pub fn offload_energy(&self, a: f64, offload_time: f64, cfg: &SystemConfig) -> Result<f64> {
        let nats = (1.0 - a) * self.task;
        if nats <= 0.0 {
            return Ok(0.0);
        }
        if offload_time <= 0.0 {
            return Err(Error::DegenerateOffload { user: None });
        }
        let exponent = nats / (offload_time * cfg.user_bandwidth());
        Ok(cfg.noise_power / self.uplink_gain * libm::expm1(exponent) * offload_time)
    }

    /// Energy the user must harvest to finish its task: local plus offload.
    pub fn energy_demand(&self, a: f64, offload_time: f64, cfg: &SystemConfig) -> Result<f64> {
        Ok(self.local_energy_at_deadline(a, cfg) + self.offload_energy(a, offload_time, cfg)?)
    }

    /// Largest local ratio whose latency-tight frequency stays within `f_u_max`.
    pub fn max_local_ratio(&self, cfg: &SystemConfig) -> f64 {
        let cycles = self.cycles();
        if cycles <= 0.0 {
            return 1.0;
        }
        (self.freq_max * cfg.compute_window() / cycles).min(1.0)
    }
}

fn check(ok: bool, name: &'static str, value: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

/// Validate a configuration together with its user list.
pub fn validate_instance(cfg: &SystemConfig, users: &[UserParams]) -> Result<()> {
    cfg.validate()?;
    if users.len() != cfg.num_users {
        return Err(Error::DimensionMismatch { expected: cfg.num_users, found: users.len() });
    }
    users.iter().try_for_each(UserParams::validate)
}

/// Decision variables of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserAllocation {
    /// Fraction of the task computed locally, `a ∈ [0, 1]`.
    pub local_ratio: f64,
    /// Local CPU frequency, Hz.
    pub local_freq: f64,
    /// Server CPU frequency assigned to this user, Hz.
    pub server_freq: f64,
    /// AP transmit power for this user's WPT beam, W.
    pub wpt_power: f64,
    /// Offloading time, s.
    pub offload_time: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub users: Vec<UserAllocation>,
}

impl Allocation {
    pub fn zeros(n: usize) -> Self {
        Allocation { users: alloc::vec![UserAllocation::default(); n] }
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn local_ratios(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.local_ratio).collect()
    }
}

/// Energy harvested from the AP during the power-transfer phase.
pub fn harvested_energy(wpt_power: f64, cfg: &SystemConfig, user: &UserParams) -> f64 {
    wpt_power * user.harvest_per_watt(cfg)
}

/// Latency-tight local CPU frequency `aRB/((1−φ)T)`.
pub fn local_cpu_frequency(a: f64, cfg: &SystemConfig, user: &UserParams) -> Result<f64> {
    let cycles = a * user.cycles();
    if cycles <= 0.0 {
        return Ok(0.0);
    }
    let freq = cycles / cfg.compute_window();
    if freq > user.freq_max {
        return Err(Error::InfeasibleLocalLoad { user: None, required: freq, limit: user.freq_max });
    }
    Ok(freq)
}

/// Local execution time and energy at frequency `local_freq`.
pub fn local_cost(a: f64, local_freq: f64, user: &UserParams) -> (f64, f64) {
    let cycles = a * user.cycles();
    if cycles <= 0.0 {
        return (0.0, 0.0);
    }
    let time = if local_freq > 0.0 { cycles / local_freq } else { f64::INFINITY };
    (time, cycles * user.capacitance * local_freq * local_freq)
}

/// Uplink transmit power needed to push `(1−a)R` nats in `offload_time`.
pub fn offload_tx_power(a: f64, offload_time: f64, cfg: &SystemConfig, user: &UserParams) -> Result<f64> {
    let nats = (1.0 - a) * user.task;
    if nats <= 0.0 {
        return Ok(0.0);
    }
    if offload_time <= 0.0 {
        return Err(Error::DegenerateOffload { user: None });
    }
    let exponent = nats / (offload_time * cfg.user_bandwidth());
    Ok(cfg.noise_power / user.uplink_gain * libm::expm1(exponent))
}

/// Edge execution time and energy at server frequency `server_freq`.
pub fn edge_cost(a: f64, server_freq: f64, cfg: &SystemConfig, user: &UserParams) -> (f64, f64) {
    let cycles = (1.0 - a) * user.cycles();
    if cycles <= 0.0 {
        return (0.0, 0.0);
    }
    let time = if server_freq > 0.0 { cycles / server_freq } else { f64::INFINITY };
    (time, cycles * cfg.server_capacitance * server_freq * server_freq)
}

/// Minimum cooling power for a total server computing power.
pub fn cooling_power(computing_power: f64, cooling: &CoolingParams) -> f64 {
    let p = computing_power.max(0.0);
    let th = cooling.threshold();
    if p <= th {
        cooling.oa_coeff * p * p * p
    } else {
        cooling.oa_coeff * th * th * th + cooling.cw_coeff * (p - th)
    }
}

/// Cooling energy over the compute window for the given server frequencies.
pub fn cooling_energy(server_freqs: impl IntoIterator<Item = f64>, cfg: &SystemConfig) -> f64 {
    let power: f64 = server_freqs.into_iter().map(|f| cfg.server_capacitance * f * f * f).sum();
    cooling_power(power, &cfg.cooling) * cfg.compute_window()
}

/// Per-user energy terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserEnergy {
    pub harvested: f64,
    pub local: f64,
    pub offload: f64,
    pub edge: f64,
}

/// Constraints of the joint problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    EnergyCausality { user: usize },
    OffloadLatency { user: usize },
    LocalLatency { user: usize },
    LocalFrequency { user: usize },
    /// A decision variable outside its box (`a ∉ [0,1]` or a negative value).
    Bounds { user: usize },
    ServerCapacity,
    PowerBudget,
}

/// A violated constraint with its residual normalized by the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyReport {
    pub users: Vec<UserEnergy>,
    /// AP power-transfer energy `Σ φT P_b`.
    pub wpt: f64,
    /// AP edge execution energy `Σ E_comp`.
    pub edge: f64,
    pub cooling: f64,
    pub total: f64,
    pub violations: Vec<Violation>,
}

/// Relative tolerance used when [`total_ap_energy`] fills in violations.
pub const REPORT_TOLERANCE: f64 = 1e-9;

/// AP-side energy decomposition and user-side terms of an allocation.
pub fn total_ap_energy(alloc: &Allocation, cfg: &SystemConfig, users: &[UserParams]) -> Result<EnergyReport> {
    if alloc.len() != users.len() {
        return Err(Error::DimensionMismatch { expected: users.len(), found: alloc.len() });
    }
    let mut report = EnergyReport::default();
    for (i, (x, u)) in alloc.users.iter().zip(users).enumerate() {
        let harvested = harvested_energy(x.wpt_power, cfg, u);
        let (_, local) = local_cost(x.local_ratio, x.local_freq, u);
        let offload = u.offload_energy(x.local_ratio, x.offload_time, cfg).map_err(|e| e.for_user(i))?;
        let (_, edge) = edge_cost(x.local_ratio, x.server_freq, cfg, u);
        report.wpt += cfg.wpt_time() * x.wpt_power;
        report.edge += edge;
        report.users.push(UserEnergy { harvested, local, offload, edge });
    }
    report.cooling = cooling_energy(alloc.users.iter().map(|x| x.server_freq), cfg);
    report.total = report.wpt + report.edge + report.cooling;
    report.violations = check_feasibility(alloc, cfg, users, REPORT_TOLERANCE);
    Ok(report)
}

fn normalized(lhs: f64, rhs: f64) -> f64 {
    let scale = if rhs.abs() > 0.0 { rhs.abs() } else { 1.0 };
    (lhs - rhs) / scale
}

/// Signed, RHS-normalized residuals of every constraint.
///
/// Positive values are violations. Returns one entry per constraint in a
/// fixed order: per user (causality, offload latency, local latency, local
/// frequency, bounds), then server capacity and power budget.
pub fn constraint_residuals(alloc: &Allocation, cfg: &SystemConfig, users: &[UserParams]) -> Vec<Violation> {
    let window = cfg.compute_window();
    let mut out = Vec::with_capacity(5 * users.len() + 2);
    for (i, (x, u)) in alloc.users.iter().zip(users).enumerate() {
        let a = x.local_ratio;
        let (t_loc, e_loc) = local_cost(a, x.local_freq, u);
        let e_off = u.offload_energy(a, x.offload_time, cfg).unwrap_or(f64::INFINITY);
        let e_h = harvested_energy(x.wpt_power, cfg, u);
        let (t_exe, _) = edge_cost(a, x.server_freq, cfg, u);
        let t_off = if (1.0 - a) * u.task > 0.0 { x.offload_time } else { 0.0 };
        let push = |out: &mut Vec<Violation>, constraint, residual| out.push(Violation { constraint, residual });
        push(&mut out, Constraint::EnergyCausality { user: i }, normalized(e_loc + e_off, e_h));
        push(&mut out, Constraint::OffloadLatency { user: i }, normalized(t_off + t_exe, window));
        push(&mut out, Constraint::LocalLatency { user: i }, normalized(t_loc, window));
        push(&mut out, Constraint::LocalFrequency { user: i }, normalized(x.local_freq, u.freq_max));
        let min_field = x.local_freq.min(x.server_freq).min(x.wpt_power).min(x.offload_time).min(a);
        let bounds = if min_field < 0.0 { -min_field } else { (a - 1.0).max(0.0) };
        push(&mut out, Constraint::Bounds { user: i }, bounds);
    }
    let f_total: f64 = alloc.users.iter().map(|x| x.server_freq).sum();
    let p_total: f64 = alloc.users.iter().map(|x| x.wpt_power).sum();
    out.push(Violation { constraint: Constraint::ServerCapacity, residual: normalized(f_total, cfg.server_freq_max) });
    out.push(Violation { constraint: Constraint::PowerBudget, residual: normalized(p_total, cfg.ap_power_max) });
    out
}

/// Constraints violated by more than `tol` (relative to their right-hand side).
pub fn check_feasibility(alloc: &Allocation, cfg: &SystemConfig, users: &[UserParams], tol: f64) -> Vec<Violation> {
    constraint_residuals(alloc, cfg, users).into_iter().filter(|v| !(v.residual <= tol)).collect()
}
