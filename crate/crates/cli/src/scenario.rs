//! Scenario files: flat `key = value` text with dotted keys.
//!
//! ```text
//! # energy versus task size
//! system.T = 0.2
//! system.I = 5
//! user.R = 1.5 Knats
//! user.2.g = 2e-7
//! sweep.param = user.R
//! sweep.values = 0.5:0.5:4 Knats
//! ```
//!
//! Omitted keys keep their defaults. All values are SI, except task sizes,
//! which may carry a `nats` or `Knats` suffix. A second sweep axis
//! (`sweep2.param`, `sweep2.values`) yields the Cartesian product of both.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use wpt_mec_core::model::validate_instance;
use wpt_mec_core::{CoolingParams, DualOptions, Error as CoreError, GridSpec, JointOptions, SystemConfig, UserParams};

#[derive(Debug)]
pub enum ScenarioError {
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed line, unknown key or unparsable value.
    Parse { line: usize, key: Option<String>, message: String },
    /// Well-formed input that produces an invalid instance.
    Validation { key: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            ScenarioError::Parse { line, key: Some(key), message } => write!(f, "line {line}: {key}: {message}"),
            ScenarioError::Parse { line, key: None, message } => write!(f, "line {line}: {message}"),
            ScenarioError::Validation { key, message } => write!(f, "invalid {key}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ScenarioError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SystemField {
    Slot,
    WptFraction,
    Bandwidth,
    /// Per-user bandwidth `w`; sets `W = w·I` after the user count is known.
    UserBandwidth,
    NumUsers,
    ServerFreqMax,
    ApPowerMax,
    NoisePower,
    ServerCapacitance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoolingField {
    OaCoeff,
    CwCoeff,
    OaCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UserField {
    Task,
    CyclesPerNat,
    Capacitance,
    FreqMax,
    Efficiency,
    DownlinkGain,
    UplinkGain,
}

/// A scalar that a scenario can set or sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Param {
    System(SystemField),
    Cooling(CoolingField),
    /// User field; `None` addresses every user.
    User(Option<usize>, UserField),
}

const SYSTEM_KEYS: [(&str, SystemField); 9] = [
    ("T", SystemField::Slot),
    ("phi", SystemField::WptFraction),
    ("W", SystemField::Bandwidth),
    ("w", SystemField::UserBandwidth),
    ("I", SystemField::NumUsers),
    ("f_s_max", SystemField::ServerFreqMax),
    ("P_b_max", SystemField::ApPowerMax),
    ("sigma2", SystemField::NoisePower),
    ("delta", SystemField::ServerCapacitance),
];

const COOLING_KEYS: [(&str, CoolingField); 3] =
    [("eps1", CoolingField::OaCoeff), ("eps2", CoolingField::CwCoeff), ("P_a_max", CoolingField::OaCapacity)];

const USER_KEYS: [(&str, UserField); 7] = [
    ("R", UserField::Task),
    ("B", UserField::CyclesPerNat),
    ("k", UserField::Capacitance),
    ("f_u_max", UserField::FreqMax),
    ("theta", UserField::Efficiency),
    ("H", UserField::DownlinkGain),
    ("g", UserField::UplinkGain),
];

fn lookup<T: Copy>(table: &[(&str, T)], name: &str) -> Option<T> {
    table.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
}

fn reverse<T: Copy + PartialEq>(table: &[(&'static str, T)], field: T) -> &'static str {
    table.iter().find(|(_, v)| *v == field).map(|&(k, _)| k).unwrap_or("?")
}

impl Param {
    pub fn parse(key: &str) -> Option<Param> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["system", name] => lookup(&SYSTEM_KEYS, name).map(Param::System),
            ["cooling", name] => lookup(&COOLING_KEYS, name).map(Param::Cooling),
            ["user", name] => lookup(&USER_KEYS, name).map(|f| Param::User(None, f)),
            ["user", index, name] => {
                let i = index.parse().ok()?;
                lookup(&USER_KEYS, name).map(|f| Param::User(Some(i), f))
            }
            _ => None,
        }
    }

    /// Canonical dotted key.
    pub fn key(&self) -> String {
        match *self {
            Param::System(f) => format!("system.{}", reverse(&SYSTEM_KEYS, f)),
            Param::Cooling(f) => format!("cooling.{}", reverse(&COOLING_KEYS, f)),
            Param::User(None, f) => format!("user.{}", reverse(&USER_KEYS, f)),
            Param::User(Some(i), f) => format!("user.{i}.{}", reverse(&USER_KEYS, f)),
        }
    }

    fn accepts_nats_suffix(&self) -> bool {
        matches!(self, Param::User(_, UserField::Task))
    }
}

/// Solver settings a scenario may override.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverSettings {
    /// Options of the fixed-ratio solves (baselines).
    pub dual: DualOptions,
    /// Options of the alternating loop.
    pub joint: JointOptions,
    pub grid: GridSpec,
}


#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: Param,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    /// Explicit settings in file order; later entries win.
    pub settings: Vec<(Param, f64)>,
    pub solver: SolverSettings,
    /// Zero, one or two axes; points are the Cartesian product, last axis fastest.
    pub sweep: Vec<SweepAxis>,
}


/// One fully specified instance of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    /// Swept parameter keys and their values at this point.
    pub coords: Vec<(String, f64)>,
    pub config: SystemConfig,
    pub users: Vec<UserParams>,
}

fn set_system(cfg: &mut SystemConfig, field: SystemField, v: f64) {
    match field {
        SystemField::Slot => cfg.slot = v,
        SystemField::WptFraction => cfg.wpt_fraction = v,
        SystemField::Bandwidth => cfg.bandwidth = v,
        SystemField::NumUsers => cfg.num_users = v as usize,
        SystemField::ServerFreqMax => cfg.server_freq_max = v,
        SystemField::ApPowerMax => cfg.ap_power_max = v,
        SystemField::NoisePower => cfg.noise_power = v,
        SystemField::ServerCapacitance => cfg.server_capacitance = v,
        SystemField::UserBandwidth => {}
    }
}

fn set_cooling(c: &mut CoolingParams, field: CoolingField, v: f64) {
    match field {
        CoolingField::OaCoeff => c.oa_coeff = v,
        CoolingField::CwCoeff => c.cw_coeff = v,
        CoolingField::OaCapacity => c.oa_capacity = v,
    }
}

fn set_user(u: &mut UserParams, field: UserField, v: f64) {
    match field {
        UserField::Task => u.task = v,
        UserField::CyclesPerNat => u.cycles_per_nat = v,
        UserField::Capacitance => u.capacitance = v,
        UserField::FreqMax => u.freq_max = v,
        UserField::Efficiency => u.efficiency = v,
        UserField::DownlinkGain => u.downlink_gain = v,
        UserField::UplinkGain => u.uplink_gain = v,
    }
}

fn validation(err: CoreError, point: &[(String, f64)]) -> ScenarioError {
    let at = if point.is_empty() {
        String::new()
    } else {
        let coords: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(" at sweep point {}", coords.join(", "))
    };
    match err {
        CoreError::InvalidParameter { name, value } => {
            ScenarioError::Validation { key: name.to_string(), message: format!("value {value} out of range{at}") }
        }
        other => ScenarioError::Validation { key: "scenario".to_string(), message: format!("{other}{at}") },
    }
}

impl Scenario {
    /// Build the instance defined by the settings plus `overrides`.
    ///
    /// System and cooling values apply first; users are replicated from the
    /// template (`user.*`), then per-user keys (`user.<i>.*`) apply, and swept
    /// values override both.
    pub fn instance(&self, overrides: &[(Param, f64)]) -> Result<(SystemConfig, Vec<UserParams>)> {
        let mut cfg = SystemConfig::default();
        let mut user_bandwidth = None;
        let all = || self.settings.iter().chain(overrides);
        for &(p, v) in all() {
            match p {
                Param::System(SystemField::UserBandwidth) => user_bandwidth = Some(v),
                Param::System(SystemField::Bandwidth) => {
                    user_bandwidth = None;
                    cfg.bandwidth = v;
                }
                Param::System(f) => set_system(&mut cfg, f, v),
                Param::Cooling(f) => set_cooling(&mut cfg.cooling, f, v),
                Param::User(..) => {}
            }
        }
        if let Some(w) = user_bandwidth {
            cfg.bandwidth = w * cfg.num_users as f64;
        }
        let mut template = UserParams::default();
        for &(p, v) in &self.settings {
            if let Param::User(None, f) = p {
                set_user(&mut template, f, v);
            }
        }
        let mut users = vec![template; cfg.num_users];
        for (source, entries) in [("setting", &self.settings[..]), ("sweep", overrides)] {
            for &(p, v) in entries {
                match p {
                    Param::User(Some(i), f) => {
                        let Some(u) = users.get_mut(i) else {
                            return Err(ScenarioError::Validation {
                                key: p.key(),
                                message: format!("{source} addresses user {i} but system.I = {}", cfg.num_users),
                            });
                        };
                        set_user(u, f, v);
                    }
                    Param::User(None, f) if source == "sweep" => users.iter_mut().for_each(|u| set_user(u, f, v)),
                    _ => {}
                }
            }
        }
        Ok((cfg, users))
    }

    /// Every sweep point in deterministic order, each validated.
    pub fn points(&self) -> Result<Vec<Point>> {
        let mut combos: Vec<Vec<(Param, f64)>> = vec![Vec::new()];
        for axis in &self.sweep {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |&v| {
                        let mut next = c.clone();
                        next.push((axis.param, v));
                        next
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|over| {
                let coords: Vec<(String, f64)> = over.iter().map(|(p, v)| (p.key(), *v)).collect();
                let (config, users) = self.instance(&over)?;
                validate_instance(&config, &users).map_err(|e| validation(e, &coords))?;
                Ok(Point { coords, config, users })
            })
            .collect()
    }
}

fn parse_error(line: usize, key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, key: Some(key.to_string()), message: message.into() }
}

/// Split an optional unit suffix off a value and return its scale.
fn unit_scale<'a>(text: &'a str, param: Option<Param>, line: usize, key: &str) -> Result<(&'a str, f64)> {
    let trimmed = text.trim_end();
    for (suffix, scale) in [("Knats", 1e3), ("knats", 1e3), ("nats", 1.0)] {
        if let Some(body) = trimmed.strip_suffix(suffix) {
            if !param.is_some_and(|p| p.accepts_nats_suffix()) {
                return Err(parse_error(line, key, format!("unit `{suffix}` is only accepted for task sizes")));
            }
            return Ok((body.trim_end(), scale));
        }
    }
    Ok((trimmed, 1.0))
}

fn number(text: &str, line: usize, key: &str) -> Result<f64> {
    let t = text.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(line, key, format!("`{t}` is not a finite number")))
}

fn check_integer(param: Param, v: f64, line: usize, key: &str) -> Result<()> {
    if param == Param::System(SystemField::NumUsers) && (v.fract() != 0.0 || v < 1.0) {
        return Err(parse_error(line, key, format!("user count must be a positive integer, got {v}")));
    }
    Ok(())
}

/// Parse a value list: comma-separated numbers and `start:step:stop` ranges (inclusive).
fn parse_values(text: &str, param: Param, line: usize, key: &str) -> Result<Vec<f64>> {
    let (body, scale) = unit_scale(text, Some(param), line, key)?;
    let mut out = Vec::new();
    for item in body.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(number(single, line, key)?),
            [start, step, stop] => {
                let (start, step, stop) = (number(start, line, key)?, number(step, line, key)?, number(stop, line, key)?);
                if step <= 0.0 || stop < start {
                    return Err(parse_error(line, key, format!("range `{item}` needs step > 0 and stop ≥ start")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > 1_000_000 {
                    return Err(parse_error(line, key, format!("range `{item}` has too many points")));
                }
                out.extend((0..count).map(|k| tidy(start + k as f64 * step)));
            }
            _ => return Err(parse_error(line, key, format!("`{item}` is neither a number nor start:step:stop"))),
        }
    }
    if out.is_empty() {
        return Err(parse_error(line, key, "empty value list"));
    }
    let values: Vec<f64> = out.into_iter().map(|v| v * scale).collect();
    for &v in &values {
        check_integer(param, v, line, key)?;
    }
    Ok(values)
}

/// Drop the accumulated binary error of a range point (`0.07500000000000001` → `0.075`).
fn tidy(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

fn parse_count(text: &str, line: usize, key: &str) -> Result<usize> {
    text.trim().parse().map_err(|_| parse_error(line, key, format!("`{}` is not a non-negative integer", text.trim())))
}

fn parse_bool(text: &str, line: usize, key: &str) -> Result<bool> {
    match text.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(parse_error(line, key, format!("`{other}` is not a boolean"))),
    }
}

fn set_solver(s: &mut SolverSettings, name: &str, value: &str, line: usize, key: &str) -> Result<()> {
    let d = &mut s.dual;
    let j = &mut s.joint;
    match name {
        "step0" => d.step0 = number(value, line, key)?,
        "max_iter" => d.max_iter = parse_count(value, line, key)?,
        "gap_tol" => d.gap_tol = number(value, line, key)?,
        "residual_tol" => d.residual_tol = number(value, line, key)?,
        "clamp" => d.clamp = number(value, line, key)?,
        "lambda_floor" => d.lambda_floor = number(value, line, key)?,
        "tie_tol" => d.tie_tol = number(value, line, key)?,
        "inner_gap_tol" => j.inner_gap_tol = number(value, line, key)?,
        "a_tol" => j.a_tol = number(value, line, key)?,
        "obj_tol" => j.obj_tol = number(value, line, key)?,
        "max_outer" => j.max_outer = parse_count(value, line, key)?,
        "min_step" => j.min_step = number(value, line, key)?,
        "couple_fs" => j.load.couple_fs_in_a_step = parse_bool(value, line, key)?,
        _ => return Err(parse_error(line, key, "unknown solver key")),
    }
    j.dual = *d;
    Ok(())
}

fn set_oracle(g: &mut GridSpec, name: &str, value: &str, line: usize, key: &str) -> Result<()> {
    let n = parse_count(value, line, key)?;
    match name {
        "a_points" => g.a_points = n,
        "t_points" => g.t_points = n,
        "refinements" => g.refinement_levels = n,
        "max_evaluations" => g.max_evaluations = n,
        _ => return Err(parse_error(line, key, "unknown oracle key")),
    }
    Ok(())
}

fn validate_solver(s: &SolverSettings) -> Result<()> {
    s.dual.validate().map_err(|e| validation(e, &[]))?;
    let j = &s.joint;
    let checks = [
        ("solver.inner_gap_tol", j.inner_gap_tol > 0.0),
        ("solver.a_tol", j.a_tol >= 0.0),
        ("solver.obj_tol", j.obj_tol >= 0.0),
        ("solver.min_step", j.min_step > 0.0 && j.min_step <= 1.0),
        ("oracle.a_points", s.grid.a_points >= 2),
        ("oracle.t_points", s.grid.t_points >= 2),
    ];
    for (key, ok) in checks {
        if !ok {
            return Err(ScenarioError::Validation { key: key.to_string(), message: "out of range".to_string() });
        }
    }
    Ok(())
}

#[derive(Default)]
struct PendingAxis {
    param: Option<(Param, usize)>,
    values: Option<(String, usize)>,
}

/// Parse scenario text and validate every point it defines.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut scenario = Scenario::default();
    let mut axes: BTreeMap<u8, PendingAxis> = BTreeMap::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ScenarioError::Parse { line, key: None, message: format!("expected `key = value`, got `{content}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(parse_error(line, key, format!("duplicate key (first set on line {first})")));
        }
        let (section, rest) = key.split_once('.').unwrap_or((key, ""));
        match section {
            "solver" => set_solver(&mut scenario.solver, rest, value, line, key)?,
            "oracle" => set_oracle(&mut scenario.solver.grid, rest, value, line, key)?,
            "sweep" | "sweep2" => {
                let axis = axes.entry(if section == "sweep" { 0 } else { 1 }).or_default();
                match rest {
                    "param" => {
                        let p = Param::parse(value).ok_or_else(|| {
                            parse_error(line, key, format!("`{value}` is not a sweepable parameter"))
                        })?;
                        axis.param = Some((p, line));
                    }
                    "values" => axis.values = Some((value.to_string(), line)),
                    _ => return Err(parse_error(line, key, "unknown sweep key")),
                }
            }
            _ => {
                let param = Param::parse(key).ok_or_else(|| parse_error(line, key, "unknown key"))?;
                let (body, scale) = unit_scale(value, Some(param), line, key)?;
                let v = number(body, line, key)? * scale;
                check_integer(param, v, line, key)?;
                scenario.settings.push((param, v));
            }
        }
    }

    if axes.contains_key(&1) && !axes.contains_key(&0) {
        let line = axes[&1].param.map(|p| p.1).or(axes[&1].values.as_ref().map(|v| v.1)).unwrap_or(0);
        return Err(ScenarioError::Parse { line, key: Some("sweep2".into()), message: "sweep2 requires sweep".into() });
    }
    for (_, axis) in axes {
        match (axis.param, axis.values) {
            (Some((param, _)), Some((text, line))) => {
                let key = if scenario.sweep.is_empty() { "sweep.values" } else { "sweep2.values" };
                if scenario.sweep.iter().any(|a| a.param == param) {
                    return Err(parse_error(line, key, "both sweep axes address the same parameter"));
                }
                let values = parse_values(&text, param, line, key)?;
                scenario.sweep.push(SweepAxis { param, values });
            }
            (Some((_, line)), None) => {
                return Err(ScenarioError::Parse { line, key: None, message: "sweep parameter without values".into() })
            }
            (None, Some((_, line))) => {
                return Err(ScenarioError::Parse { line, key: None, message: "sweep values without parameter".into() })
            }
            (None, None) => {}
        }
    }

    validate_solver(&scenario.solver)?;
    scenario.points()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text)
}
