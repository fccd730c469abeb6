use std::process::Command;

use wpt_mec::{parse_json, parse_scenario, run, write_csv, write_json, Mode, Record, RunOptions, Status};

fn records(text: &str, mode: Mode, jobs: usize) -> Vec<Record> {
    let scn = parse_scenario(text).unwrap();
    run(&scn.points().unwrap(), &scn, &RunOptions { mode, jobs, ..RunOptions::default() })
}

fn csv(records: &[Record]) -> String {
    let mut out = Vec::new();
    write_csv(records, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

const TASK_SWEEP: &str = "system.phi = 0.7\nsweep.param = user.R\nsweep.values = 3:0.5:4 Knats\n";

#[test]
fn one_record_gives_header_and_one_row() {
    let text = csv(&records("system.I = 2", Mode::Local, 1));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(
        header[..13],
        ["sweep_param", "sweep_value", "scheme", "status", "E_total_J", "E_wpt_J", "E_comp_J", "E_cool_J", "a_0", "f_u_Hz_0", "f_s_Hz_0", "T_off_s_0", "P_b_W_0"]
    );
    assert_eq!(header.len(), 8 + 2 * 5);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row.len(), header.len());
    assert_eq!(row[2..4], ["local", "ok"]);
    let p_b: f64 = row[12].parse().unwrap();
    assert!((p_b - 0.09765625).abs() <= 1e-12 * 0.09765625);
}

#[test]
fn every_point_appears_once_per_scheme_in_sweep_order() {
    let recs = records(TASK_SWEEP, Mode::All, 3);
    assert_eq!(recs.len(), 3 * 4);
    for (k, r) in recs.iter().enumerate() {
        assert_eq!(r.sweep[0].value, [3000.0, 3500.0, 4000.0][k / 4]);
        assert_eq!(r.scheme, ["proposed", "local", "full", "half"][k % 4]);
    }
    // Infeasible points are recorded, not dropped.
    let bad = &recs[9];
    assert_eq!((bad.scheme.as_str(), bad.status), ("local", Status::Infeasible));
    assert!(bad.energy.is_none() && bad.message.is_some());
    assert!(recs.iter().filter(|r| r.scheme == "proposed").all(|r| r.status == Status::Ok));
}

#[test]
fn output_is_deterministic_across_runs_and_job_counts() {
    let a = csv(&records(TASK_SWEEP, Mode::All, 1));
    let b = csv(&records(TASK_SWEEP, Mode::All, 1));
    let c = csv(&records(TASK_SWEEP, Mode::All, 4));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn json_round_trips() {
    let scn = parse_scenario(TASK_SWEEP).unwrap();
    let recs = run(&scn.points().unwrap(), &scn, &RunOptions { mode: Mode::All, jobs: 2, trace: true, timing: true });
    assert!(recs.iter().any(|r| !r.traces.is_empty()));
    let mut out = Vec::new();
    write_json(&recs, &mut out).unwrap();
    let back = parse_json(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(back, recs);
}

#[test]
fn oracle_mode_matches_grid_search() {
    let text = "system.I = 1\nuser.R = 3 Knats\noracle.a_points = 40\noracle.t_points = 40\noracle.refinements = 1";
    let scn = parse_scenario(text).unwrap();
    let points = scn.points().unwrap();
    let recs = run(&points, &scn, &RunOptions { mode: Mode::Oracle, ..RunOptions::default() });
    assert_eq!(recs.len(), 1);
    let direct = wpt_mec_core::grid_search(&points[0].config, &points[0].users, &scn.solver.grid).unwrap();
    assert_eq!(recs[0].energy.unwrap().total, direct.report.total);
    assert_eq!(recs[0].duality_gap, None);
    // The oracle refuses more than three users; the record says so.
    let big = records("system.I = 5", Mode::Oracle, 1);
    assert_eq!(big[0].status, Status::Error);
}

#[test]
fn shortest_round_trip_numbers() {
    for x in [0.1, 1e-26, 7.8125e-3, 123456789.125, 0.07500000000000001] {
        assert_eq!(wpt_mec::format_number(x).parse::<f64>().unwrap(), x);
    }
    assert_eq!(wpt_mec::format_number(0.09765625), "0.09765625");
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wpt-mec"))
}

#[test]
fn exit_codes_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.scn");
    std::fs::write(&good, "system.I = 2\nsweep.param = user.R\nsweep.values = 1, 3 Knats\n").unwrap();
    let out = dir.path().join("out.csv");
    let status = binary().args(["run"]).arg(&good).args(["--mode", "all", "--trace", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 4);
    let trace = std::fs::read_to_string(dir.path().join("out.csv.trace.csv")).unwrap();
    assert!(trace.starts_with("record,sweep_value,scheme,solve,iteration"));
    assert!(trace.lines().count() > 1);

    // Re-running reproduces the file byte for byte.
    let again = dir.path().join("again.csv");
    binary().args(["run"]).arg(&good).args(["--mode", "all", "--out"]).arg(&again).status().unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    let json = binary().args(["run"]).arg(&good).args(["--format", "json"]).output().unwrap();
    assert_eq!(json.status.code(), Some(0));
    assert_eq!(parse_json(std::str::from_utf8(&json.stdout).unwrap()).unwrap().len(), 2);

    let infeasible = dir.path().join("infeasible.scn");
    std::fs::write(&infeasible, TASK_SWEEP).unwrap();
    let o = binary().args(["run"]).arg(&infeasible).args(["--mode", "local"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);

    let broken = dir.path().join("broken.scn");
    std::fs::write(&broken, "system.T = 0.2\nsystem.phi = lots\n").unwrap();
    let o = binary().args(["run"]).arg(&broken).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 2"));

    assert_eq!(binary().args(["run"]).arg(dir.path().join("missing.scn")).output().unwrap().status.code(), Some(1));
    assert_eq!(binary().args(["run"]).arg(&good).args(["--mode", "fastest"]).output().unwrap().status.code(), Some(1));
    assert_eq!(binary().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn shipped_scenarios_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let scn = wpt_mec::load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!scn.points().unwrap().is_empty());
        n += 1;
    }
    assert!(n >= 6);
}
