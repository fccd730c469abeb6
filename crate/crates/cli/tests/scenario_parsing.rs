use wpt_mec::scenario::Param;
use wpt_mec::{parse_scenario, ScenarioError};
use wpt_mec_core::{SystemConfig, UserParams};

#[test]
fn empty_file_gives_defaults() {
    let scn = parse_scenario("").unwrap();
    let points = scn.points().unwrap();
    assert_eq!(points.len(), 1);
    let p = &points[0];
    assert!(p.coords.is_empty());
    assert_eq!(p.config, SystemConfig::default());
    assert_eq!(p.config.slot, 0.2);
    assert_eq!(p.config.num_users, 5);
    assert_eq!(p.users, vec![UserParams::default(); 5]);
}

#[test]
fn comments_whitespace_and_explicit_defaults() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/defaults.scn")).unwrap();
    let p = &parse_scenario(&text).unwrap().points().unwrap()[0];
    assert_eq!(p.config, SystemConfig::default());
    assert_eq!(p.users, vec![UserParams::default(); 5]);
    let q = &parse_scenario("  # only a comment\n\n system.T = 0.2   # trailing\n").unwrap().points().unwrap()[0];
    assert_eq!(q.config.slot, 0.2);
}

#[test]
fn out_of_range_phi_is_a_validation_error() {
    match parse_scenario("system.phi = 1.5") {
        Err(ScenarioError::Validation { key, .. }) => assert_eq!(key, "system.phi"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn knats_range_sweep_has_eight_points() {
    let scn = parse_scenario("sweep.param = user.R\nsweep.values = 0.5:0.5:4 Knats\n").unwrap();
    let points = scn.points().unwrap();
    let values: Vec<f64> = points.iter().map(|p| p.coords[0].1).collect();
    assert_eq!(values, vec![500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0, 4000.0]);
    assert!(points.iter().all(|p| p.users.iter().all(|u| u.task == p.coords[0].1)));
    assert_eq!(points[0].coords[0].0, "user.R");
}

#[test]
fn ranges_do_not_accumulate_binary_error() {
    let scn = parse_scenario("sweep.param = system.T\nsweep.values = 0.05:0.025:0.3\n").unwrap();
    let values: Vec<f64> = scn.sweep[0].values.clone();
    assert_eq!(values.len(), 11);
    assert_eq!(values[1], 0.075);
    assert_eq!(values[10], 0.3);
}

#[test]
fn task_size_units() {
    let p = |t: &str| parse_scenario(t).unwrap().points().unwrap()[0].users[0].task;
    assert_eq!(p("user.R = 2 Knats"), 2000.0);
    assert_eq!(p("user.R = 2500 nats"), 2500.0);
    assert_eq!(p("user.R = 2500"), 2500.0);
    assert!(matches!(parse_scenario("system.T = 2 Knats"), Err(ScenarioError::Parse { line: 1, .. })));
}

#[test]
fn per_user_overrides_and_sweeps() {
    let text = "system.I = 3\nuser.g = 2e-7\nuser.1.g = 5e-7\nuser.2.R = 1 Knats\n";
    let p = &parse_scenario(text).unwrap().points().unwrap()[0];
    assert_eq!(p.users.iter().map(|u| u.uplink_gain).collect::<Vec<_>>(), vec![2e-7, 5e-7, 2e-7]);
    assert_eq!(p.users[2].task, 1000.0);
    // A swept template field overrides per-user settings.
    let swept = parse_scenario(&format!("{text}sweep.param = user.g\nsweep.values = 1e-7\n")).unwrap();
    assert!(swept.points().unwrap()[0].users.iter().all(|u| u.uplink_gain == 1e-7));
    assert!(matches!(parse_scenario("system.I = 2\nuser.4.R = 1"), Err(ScenarioError::Validation { .. })));
}

#[test]
fn user_count_sweep_replicates_the_template() {
    let scn = parse_scenario("user.H = 2e-3\nsweep.param = system.I\nsweep.values = 2:1:8").unwrap();
    let points = scn.points().unwrap();
    assert_eq!(points.len(), 7);
    for (k, p) in points.iter().enumerate() {
        assert_eq!(p.config.num_users, k + 2);
        assert_eq!(p.users.len(), k + 2);
        assert!(p.users.iter().all(|u| u.downlink_gain == 2e-3));
    }
    assert!(matches!(parse_scenario("system.I = 2.5"), Err(ScenarioError::Parse { .. })));
}

#[test]
fn per_user_bandwidth_scales_with_user_count() {
    let scn = parse_scenario("system.I = 3\nsweep.param = system.w\nsweep.values = 1e6, 2e6").unwrap();
    let points = scn.points().unwrap();
    assert_eq!(points[0].config.bandwidth, 3e6);
    assert_eq!(points[1].config.user_bandwidth(), 2e6);
}

#[test]
fn two_axis_sweep_is_a_cartesian_product() {
    let text = "sweep.param = user.theta\nsweep.values = 0.3, 0.6\nsweep2.param = user.H\nsweep2.values = 1e-3:1e-3:8e-3\n";
    let points = parse_scenario(text).unwrap().points().unwrap();
    assert_eq!(points.len(), 16);
    assert_eq!(points[0].coords, vec![("user.theta".to_string(), 0.3), ("user.H".to_string(), 1e-3)]);
    assert_eq!(points[9].coords, vec![("user.theta".to_string(), 0.6), ("user.H".to_string(), 2e-3)]);
    assert!(points[9].users.iter().all(|u| u.efficiency == 0.6 && u.downlink_gain == 2e-3));
}

#[test]
fn parse_errors_carry_line_and_key() {
    let cases = [
        ("system.T = 0.2\nbogus line\n", 2, None),
        ("system.T = 0.2\nsystem.X = 1\n", 2, Some("system.X")),
        ("\n\nsystem.T = fast\n", 3, Some("system.T")),
        ("system.T = 0.2\nsystem.T = 0.3\n", 2, Some("system.T")),
        ("sweep.param = user.R\nsweep.values = 1:0:3\n", 2, Some("sweep.values")),
        ("sweep.param = user.nope\n", 1, Some("sweep.param")),
        ("solver.max_iter = -3\n", 1, Some("solver.max_iter")),
    ];
    for (text, line, key) in cases {
        match parse_scenario(text) {
            Err(ScenarioError::Parse { line: l, key: k, message }) => {
                assert_eq!(l, line, "{text:?}: {message}");
                assert_eq!(k.as_deref(), key, "{text:?}");
            }
            other => panic!("{text:?}: {other:?}"),
        }
    }
    assert!(matches!(parse_scenario("sweep.param = user.R\n"), Err(ScenarioError::Parse { .. })));
    assert!(matches!(parse_scenario("sweep2.param = user.R\nsweep2.values = 1\n"), Err(ScenarioError::Parse { .. })));
}

#[test]
fn sweep_values_are_validated_at_load() {
    match parse_scenario("sweep.param = system.phi\nsweep.values = 0.4, 1.2\n") {
        Err(ScenarioError::Validation { key, message }) => {
            assert_eq!(key, "system.phi");
            assert!(message.contains("system.phi=1.2"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn solver_keys() {
    let scn = parse_scenario("solver.gap_tol = 1e-4\nsolver.max_outer = 7\noracle.a_points = 50\nsolver.couple_fs = true").unwrap();
    assert_eq!(scn.solver.dual.gap_tol, 1e-4);
    assert_eq!(scn.solver.joint.dual.gap_tol, 1e-4);
    assert_eq!(scn.solver.joint.max_outer, 7);
    assert_eq!(scn.solver.grid.a_points, 50);
    assert!(scn.solver.joint.load.couple_fs_in_a_step);
    assert!(matches!(parse_scenario("oracle.a_points = 1"), Err(ScenarioError::Validation { .. })));
}

#[test]
fn parameter_keys_round_trip() {
    for key in ["system.T", "system.w", "cooling.eps1", "user.R", "user.3.theta"] {
        assert_eq!(Param::parse(key).unwrap().key(), key);
    }
}
