//! Properties of the per-user and server subproblem minimizers.

use proptest::prelude::*;
use wpt_mec_core::subproblems::{
    edge_objective, optimal_offload_time, solve_edge_frequencies, tight_wpt_power, EdgeSolverOptions,
};
use wpt_mec_core::{CoolingParams, DualVars, SystemConfig, UserParams};

fn user(task: f64) -> UserParams {
    UserParams { task, ..UserParams::default() }
}

/// Derivative of `λ E_off(T) + μ T` with respect to the offload time.
fn offload_slope(t: f64, lambda: f64, mu: f64, a: f64, cfg: &SystemConfig, u: &UserParams) -> f64 {
    let x = (1.0 - a) * u.task / (t * cfg.user_bandwidth());
    lambda * cfg.noise_power / u.uplink_gain * (x.exp_m1() - x * x.exp()) + mu
}

proptest! {
    #[test]
    fn offload_time_is_stationary(
        lambda in 1e-2f64..1e4,
        mu in 1e-6f64..1e-1,
        a in 0.0f64..0.95,
        task in 500.0f64..5e3,
    ) {
        let cfg = SystemConfig::default();
        let u = user(task);
        let t = optimal_offload_time(lambda, mu, a, &cfg, &u);
        prop_assert!(t > 0.0 && t.is_finite());
        let r = offload_slope(t, lambda, mu, a, &cfg, &u).abs() / mu;
        prop_assert!(r <= 1e-7, "relative stationarity residual {r:e}");
    }

    #[test]
    fn offload_time_shrinks_with_latency_price(
        lambda in 1e-2f64..1e4,
        mu in 1e-6f64..1e-1,
        factor in 1.01f64..10.0,
        a in 0.0f64..0.95,
    ) {
        let cfg = SystemConfig::default();
        let u = user(3e3);
        let t1 = optimal_offload_time(lambda, mu, a, &cfg, &u);
        let t2 = optimal_offload_time(lambda, mu * factor, a, &cfg, &u);
        let t3 = optimal_offload_time(lambda * factor, mu, a, &cfg, &u);
        prop_assert!(t2 < t1);
        prop_assert!(t3 > t1);
    }

    #[test]
    fn tight_power_leaves_no_causality_slack(a in 0.0f64..1.0, frac in 1e-3f64..1.0, task in 0.0f64..5e3) {
        let cfg = SystemConfig::default();
        let u = user(task);
        let t = frac * cfg.compute_window();
        let p = tight_wpt_power(a, t, &cfg, &u).unwrap();
        let demand = u.energy_demand(a, t, &cfg).unwrap();
        let harvested = p * u.harvest_per_watt(&cfg);
        prop_assert!((harvested - demand).abs() <= 1e-12 * demand.max(1e-300));
    }

    #[test]
    fn edge_solver_beats_a_fine_scan(
        mu in 1e-4f64..10.0,
        nu in 0.0f64..1e-10,
        a in 0.0f64..0.9,
        cooled in any::<bool>(),
    ) {
        let cfg = SystemConfig {
            num_users: 1,
            cooling: if cooled { CoolingParams::default() } else { CoolingParams::OFF },
            ..SystemConfig::default()
        };
        let users = [user(3e3)];
        let dual = DualVars { causality: vec![1.0], latency: vec![mu], capacity: nu, budget: 0.0 };
        let f = solve_edge_frequencies(&dual, &[a], &cfg, &users, &EdgeSolverOptions::default()).unwrap();
        let best = edge_objective(&f, &dual, &[a], &cfg, &users);
        let n = 20_000;
        let scan = (1..=n)
            .map(|k| edge_objective(&[cfg.server_freq_max * k as f64 / n as f64], &dual, &[a], &cfg, &users))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(best <= scan * (1.0 + 1e-9), "solver {best:e} scan {scan:e}");
    }

    #[test]
    fn two_user_edge_solver_beats_a_grid(
        mu0 in 1e-3f64..10.0,
        mu1 in 1e-3f64..10.0,
        a0 in 0.0f64..0.9,
        a1 in 0.0f64..0.9,
    ) {
        let cfg = SystemConfig { num_users: 2, ..SystemConfig::default() };
        let users = [user(3e3), user(2e3)];
        let a = [a0, a1];
        let dual = DualVars { causality: vec![1.0; 2], latency: vec![mu0, mu1], capacity: 0.0, budget: 0.0 };
        let f = solve_edge_frequencies(&dual, &a, &cfg, &users, &EdgeSolverOptions::default()).unwrap();
        let best = edge_objective(&f, &dual, &a, &cfg, &users);
        let n = 300;
        let mut grid = f64::INFINITY;
        for j in 1..=n {
            for k in 1..=n {
                let g = [cfg.server_freq_max * j as f64 / n as f64, cfg.server_freq_max * k as f64 / n as f64];
                grid = grid.min(edge_objective(&g, &dual, &a, &cfg, &users));
            }
        }
        prop_assert!(best <= grid * (1.0 + 1e-9), "solver {best:e} grid {grid:e}");
    }
}
