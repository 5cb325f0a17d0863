//! Staged timing probe used while bringing the crate up. Not part of
//! the public surface; delete before release.

use gridlearn::analysis::{asymptotic_stability, kappa_sweep, monotonic_convergence};
use gridlearn::demand::{synthetic_trace, DemandTrace};
use gridlearn::grid::{build_compound_plant, GridParams};
use gridlearn::ilc::CyclePlan;
use gridlearn::lifted::{build_p_matrix, build_q_filter, LiftedFilters};
use gridlearn::sim::{simulate_cycle, PlantState, SolverConfig};
use gridlearn::scenarios::step_convergence_demand;
use nalgebra::DMatrix;
use std::time::Instant;

fn stage<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    eprintln!("[{label}] {:.3} s", t0.elapsed().as_secs_f64());
    out
}

fn main() {
    let params = GridParams::reference_four_node();
    let plant = build_compound_plant(&params).unwrap();
    let lifted = stage("build_p_matrix", || build_p_matrix(&plant, 435).unwrap());
    let q = stage("build_q_filter", || {
        build_q_filter(4, 1.0 / 6.0, 2).unwrap()
    });

    let filters0 = LiftedFilters::new(q.clone(), 0.0);
    let rho0 = stage("rho at kappa=0", || {
        asymptotic_stability(&lifted, &filters0).unwrap()
    });
    eprintln!("  rho(0) = {rho0:.12}");

    let filters1 = LiftedFilters::new(q.clone(), 1.0);
    let rho1 = stage("rho at kappa=1", || {
        asymptotic_stability(&lifted, &filters1).unwrap()
    });
    let sig1 = stage("sigma at kappa=1", || {
        monotonic_convergence(&lifted, &filters1).unwrap()
    });
    eprintln!("  rho(1) = {rho1:.12}  sigma(1) = {sig1:.12}");

    let grid: Vec<f64> = (1..=9).map(|i| 2.0 * i as f64 / 9.0).collect();
    let report = stage("kappa_sweep 9 pts", || {
        kappa_sweep(&lifted, &q, &grid).unwrap()
    });
    eprintln!(
        "  sweep rho range [{:.6}, {:.6}]",
        report.rho.iter().cloned().fold(f64::INFINITY, f64::min),
        report.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );

    let trace = stage("demand trace", || {
        synthetic_trace(&step_convergence_demand(4, 7, 86_400.0), 1)
    });

    let cfg = SolverConfig {
        linearized: true,
        ..SolverConfig::default()
    };
    let plan = CyclePlan::zero(0, 4);
    let zero_trace = DemandTrace::constant(4, 0.0, 86_400.0 * 2.0);
    let state0 = PlantState::rest(4);
    let r0 = stage("sim day, linear, zero demand", || {
        simulate_cycle(&state0, &plan, &zero_trace, &params, &cfg).unwrap()
    });
    eprintln!("  max|freq| = {:.3e}", r0.max_abs_freq());

    let r1 = stage("sim day, linear, step demand", || {
        simulate_cycle(&state0, &plan, &trace, &params, &cfg).unwrap()
    });
    eprintln!("  max|freq| = {:.3e}  y[0][12] = {:.3}", r1.max_abs_freq(), r1.y[(0, 12)]);

    let cfg_nl = SolverConfig::default();
    let r2 = stage("sim day, nonlinear, step demand", || {
        simulate_cycle(&state0, &plan, &trace, &params, &cfg_nl).unwrap()
    });
    eprintln!("  max|freq| = {:.3e}", r2.max_abs_freq());

    let _ = DMatrix::<f64>::zeros(1, 1);
    eprintln!("done");
}
