use gridlearn::analysis::asymptotic_stability;
use gridlearn::grid::{build_compound_plant, GridParams};
use gridlearn::lifted::{build_p_matrix, build_q_filter, LiftedFilters};

fn main() {
    let params = GridParams::reference_four_node();
    let plant = build_compound_plant(&params).unwrap();
    let sys = build_p_matrix(&plant, 435).unwrap();
    let q = build_q_filter(4, 1.0 / 6.0, 2).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    let mut checked = 0usize;
    for i in 1..=40 {
        let kappa = 0.05 * i as f64;
        let rho = asymptotic_stability(&sys, &LiftedFilters::new(q.clone(), kappa)).unwrap();
        if rho > worst.1 {
            worst = (kappa, rho);
        }
        checked += 1;
        if !(rho < 1.0 - 1e-9) {
            println!("AS FAILS at kappa={kappa}: rho={rho:.15}");
        }
    }
    for kappa in [0.005, 0.01, 0.02, 1.97, 1.98, 1.99, 1.995, 2.0] {
        let rho = asymptotic_stability(&sys, &LiftedFilters::new(q.clone(), kappa)).unwrap();
        println!("kappa={kappa}: rho={rho:.15}  margin={:.3e}", 1.0 - rho);
        if rho > worst.1 {
            worst = (kappa, rho);
        }
        checked += 1;
    }
    println!("checked {checked} gains; worst rho {:.15} at kappa={}", worst.1, worst.0);
}
