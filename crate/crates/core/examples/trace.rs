//! Prints a coarse trace of the bundled scenario; handy when tuning
//! models or gains.

use uvms_core::sim::paper_scenario;
use uvms_core::{run_scenario, Scenario};

fn main() {
    let scenario: Scenario = paper_scenario();
    let log = match run_scenario(&scenario) {
        Ok(log) => log,
        Err(e) => {
            eprintln!("run failed: {e}");
            std::process::exit(1);
        }
    };
    println!("{:>6} {:>8} {:>8} {:>8} {:>9} {:>9}", "t", "f_true", "f_des", "e_f", "max|xi_x|", "max|xi_z|");
    for r in log.records.iter().step_by(250) {
        let xi_x = (0..6)
            .map(|i| (r.e_x[i] / r.rho_x[i]).abs())
            .fold(0.0, f64::max);
        let xi_z = (0..log.dof)
            .map(|j| (r.e_zeta[j] / r.rho_zeta[j]).abs())
            .fold(0.0, f64::max);
        println!(
            "{:6.2} {:8.4} {:8.4} {:+8.4} {:9.4} {:9.4}",
            r.t, r.f_true, r.f_des, r.e_x[0], xi_x, xi_z
        );
    }
}
