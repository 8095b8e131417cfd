//! Acceptance gate: one test per release criterion, each printing an
//! explicit pass/fail line. Run with `--nocapture` to see every line
//! even when all criteria pass.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use uvms_core::sim::{paper_scenario, run_scenario, SimLog};
use uvms_core::verify::{
    envelope_battery, jacobian_battery, min_margin, oracle1dof::Oracle1DofConfig,
    oracle_equivalence_report, passivity_battery, pseudo_inverse_battery, robustness_battery,
    rk4_order_report, skew_symmetry_battery, spd_battery,
};

/// The reference 10 s closed-loop run, shared across criteria, with
/// the wall-clock time the simulation took.
fn reference_run() -> &'static (SimLog, Duration) {
    static RUN: OnceLock<(SimLog, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let log = run_scenario(&paper_scenario()).expect("reference scenario runs");
        (log, t0.elapsed())
    })
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_envelope_containment() {
    let (log, elapsed) = reference_run();
    let rep = envelope_battery(log);
    let margin = min_margin(log);
    let within_budget = *elapsed <= Duration::from_secs(30);
    verdict(
        "1 (envelope containment)",
        rep.pass && margin > 0.0 && within_budget,
        &format!("{rep}; min margin {margin:.4}; runtime {elapsed:.2?} (budget 30 s)"),
    );
}

#[test]
fn criterion_2_force_tracking() {
    let (log, _) = reference_run();
    let late: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.t >= 3.0)
        .map(|r| r.e_x[0].abs())
        .collect();
    let worst_late = late.iter().cloned().fold(0.0, f64::max);
    let tail: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.t >= 8.0)
        .map(|r| r.e_x[0].abs())
        .collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    verdict(
        "2 (force tracking)",
        worst_late < 0.2 && tail_mean < 0.1,
        &format!(
            "max |e_f| after 3 s = {worst_late:.4} N (< 0.2), \
             mean |e_f| over final 2 s = {tail_mean:.4} N (< 0.1)"
        ),
    );
}

#[test]
fn criterion_3_orientation_regulation() {
    let (log, _) = reference_run();
    let mut worst = 0.0f64;
    let mut worst_where = String::from("never exceeded");
    for r in log.records.iter().filter(|r| r.t >= 3.0) {
        for j in 3..6 {
            let e = r.e_x[j].abs();
            if e > worst {
                worst = e;
                worst_where = format!("channel {} at t={}", j - 2, r.t);
            }
        }
    }
    verdict(
        "3 (orientation regulation)",
        worst < 0.2,
        &format!("max |e_o| after 3 s = {worst:.4} rad ({worst_where})"),
    );
}

#[test]
fn criterion_4_oracle_equivalence() {
    let cfg = Oracle1DofConfig {
        mass: 7.0,
        added_mass: 3.0,
        d_lin: 6.0,
        d_quad: 3.0,
        initial_penetration: 0.2,
        f_des_amplitude: 0.4,
        f_des_omega: std::f64::consts::PI,
        dist_amplitude: 0.15,
        dist_omega: 2.0 * std::f64::consts::PI / 7.0,
        duration: 10.0,
        ..Default::default()
    };
    let rep = oracle_equivalence_report(&cfg);
    verdict("4 (oracle equivalence)", rep.pass, &format!("{rep}"));
}

#[test]
fn criterion_5_numerical_batteries() {
    let scenario = paper_scenario();
    let (log, _) = reference_run();
    let reports = [
        jacobian_battery(&scenario.model, 100, 11),
        pseudo_inverse_battery(1000, 13),
        skew_symmetry_battery(&scenario.model, 1000, 17),
        spd_battery(&scenario.model, log),
        rk4_order_report(),
        passivity_battery(&scenario.model, 5.0),
    ];
    let all = reports.iter().all(|r| r.pass);
    let detail = reports
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    verdict("5 (numerical batteries)", all, &detail);
}

#[test]
fn criterion_6_robustness_sweep() {
    let rep = robustness_battery(&paper_scenario());
    verdict("6 (robustness sweep)", rep.pass, &format!("{rep}"));
}

#[test]
fn criterion_7_determinism() {
    let scenario = paper_scenario().with_seed(42);
    let mut a = Vec::new();
    run_scenario(&scenario).unwrap().write_csv(&mut a).unwrap();
    let mut b = Vec::new();
    run_scenario(&scenario).unwrap().write_csv(&mut b).unwrap();
    let identical = a == b;

    let dir = std::env::temp_dir().join(format!("uvms-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("determinism.csv");
    std::fs::write(&path, &a).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_uvms-sim"))
        .arg("check-invariants")
        .arg(&path)
        .status()
        .unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        "7 (determinism)",
        identical && status.code() == Some(0),
        &format!(
            "equal-seed logs byte-identical: {identical} ({} bytes); \
             check-invariants exit code {:?}",
            a.len(),
            status.code()
        ),
    );
}
