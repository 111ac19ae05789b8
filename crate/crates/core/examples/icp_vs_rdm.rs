//! Compares the interval constraint propagation baseline with the RDM
//! contractor on one synthesized six-bus trial.
//!
//! ```
//! cargo run --release --example icp_vs_rdm [seed]
//! ```

use rdm_ise::equations::build_residuals;
use rdm_ise::feeders;
use rdm_ise::oracle::{
    run_method, synthesize_trial, trial_coverage, width_metrics, MeasurementPlan, Method,
    NoiseConfig,
};
use rdm_ise::{ContractorConfig, IcpConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let net = feeders::six_bus();
    let plan = MeasurementPlan::standard(&net, 3);
    let trial = synthesize_trial(&net, &plan, &NoiseConfig::default(), seed)?;
    let sys = build_residuals(&net, &trial.measurements)?;
    let z0 = trial.measurements.intervals();

    println!("method  iters  wid_avr     ratio    coverage   pseudo shrunk");
    for m in [Method::Icp, Method::Rdm] {
        let res = run_method(
            m,
            &net,
            &sys,
            &trial.measurements,
            &ContractorConfig::default(),
            &IcpConfig::default(),
        )?;
        let (w, ratio) = width_metrics(&sys, &res, &z0);
        let (c1, c2) = trial_coverage(&res, &trial);
        let shrunk = trial
            .measurements
            .items
            .iter()
            .zip(&res.final_measurements)
            .filter(|(z, f)| z.is_pseudo && f.width() < z.interval().width())
            .count();
        println!(
            "{:<6}  {:>5}  {w:.4e}  {ratio:.4}   {c1:.2}/{c2:.2}   {shrunk}",
            m.name(),
            res.iterations_used
        );
    }
    Ok(())
}
