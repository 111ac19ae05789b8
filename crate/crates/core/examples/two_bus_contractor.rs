//! Runs the LP contractor on a two-bus case and prints the width trace
//! and the final boxes next to the true values.
//!
//! ```
//! cargo run --example two_bus_contractor
//! ```

use rdm_ise::contractor::{run_contractor, ContractorConfig};
use rdm_ise::equations::build_residuals;
use rdm_ise::feeders;
use rdm_ise::network::{initial_state_box, InitialBoxConfig};
use rdm_ise::oracle::{synthesize_trial, MeasurementPlan, NoiseConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = feeders::two_bus();
    let plan = MeasurementPlan::standard(&net, 1);
    let trial = synthesize_trial(&net, &plan, &NoiseConfig::default(), 42)?;
    let sys = build_residuals(&net, &trial.measurements)?;
    let start = initial_state_box(&net, &trial.measurements, &InitialBoxConfig::default());
    let res = run_contractor(&sys, &start, &trial.measurements.intervals(), &ContractorConfig::default())?;

    println!("iter  state width  meas width");
    for (k, w) in res.width_history.iter().enumerate() {
        println!("{k:>4}  {:.4e}   {:.4e}", w.state, w.measurement);
    }
    println!("{:?} after {} iterations", res.status, res.iterations_used);

    let s = &res.final_states;
    let t = &trial.true_state;
    println!("e2   {}  true {:.6}", s.e[1], t.e[1]);
    println!("f2   {}  true {:.6}", s.f[1], t.f[1]);
    println!("Ire  {}  true {:.6}", s.i_re[0], t.i_re[0]);
    println!("Iim  {}  true {:.6}", s.i_im[0], t.i_im[0]);
    for ((m, z), v) in trial.measurements.items.iter().zip(&res.final_measurements).zip(&trial.true_measurements) {
        println!("{:<16} {} -> {}  true {v:.6}", m.label(), m.interval(), z);
    }
    Ok(())
}
