//! A real meter reading offset by 50% (with +-1% bounds) contradicts the
//! rest of the measurement set; the contractor proves the set empty.
//!
//! ```
//! cargo run --release --example empty_set_detection
//! ```

use rdm_ise::equations::build_residuals;
use rdm_ise::error::EstimationError;
use rdm_ise::feeders;
use rdm_ise::network::{Measurement, MeasurementKind};
use rdm_ise::oracle::{run_method, synthesize_trial, MeasurementPlan, Method, NoiseConfig};
use rdm_ise::{ContractorConfig, IcpConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = feeders::six_bus();
    let plan = MeasurementPlan::standard(&net, 3);
    let trial = synthesize_trial(&net, &plan, &NoiseConfig::default(), 7)?;
    let mut meas = trial.measurements.clone();
    let k = meas
        .items
        .iter()
        .position(|m| m.kind == MeasurementKind::PInj && !m.is_pseudo)
        .ok_or("no real injection meter")?;
    let m = meas.items[k].clone();
    let v = 1.5 * m.value;
    meas.items[k] = Measurement::with_relative_error(m.kind, m.location, m.phase, v, v, 0.01, false);
    println!("{}: {} -> {}", m.label(), m.interval(), meas.items[k].interval());

    let sys = build_residuals(&net, &meas)?;
    for method in [Method::Rdm, Method::Icp] {
        let r = run_method(method, &net, &sys, &meas, &ContractorConfig::default(), &IcpConfig::default());
        match r {
            Err(EstimationError::EmptySolutionSet { iteration, detail }) => {
                println!("{}: empty at iteration {iteration} ({detail})", method.name())
            }
            Err(e) => println!("{}: {e}", method.name()),
            Ok(res) => println!("{}: not detected, {:?}", method.name(), res.status),
        }
    }
    Ok(())
}
