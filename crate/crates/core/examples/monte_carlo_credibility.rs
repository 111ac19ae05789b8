//! Credibility and width statistics of both estimators over synthesized
//! trials.
//!
//! ```
//! cargo run --release --example monte_carlo_credibility [feeder] [trials]
//! ```

use rdm_ise::feeders;
use rdm_ise::oracle::{monte_carlo, Method, MonteCarloConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "six-bus".into());
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let net = feeders::by_name(&name).ok_or("unknown feeder")?;
    let cfg = MonteCarloConfig {
        trials,
        ..MonteCarloConfig::default()
    };
    let summary = monte_carlo(&net, &[Method::Rdm, Method::Icp], &cfg)?;
    println!("{name}, {trials} trials");
    for s in &summary {
        let iters: Vec<usize> = s.trials.iter().map(|t| t.iterations).collect();
        println!(
            "{}: credibility {:.2}  mean wid_avr {:.4e}  mean ratio {:.4}  iterations {}..{}",
            s.method.name(),
            s.credibility,
            s.mean_wid_avr,
            s.mean_ratio,
            iters.iter().min().unwrap_or(&0),
            iters.iter().max().unwrap_or(&0)
        );
    }
    Ok(())
}
