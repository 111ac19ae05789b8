//! Builds a feeder from JSON, attaches measurements, and shows the
//! validation errors for a few broken inputs.
//!
//! ```
//! cargo run --example feeder_io
//! ```

use rdm_ise::network::{measurements_from_str, network_from_str, network_to_string};

const FEEDER: &str = r#"{
  "format_version": 1,
  "name": "three-bus",
  "base": {"kva": 1000.0, "kv": 4.16},
  "reference": {"bus": 1, "voltage_pu": [1.0, 1.0, 1.0]},
  "buses": [
    {"id": 1, "phases": "abc"},
    {"id": 2, "phases": "abc"},
    {"id": 3, "phases": "c"}
  ],
  "branches": [
    {"id": 1, "from": 1, "to": 2,
     "r_ohm": [[0.3, 0.1, 0.1], [0.1, 0.3, 0.1], [0.1, 0.1, 0.3]],
     "x_ohm": [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]]},
    {"id": 2, "from": 2, "to": 3, "r_ohm": [[0.4]], "x_ohm": [[0.5]]}
  ],
  "loads": [
    {"bus": 2, "p_kw": [50, 60, 40], "q_kvar": [20, 25, 15]},
    {"bus": 3, "p_kw": [30], "q_kvar": [10]}
  ]
}"#;

const MEASUREMENTS: &str = r#"{
  "format_version": 1,
  "measurements": [
    {"kind": "v_sq", "bus": 1, "phase": "a", "value": 1.0},
    {"kind": "p_flow", "branch": 1, "phase": "a", "value": 0.05},
    {"kind": "p_inj", "bus": 2, "phase": "a", "rated": 0.05, "pseudo": true},
    {"kind": "zero_injection", "bus": 3}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = network_from_str(FEEDER)?;
    println!("{}: {} bus phases, {} branch phases", net.name, net.bus_phases().len(), net.branch_phases().len());
    let again = network_from_str(&network_to_string(&net))?;
    println!("round trip equal: {}", again == net);

    let meas = measurements_from_str(MEASUREMENTS, &net)?;
    for m in &meas.items {
        println!("{:<16} {}{}", m.label(), m.interval(), if m.is_pseudo { "  (pseudo)" } else { "" });
    }

    let broken = [
        FEEDER.replace("\"from\": 2, \"to\": 3", "\"from\": 3, \"to\": 3"),
        FEEDER.replace("[0.1, 0.3, 0.1], [0.1, 0.1, 0.3]", "[0.2, 0.3, 0.1], [0.1, 0.1, 0.3]"),
        FEEDER.replace("\"phases\": \"c\"", "\"phases\": \"x\""),
        FEEDER.replacen('{', "", 1),
    ];
    for text in &broken {
        match network_from_str(text) {
            Ok(_) => println!("accepted?"),
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
