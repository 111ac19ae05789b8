//! Feeders shipped with the crate.
//!
//! * `two-bus`: one single-phase line, r = 0.01, x = 0.02 p.u., 0.1 + j0.05
//!   p.u. load.
//! * `six-bus`: a three-phase 4.16 kV lateral using overhead line
//!   configurations 601 and 603 of the IEEE 13-node feeder, with a two-phase
//!   branch and a load-free junction.
//! * `ieee33`: per-phase equivalent of the Baran-Wu 33-bus 12.66 kV feeder.

use crate::error::NetworkError;
use crate::network::{network_from_str, ThreePhaseNetwork};

pub const TWO_BUS_JSON: &str = include_str!("../data/two_bus.json");
pub const SIX_BUS_JSON: &str = include_str!("../data/six_bus.json");
pub const IEEE33_JSON: &str = include_str!("../data/ieee33.json");

pub const NAMES: [&str; 3] = ["two-bus", "six-bus", "ieee33"];

pub fn json(name: &str) -> Option<&'static str> {
    match name {
        "two-bus" => Some(TWO_BUS_JSON),
        "six-bus" => Some(SIX_BUS_JSON),
        "ieee33" => Some(IEEE33_JSON),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Option<ThreePhaseNetwork> {
    json(name).map(|s| network_from_str(s).expect("bundled feeder is valid"))
}

pub fn two_bus() -> ThreePhaseNetwork {
    by_name("two-bus").expect("bundled")
}

pub fn six_bus() -> ThreePhaseNetwork {
    by_name("six-bus").expect("bundled")
}

pub fn ieee33() -> ThreePhaseNetwork {
    by_name("ieee33").expect("bundled")
}

/// Loads a feeder from a path, or a bundled one given as `builtin:<name>`.
pub fn resolve(source: &str) -> Result<ThreePhaseNetwork, NetworkError> {
    match source.strip_prefix("builtin:") {
        Some(name) => json(name)
            .ok_or_else(|| {
                NetworkError::Parse(format!(
                    "unknown bundled feeder {name:?} (have {})",
                    NAMES.join(", ")
                ))
            })
            .and_then(network_from_str),
        None => crate::network::load_network(source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_feeders_parse() {
        for n in NAMES {
            assert!(by_name(n).is_some(), "{n}");
        }
        assert_eq!(ieee33().buses().len(), 33);
        assert_eq!(six_bus().branch_phases().len(), 14);
    }
}
