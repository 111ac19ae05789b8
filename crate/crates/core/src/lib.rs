//! Credible interval state estimation for three-phase radial distribution
//! feeders.
//!
//! Measurements carry hard error bounds; the estimator returns boxes that are
//! guaranteed to contain every state consistent with them. Two contractors
//! are provided: an LP contractor over RDM-parameterized residuals
//! ([`contractor`]) and a classic interval constraint propagation baseline
//! ([`icp`]). The [`oracle`] module supplies power-flow ground truth and
//! Monte Carlo metrics.

pub mod cli;
pub mod contractor;
pub mod equations;
pub mod error;
pub mod feeders;
pub mod icp;
pub mod interval;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod rdm;
pub mod report;

pub use contractor::{run_contractor, ContractionResult, ContractorConfig};
pub use equations::{build_residuals, ResidualSystem};
pub use icp::{icp_contract, IcpConfig};
pub use interval::Interval;
pub use network::{load_measurements, load_network, MeasurementSet, StateBox, ThreePhaseNetwork};
pub use rdm::{RdmExpr, RdmVarId};
