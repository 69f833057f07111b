//! canepi-core: a stochastic agent-based simulator of HIV spread in a
//! scale-free sexual-contact network of MSM.
//!
//! Each node of a configuration-model network is one man with a fixed
//! yearly contact count; contacts are rewired every simulated year. Agents
//! progress Negative -> PI -> AP -> AIDS, may form steady partnerships with
//! many yearly acts (casual edges carry one act per year), and transmit
//! per-act with probabilities scaled by treatment, scenario risk behavior,
//! and safety agreements. Scenarios ("rs", "p1".."p5") vary the risk factor
//! and therapy strength from 2007 onward; results are yearly incidence per
//! 100 susceptible person-years averaged over independent realizations,
//! with a paired t-test against an optional historical series.

pub mod analysis;
pub mod config;
pub mod disease;
pub mod engine;
pub mod error;
pub mod netgen;
pub mod partnerships;
pub mod scenario;
pub mod stochastics;
pub mod transmission;

pub use config::SimulationConfig;
pub use engine::{run_scenario, SimulationResult};
pub use error::{Error, Result};
pub use scenario::ScenarioSpec;
pub use stochastics::{RngStream, RNG_ALGORITHM};

/// Crate version, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
