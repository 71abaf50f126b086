//! Monte Carlo simulator for multi-operator mmWave cellular networks.
//!
//! Each trial drops gNBs and UEs of every operator as independent Poisson
//! point processes, draws LOS/NLOS/outage links with log-distance path loss,
//! associates UEs by minimum path loss and evaluates the throughput of a
//! typical UE at the centre of the area under two spectrum policies:
//!
//! * **baseline**: every operator transmits in its own exclusive chunk;
//! * **dynamic**: the total band is split among operators in proportion to
//!   the load of each operator's gNB closest (in path loss) to the centre.
//!
//! Both policies are scored with and without inter-cell interference, and
//! the campaign aggregates empirical CDFs, Jain's fairness index and the
//! mean throughput over all trials.
//!
//! ```no_run
//! use mmshare::{harness, scenario::{validate_config, ScenarioConfig}};
//!
//! let scenario = validate_config(ScenarioConfig {
//!     num_trials: 1_000,
//!     ..ScenarioConfig::default()
//! })
//! .unwrap();
//! let result = harness::run_campaign(&scenario).unwrap();
//! for cfg in &result.configurations {
//!     println!("{}: J = {:?}", cfg.configuration, cfg.jain);
//! }
//! ```

pub mod allocation;
pub mod antenna;
pub mod channel;
pub mod deployment;
pub mod harness;
pub mod link;
pub mod numeric;
pub mod output;
pub mod scenario;

pub use allocation::{AllocationResult, Policy};
pub use harness::{CampaignResult, Configuration, TrialRecord};
pub use scenario::{ScenarioConfig, ValidatedScenario};
