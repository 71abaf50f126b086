//! Scenario configuration, validation and per-trial seed derivation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelParams;

/// Rows × columns of a uniform planar array (λ/2 spacing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayShape(pub usize, pub usize);

impl ArrayShape {
    pub fn rows(&self) -> usize {
        self.0
    }

    pub fn cols(&self) -> usize {
        self.1
    }

    pub fn elements(&self) -> usize {
        self.0 * self.1
    }
}

/// All physical and experimental parameters of a campaign.
///
/// Every field has a default, so a config file only needs to list what it
/// changes. Unknown keys are rejected when deserializing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_operators: usize,
    pub total_bandwidth_hz: f64,
    pub chunk_bandwidth_hz: f64,
    pub gnb_density_per_km2: f64,
    pub ue_density_per_km2: f64,
    pub area_side_m: f64,
    /// Only used for λ/2 bookkeeping; path-loss constants live in `channel`.
    pub carrier_frequency_hz: f64,
    pub tx_power_dbm: f64,
    /// Thermal PSD with the receiver noise figure folded in.
    pub noise_psd_dbm_hz: f64,
    pub gnb_array: ArrayShape,
    pub ue_array: ArrayShape,
    pub gnb_height_m: f64,
    pub ue_height_m: f64,
    pub allocation_floor_fraction: f64,
    pub num_trials: u64,
    pub master_seed: u64,
    /// Replace the 3GPP element pattern at the UE by an isotropic element.
    pub ue_isotropic: bool,
    pub channel: ChannelParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_operators: 5,
            total_bandwidth_hz: 1.0e9,
            chunk_bandwidth_hz: 2.0e8,
            gnb_density_per_km2: 75.0,
            ue_density_per_km2: 100.0,
            area_side_m: 1000.0,
            carrier_frequency_hz: 2.7e10,
            tx_power_dbm: 30.0,
            noise_psd_dbm_hz: -174.0 + 7.0,
            gnb_array: ArrayShape(8, 8),
            ue_array: ArrayShape(4, 4),
            gnb_height_m: 10.0,
            ue_height_m: 1.5,
            allocation_floor_fraction: 0.0,
            num_trials: 10_000,
            master_seed: 1,
            ue_isotropic: false,
            channel: ChannelParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn area_km2(&self) -> f64 {
        self.area_side_m * self.area_side_m * 1e-6
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// A single broken invariant found by [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveParameter { field: &'static str, value: f64 },
    ChunkOverflow { num_operators: usize, chunk_bandwidth_hz: f64, total_bandwidth_hz: f64 },
    FloorTooLarge { floor: f64, num_operators: usize },
    BadArrayShape { field: &'static str, shape: ArrayShape },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveParameter { field, value } => {
                write!(f, "{field} must be strictly positive (got {value})")
            }
            Violation::ChunkOverflow { num_operators, chunk_bandwidth_hz, total_bandwidth_hz } => write!(
                f,
                "num_operators * chunk_bandwidth_hz = {num_operators} * {chunk_bandwidth_hz} exceeds total_bandwidth_hz = {total_bandwidth_hz}"
            ),
            Violation::FloorTooLarge { floor, num_operators } => write!(
                f,
                "allocation_floor_fraction must lie in [0, 1/num_operators] (got {floor} with {num_operators} operators)"
            ),
            Violation::BadArrayShape { field, shape } => {
                write!(f, "{field} must have at least one row and one column (got {}x{})", shape.0, shape.1)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ScenarioError::Invalid(v) => v,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A configuration that passed [`validate_config`]. Immutable; share freely.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    config: ScenarioConfig,
}

impl ValidatedScenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn into_config(self) -> ScenarioConfig {
        self.config
    }
}

impl std::ops::Deref for ValidatedScenario {
    type Target = ScenarioConfig;

    fn deref(&self) -> &ScenarioConfig {
        &self.config
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate_config(cfg: ScenarioConfig) -> Result<ValidatedScenario, ScenarioError> {
    let mut violations = Vec::new();

    let mut positive = |field: &'static str, value: f64| {
        // written so NaN also fails
        if !(value > 0.0) || value.is_infinite() {
            violations.push(Violation::NonPositiveParameter { field, value });
        }
    };
    positive("num_operators", cfg.num_operators as f64);
    positive("total_bandwidth_hz", cfg.total_bandwidth_hz);
    positive("chunk_bandwidth_hz", cfg.chunk_bandwidth_hz);
    positive("gnb_density_per_km2", cfg.gnb_density_per_km2);
    positive("ue_density_per_km2", cfg.ue_density_per_km2);
    positive("area_side_m", cfg.area_side_m);
    positive("carrier_frequency_hz", cfg.carrier_frequency_hz);
    positive("gnb_height_m", cfg.gnb_height_m);
    positive("ue_height_m", cfg.ue_height_m);
    positive("num_trials", cfg.num_trials as f64);
    for (field, v) in [
        ("channel.los.sigma_db", cfg.channel.los.sigma_db),
        ("channel.nlos.sigma_db", cfg.channel.nlos.sigma_db),
        ("channel.outage_decay_m", cfg.channel.outage_decay_m),
        ("channel.los_decay_m", cfg.channel.los_decay_m),
    ] {
        // zero shadowing is allowed
        if field.ends_with("sigma_db") {
            if !(v >= 0.0) || v.is_infinite() {
                violations.push(Violation::NonPositiveParameter { field, value: v });
            }
        } else if !(v > 0.0) || v.is_infinite() {
            violations.push(Violation::NonPositiveParameter { field, value: v });
        }
    }
    if !cfg.tx_power_dbm.is_finite() {
        violations.push(Violation::NonPositiveParameter { field: "tx_power_dbm", value: cfg.tx_power_dbm });
    }
    if !cfg.noise_psd_dbm_hz.is_finite() {
        violations.push(Violation::NonPositiveParameter {
            field: "noise_psd_dbm_hz",
            value: cfg.noise_psd_dbm_hz,
        });
    }

    if cfg.num_operators >= 1
        && cfg.chunk_bandwidth_hz * cfg.num_operators as f64 > cfg.total_bandwidth_hz
    {
        violations.push(Violation::ChunkOverflow {
            num_operators: cfg.num_operators,
            chunk_bandwidth_hz: cfg.chunk_bandwidth_hz,
            total_bandwidth_hz: cfg.total_bandwidth_hz,
        });
    }

    let f = cfg.allocation_floor_fraction;
    if !(f >= 0.0) || f * cfg.num_operators as f64 > 1.0 {
        violations.push(Violation::FloorTooLarge { floor: f, num_operators: cfg.num_operators });
    }

    for (field, shape) in [("gnb_array", cfg.gnb_array), ("ue_array", cfg.ue_array)] {
        if shape.0 == 0 || shape.1 == 0 {
            violations.push(Violation::BadArrayShape { field, shape });
        }
    }

    if violations.is_empty() {
        Ok(ValidatedScenario { config: cfg })
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

/// Seed of one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub value: u64,
    pub trial_index: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer (Stafford variant 13). A bijection on u64.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `trial_index`-th output of a SplitMix64 generator whose state starts
/// at `master_seed`: `mix(master_seed + (trial_index + 1) * golden_gamma)`.
///
/// For a fixed master seed this is injective in `trial_index` (the gamma is
/// odd and the finalizer is a bijection), so trial seeds never collide.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> TrialSeed {
    let state = master_seed.wrapping_add(trial_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    TrialSeed { value: splitmix64_mix(state), trial_index }
}
