//! LOS/NLOS/outage link states and log-distance path loss with lognormal
//! shadowing, using the 28 GHz parameterization of the New York City
//! measurement-based mmWave channel model.
//!
//! The link-state probabilities are
//!
//! ```text
//! p_out  = max(0, 1 - exp(-d / d_out + c_out))
//! p_los  = (1 - p_out) * exp(-d / d_los)
//! p_nlos = 1 - p_out - p_los
//! ```
//!
//! and the path loss of a non-outage link is `alpha + 10 * beta * log10(d) + X`
//! with `X ~ N(0, sigma^2)` in dB. Small-scale fading is not modelled: one
//! path-loss value per link per trial.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    #[serde(rename = "los")]
    Los,
    #[serde(rename = "nlos")]
    Nlos,
    #[serde(rename = "outage")]
    Outage,
}

impl LinkState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkState::Los => "los",
            LinkState::Nlos => "nlos",
            LinkState::Outage => "outage",
        }
    }
}

/// `alpha + 10 * beta * log10(d) + N(0, sigma^2)`, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_db: f64,
}

/// Constants of the channel model. Serialized as part of the scenario so a
/// different parameterization needs no code change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub los: PathLossParams,
    pub nlos: PathLossParams,
    pub outage_decay_m: f64,
    pub outage_offset: f64,
    pub los_decay_m: f64,
    /// Lower bound applied to every realized non-outage path loss.
    pub min_path_loss_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            los: PathLossParams { alpha: 61.4, beta: 2.0, sigma_db: 5.8 },
            nlos: PathLossParams { alpha: 72.0, beta: 2.92, sigma_db: 8.7 },
            outage_decay_m: 30.0,
            outage_offset: 5.2,
            los_decay_m: 67.1,
            min_path_loss_db: 61.4,
        }
    }
}

impl ChannelParams {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel params serialize")
    }

    pub fn path_loss_params(&self, state: LinkState) -> Option<&PathLossParams> {
        match state {
            LinkState::Los => Some(&self.los),
            LinkState::Nlos => Some(&self.nlos),
            LinkState::Outage => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("link distance must be strictly positive (got {0} m)")]
    NonPositiveDistance(f64),
    #[error("path loss requested for a link in outage")]
    OutageLink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStateProbabilities {
    pub los: f64,
    pub nlos: f64,
    pub outage: f64,
}

pub fn link_state_probabilities(
    params: &ChannelParams,
    distance_3d_m: f64,
) -> Result<LinkStateProbabilities, ChannelError> {
    if !(distance_3d_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_3d_m));
    }
    let outage = (1.0 - (-distance_3d_m / params.outage_decay_m + params.outage_offset).exp()).max(0.0);
    let los = (1.0 - outage) * (-distance_3d_m / params.los_decay_m).exp();
    let nlos = (1.0 - outage - los).max(0.0);
    Ok(LinkStateProbabilities { los, nlos, outage })
}

/// Categorical draw from [`link_state_probabilities`] with one uniform variate.
pub fn sample_link_state<R: Rng + ?Sized>(
    params: &ChannelParams,
    distance_3d_m: f64,
    rng: &mut R,
) -> Result<LinkState, ChannelError> {
    let p = link_state_probabilities(params, distance_3d_m)?;
    let u: f64 = rng.random();
    Ok(if u < p.los {
        LinkState::Los
    } else if u < p.los + p.nlos {
        LinkState::Nlos
    } else {
        LinkState::Outage
    })
}

/// Deterministic part of the path loss, `alpha + 10 * beta * log10(d)`.
pub fn mean_path_loss_db(
    params: &ChannelParams,
    state: LinkState,
    distance_3d_m: f64,
) -> Result<f64, ChannelError> {
    if !(distance_3d_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_3d_m));
    }
    let pl = params.path_loss_params(state).ok_or(ChannelError::OutageLink)?;
    Ok(pl.alpha + 10.0 * pl.beta * distance_3d_m.log10())
}

/// Path loss including one lognormal shadowing draw.
pub fn path_loss_db<R: Rng + ?Sized>(
    params: &ChannelParams,
    state: LinkState,
    distance_3d_m: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    let mean = mean_path_loss_db(params, state, distance_3d_m)?;
    let sigma = params.path_loss_params(state).map(|p| p.sigma_db).unwrap_or(0.0);
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sigma * z)
}

/// Draws state and path loss of one link. Outage links get `+inf`; other
/// links are floored at `min_path_loss_db`.
pub fn realize_link<R: Rng + ?Sized>(
    params: &ChannelParams,
    distance_3d_m: f64,
    rng: &mut R,
) -> Result<(LinkState, f64), ChannelError> {
    let state = sample_link_state(params, distance_3d_m, rng)?;
    if state == LinkState::Outage {
        return Ok((state, f64::INFINITY));
    }
    let pl = path_loss_db(params, state, distance_3d_m, rng)?;
    Ok((state, pl.max(params.min_path_loss_db)))
}
