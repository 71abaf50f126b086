//! Link records, minimum-path-loss association, SINR/SNR and throughput.
//!
//! Powers are handled in linear watts and converted from dB only at the
//! boundary. Interference terms are summed in the order they are given,
//! which callers keep sorted by gNB index so results are bit-stable.

use rand::Rng;
use thiserror::Error;

use crate::channel::{realize_link, ChannelError, ChannelParams, LinkState};
use crate::deployment::{OperatorNodes, Position};
use crate::numeric::{db_to_linear, dbm_to_watts};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("the serving link is in outage")]
    OutageServingLink,
    #[error("gNB with {bandwidth_hz} Hz of bandwidth has no associated users")]
    ZeroUsers { bandwidth_hz: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Global-frame angles of a direction: azimuth counter-clockwise from +x
/// and angle from zenith, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalAngles {
    pub azimuth: f64,
    pub zenith: f64,
}

impl GlobalAngles {
    fn of(dx: f64, dy: f64, dz: f64) -> Self {
        let r = (dx * dx + dy * dy + dz * dz).sqrt();
        Self { azimuth: dy.atan2(dx), zenith: (dz / r).clamp(-1.0, 1.0).acos() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRecord {
    pub gnb_index: usize,
    pub ue_index: usize,
    pub operator_index: usize,
    pub distance_3d_m: f64,
    pub state: LinkState,
    /// Includes shadowing; `+inf` for outage links.
    pub path_loss_db: f64,
    /// UE position minus gNB position, metres.
    pub offset: [f64; 3],
}

impl LinkRecord {
    pub fn is_outage(&self) -> bool {
        self.state == LinkState::Outage
    }

    /// Direction of the UE as seen from the gNB.
    pub fn departure(&self) -> GlobalAngles {
        let [dx, dy, dz] = self.offset;
        GlobalAngles::of(dx, dy, dz)
    }

    /// Direction of the gNB as seen from the UE.
    pub fn arrival(&self) -> GlobalAngles {
        let [dx, dy, dz] = self.offset;
        GlobalAngles::of(-dx, -dy, -dz)
    }
}

/// Draws one link between a gNB and a UE position.
pub fn realize_link_record<R: Rng + ?Sized>(
    params: &ChannelParams,
    gnb: &Position,
    ue: &Position,
    gnb_index: usize,
    ue_index: usize,
    operator_index: usize,
    rng: &mut R,
) -> Result<LinkRecord, ChannelError> {
    let (dx, dy, dz) = (ue.x - gnb.x, ue.y - gnb.y, ue.z - gnb.z);
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    let (state, path_loss_db) = realize_link(params, r, rng)?;
    Ok(LinkRecord {
        gnb_index,
        ue_index,
        operator_index,
        distance_3d_m: r,
        state,
        path_loss_db,
        offset: [dx, dy, dz],
    })
}

/// Every gNB-UE link of one operator, row-major by UE.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorLinks {
    pub operator_index: usize,
    pub num_gnbs: usize,
    pub num_ues: usize,
    records: Vec<LinkRecord>,
}

impl OperatorLinks {
    pub fn get(&self, ue: usize, gnb: usize) -> &LinkRecord {
        &self.records[ue * self.num_gnbs + gnb]
    }

    /// Links from every gNB to one UE, in gNB order.
    pub fn ue_links(&self, ue: usize) -> &[LinkRecord] {
        &self.records[ue * self.num_gnbs..(ue + 1) * self.num_gnbs]
    }

    pub fn records(&self) -> &[LinkRecord] {
        &self.records
    }
}

/// Draws all links of one operator: for each UE in order, each gNB in order.
pub fn realize_operator_links<R: Rng + ?Sized>(
    params: &ChannelParams,
    nodes: &OperatorNodes,
    operator_index: usize,
    rng: &mut R,
) -> Result<OperatorLinks, ChannelError> {
    let mut records = Vec::with_capacity(nodes.ues.len() * nodes.gnbs.len());
    for (u, ue) in nodes.ues.iter().enumerate() {
        for (g, gnb) in nodes.gnbs.iter().enumerate() {
            records.push(realize_link_record(params, gnb, ue, g, u, operator_index, rng)?);
        }
    }
    Ok(OperatorLinks { operator_index, num_gnbs: nodes.gnbs.len(), num_ues: nodes.ues.len(), records })
}

/// Argmin of path loss over non-outage links; ties go to the lowest gNB index.
pub fn best_server(links: &[LinkRecord]) -> Option<usize> {
    let mut best: Option<&LinkRecord> = None;
    for l in links.iter().filter(|l| !l.is_outage()) {
        match best {
            Some(b) if l.path_loss_db > b.path_loss_db => {}
            Some(b) if l.path_loss_db == b.path_loss_db && l.gnb_index > b.gnb_index => {}
            _ => best = Some(l),
        }
    }
    best.map(|l| l.gnb_index)
}

/// Serving gNB of every UE of one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMap {
    pub operator_index: usize,
    /// `None` when every link of the UE is in outage.
    pub serving: Vec<Option<usize>>,
    /// Associated-UE count per gNB.
    pub counts: Vec<usize>,
}

impl AssociationMap {
    pub fn users_on(&self, gnb: usize) -> usize {
        self.counts[gnb]
    }

    /// UEs served by `gnb`, in UE order.
    pub fn ues_of(&self, gnb: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter_map(move |(u, s)| (*s == Some(gnb)).then_some(u))
    }

    pub fn associated_count(&self) -> usize {
        self.serving.iter().filter(|s| s.is_some()).count()
    }
}

pub fn associate(links: &OperatorLinks) -> AssociationMap {
    let mut counts = vec![0usize; links.num_gnbs];
    let serving: Vec<Option<usize>> = (0..links.num_ues)
        .map(|u| {
            let s = best_server(links.ue_links(u));
            if let Some(g) = s {
                counts[g] += 1;
            }
            s
        })
        .collect();
    AssociationMap { operator_index: links.operator_index, serving, counts }
}

/// Path loss and beamforming gain of one transmitter toward the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub path_loss_db: f64,
    pub gain_linear: f64,
}

/// `P * G / l`, with `P` in watts and `l` in dB. Zero for infinite loss.
#[inline]
pub fn received_power_w(tx_power_w: f64, budget: &LinkBudget) -> f64 {
    tx_power_w * budget.gain_linear / db_to_linear(budget.path_loss_db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub signal_power_w: f64,
    pub interference_power_w: f64,
    pub noise_power_w: f64,
    pub sinr_linear: f64,
    pub snr_linear: f64,
}

pub fn noise_power_w(bandwidth_hz: f64, noise_psd_dbm_hz: f64) -> f64 {
    bandwidth_hz * dbm_to_watts(noise_psd_dbm_hz)
}

/// SINR of a serving link against co-channel interferers, plus the SNR
/// obtained by dropping the interference term.
pub fn sinr(
    serving: &LinkBudget,
    interferers: &[LinkBudget],
    tx_power_dbm: f64,
    bandwidth_hz: f64,
    noise_psd_dbm_hz: f64,
) -> Result<SinrSample, LinkError> {
    if !serving.path_loss_db.is_finite() {
        return Err(LinkError::OutageServingLink);
    }
    let p = dbm_to_watts(tx_power_dbm);
    let signal = received_power_w(p, serving);
    let mut interference = 0.0;
    for k in interferers {
        interference += received_power_w(p, k);
    }
    let noise = noise_power_w(bandwidth_hz, noise_psd_dbm_hz);
    Ok(SinrSample {
        signal_power_w: signal,
        interference_power_w: interference,
        noise_power_w: noise,
        sinr_linear: signal / (interference + noise),
        snr_linear: signal / noise,
    })
}

/// SNR of a serving link (interference neglected).
pub fn snr(
    serving: &LinkBudget,
    tx_power_dbm: f64,
    bandwidth_hz: f64,
    noise_psd_dbm_hz: f64,
) -> Result<f64, LinkError> {
    sinr(serving, &[], tx_power_dbm, bandwidth_hz, noise_psd_dbm_hz).map(|s| s.snr_linear)
}

/// Per-user throughput `(W / N) * log2(1 + gamma)` in bit/s.
pub fn throughput(bandwidth_hz: f64, users_on_gnb: usize, gamma_linear: f64) -> Result<f64, LinkError> {
    if bandwidth_hz == 0.0 {
        return Ok(0.0);
    }
    if users_on_gnb == 0 {
        return Err(LinkError::ZeroUsers { bandwidth_hz });
    }
    Ok(bandwidth_hz / users_on_gnb as f64 * (1.0 + gamma_linear).log2())
}
