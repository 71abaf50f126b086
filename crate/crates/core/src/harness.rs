//! Monte Carlo trials, campaigns and density sweeps.
//!
//! One trial is a single snapshot: a deployment, a channel realization, the
//! association of every operator, one scheduling decision per interfering
//! gNB, and then the typical UE's throughput under both spectrum policies,
//! with and without interference. Both policies see the same randomness.
//!
//! Trial `k` draws from a ChaCha8 generator seeded with
//! [`derive_trial_seed`]`(master_seed, k)`; stream `r` of that generator is
//! used after `r` degenerate resamples. Trials are independent, so a
//! campaign can run them on any number of workers and still produce the
//! same result.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    baseline_allocation, dynamic_allocation, jain_fairness, AllocationError, AllocationResult, Policy,
};
use crate::antenna::{beamforming_gain, ArrayGeometry, Direction, ElementPattern, LinkEnd};
use crate::channel::ChannelError;
use crate::deployment::{generate_deployment, Deployment, DeploymentError};
use crate::link::{
    associate, best_server, realize_link_record, realize_operator_links, sinr, throughput, AssociationMap,
    LinkBudget, LinkError, LinkRecord, OperatorLinks, SinrSample,
};
use crate::numeric::compensated_sum;
use crate::scenario::{derive_trial_seed, ScenarioConfig, ValidatedScenario};

/// Upper bound on consecutive degenerate draws before a trial gives up.
pub const MAX_RESAMPLES: u64 = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trial {trial_index}: no usable deployment after {attempts} draws")]
    DegenerateTrial { trial_index: u64, attempts: u64 },
    #[error("empirical CDF of an empty sample")]
    EmptyInput,
    #[error("density list must be non-empty and strictly positive")]
    BadDensities,
    #[error("forced loads have {got} entries for {expected} operators")]
    LoadCount { expected: usize, got: usize },
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
}

/// Whether interference is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sinr,
    Snr,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Sinr => "sinr",
            Metric::Snr => "snr",
        }
    }
}

/// A policy evaluated with SINR or SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Configuration {
    BaselineSinr,
    DynamicSinr,
    BaselineSnr,
    DynamicSnr,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::BaselineSinr,
        Configuration::DynamicSinr,
        Configuration::BaselineSnr,
        Configuration::DynamicSnr,
    ];

    pub fn new(policy: Policy, metric: Metric) -> Self {
        match (policy, metric) {
            (Policy::Baseline, Metric::Sinr) => Configuration::BaselineSinr,
            (Policy::Dynamic, Metric::Sinr) => Configuration::DynamicSinr,
            (Policy::Baseline, Metric::Snr) => Configuration::BaselineSnr,
            (Policy::Dynamic, Metric::Snr) => Configuration::DynamicSnr,
        }
    }

    pub fn policy(&self) -> Policy {
        match self {
            Configuration::BaselineSinr | Configuration::BaselineSnr => Policy::Baseline,
            Configuration::DynamicSinr | Configuration::DynamicSnr => Policy::Dynamic,
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            Configuration::BaselineSinr | Configuration::DynamicSinr => Metric::Sinr,
            Configuration::BaselineSnr | Configuration::DynamicSnr => Metric::Snr,
        }
    }

    fn index(&self) -> usize {
        match self {
            Configuration::BaselineSinr => 0,
            Configuration::DynamicSinr => 1,
            Configuration::BaselineSnr => 2,
            Configuration::DynamicSnr => 3,
        }
    }

    /// `{policy}_{metric}`, also the stem of the CDF file name.
    pub fn name(&self) -> String {
        format!("{}_{}", self.policy().as_str(), self.metric().as_str())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Where the dynamic policy's per-operator loads come from.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadRule {
    /// UEs associated to each operator's gNB with the smallest path loss to
    /// the centre of the area (for the typical operator, the typical UE's
    /// own serving gNB).
    TypicalGnb,
    /// Use these loads regardless of the realization.
    Fixed(Vec<u64>),
}

/// Outcome of one trial as seen by the typical UE.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub resample_count: u64,
    /// Loads fed to the dynamic policy, per operator.
    pub loads: Vec<u64>,
    /// UEs sharing the typical UE's gNB (including itself); 0 if unassociated.
    pub typical_load: u64,
    pub serving_gnb: Option<usize>,
    pub baseline_bandwidth_hz: f64,
    pub dynamic_bandwidth_hz: f64,
    throughput_bps: [f64; 4],
}

impl TrialRecord {
    pub fn throughput(&self, cfg: Configuration) -> f64 {
        self.throughput_bps[cfg.index()]
    }
}

/// Everything drawn and computed in one trial, for inspection and dumps.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub deployment: Deployment,
    pub links: Vec<OperatorLinks>,
    pub associations: Vec<AssociationMap>,
    /// The typical gNB of each operator, if any.
    pub typical_gnbs: Vec<Option<usize>>,
    pub baseline: AllocationResult,
    pub dynamic: AllocationResult,
    /// Typical UE's link budget per policy (absent when unassociated).
    pub baseline_sinr: Option<SinrSample>,
    pub dynamic_sinr: Option<SinrSample>,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_deployment(
    scenario: &ValidatedScenario,
    trial_index: u64,
    seed: u64,
) -> Result<(Deployment, ChaCha8Rng, u64), HarnessError> {
    for attempt in 0..=MAX_RESAMPLES {
        let mut rng = trial_rng(seed, attempt);
        match generate_deployment(scenario, &mut rng) {
            Ok(d) => return Ok((d, rng, attempt)),
            Err(DeploymentError::DegenerateTrial { .. }) => continue,
        }
    }
    Err(HarnessError::DegenerateTrial { trial_index, attempts: MAX_RESAMPLES + 1 })
}

/// Typical-UE throughputs for one trial with the default load rule.
pub fn run_trial(scenario: &ValidatedScenario, trial_index: u64) -> Result<TrialRecord, HarnessError> {
    simulate_trial(scenario, trial_index, &LoadRule::TypicalGnb).map(|o| o.record)
}

pub fn run_trial_with(
    scenario: &ValidatedScenario,
    trial_index: u64,
    rule: &LoadRule,
) -> Result<TrialRecord, HarnessError> {
    simulate_trial(scenario, trial_index, rule).map(|o| o.record)
}

/// Runs one trial and keeps every intermediate product.
pub fn simulate_trial(
    scenario: &ValidatedScenario,
    trial_index: u64,
    rule: &LoadRule,
) -> Result<TrialOutcome, HarnessError> {
    let m = scenario.num_operators;
    if let LoadRule::Fixed(loads) = rule {
        if loads.len() != m {
            return Err(HarnessError::LoadCount { expected: m, got: loads.len() });
        }
    }
    let seed = derive_trial_seed(scenario.master_seed, trial_index).value;
    let (deployment, mut rng, resample_count) = draw_deployment(scenario, trial_index, seed)?;
    let typ_op = deployment.typical_operator_index;
    let typ_ue = deployment.typical_ue_index();

    let mut links = Vec::with_capacity(m);
    let mut associations = Vec::with_capacity(m);
    for (op, nodes) in deployment.operators.iter().enumerate() {
        let l = realize_operator_links(&scenario.channel, nodes, op, &mut rng)?;
        associations.push(associate(&l));
        links.push(l);
    }

    // every other operator's typical gNB: best server of a probe at the centre
    let mut typical_gnbs = Vec::with_capacity(m);
    for (op, nodes) in deployment.operators.iter().enumerate() {
        if op == typ_op {
            typical_gnbs.push(associations[op].serving[typ_ue]);
            continue;
        }
        let probe = deployment.typical_ue;
        let probe_links = nodes
            .gnbs
            .iter()
            .enumerate()
            .map(|(g, pos)| realize_link_record(&scenario.channel, pos, &probe, g, nodes.ues.len(), op, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        typical_gnbs.push(best_server(&probe_links));
    }
    let measured_loads: Vec<u64> = typical_gnbs
        .iter()
        .zip(&associations)
        .map(|(g, a)| g.map_or(0, |g| a.users_on(g) as u64))
        .collect();

    // each active co-channel gNB serves one uniformly chosen UE in this slot
    let serving = associations[typ_op].serving[typ_ue];
    let mut scheduled: Vec<(usize, usize)> = Vec::new();
    for gnb in 0..links[typ_op].num_gnbs {
        let count = associations[typ_op].users_on(gnb);
        if Some(gnb) == serving || count == 0 {
            continue;
        }
        let pick = rng.random_range(0..count);
        let ue = associations[typ_op].ues_of(gnb).nth(pick).expect("pick < count");
        scheduled.push((gnb, ue));
    }

    let loads = match rule {
        LoadRule::TypicalGnb => measured_loads,
        LoadRule::Fixed(l) => l.clone(),
    };
    let baseline = baseline_allocation(scenario);
    let dynamic = dynamic_allocation(&loads, scenario.total_bandwidth_hz, scenario.allocation_floor_fraction)?;

    let (typical_load, budgets) = match serving {
        Some(i) => {
            let n = associations[typ_op].users_on(i);
            let b = typical_budgets(scenario, &deployment, &links[typ_op], i, &scheduled);
            (n, Some(b))
        }
        None => (0, None),
    };

    let evaluate = |bandwidth_hz: f64| -> Result<(Option<SinrSample>, f64, f64), HarnessError> {
        match &budgets {
            Some((signal, interferers)) => {
                let s = sinr(signal, interferers, scenario.tx_power_dbm, bandwidth_hz, scenario.noise_psd_dbm_hz)?;
                let with_i = throughput(bandwidth_hz, typical_load, s.sinr_linear)?;
                let without_i = throughput(bandwidth_hz, typical_load, s.snr_linear)?;
                Ok((Some(s), with_i, without_i))
            }
            None => Ok((None, 0.0, 0.0)),
        }
    };
    let baseline_bw = baseline.bandwidth_hz[typ_op];
    let dynamic_bw = dynamic.bandwidth_hz[typ_op];
    let (baseline_sinr, b_sinr, b_snr) = evaluate(baseline_bw)?;
    let (dynamic_sinr, d_sinr, d_snr) = evaluate(dynamic_bw)?;

    let record = TrialRecord {
        trial_index,
        seed,
        resample_count,
        loads,
        typical_load: typical_load as u64,
        serving_gnb: serving,
        baseline_bandwidth_hz: baseline_bw,
        dynamic_bandwidth_hz: dynamic_bw,
        throughput_bps: [b_sinr, d_sinr, b_snr, d_snr],
    };
    Ok(TrialOutcome {
        record,
        deployment,
        links,
        associations,
        typical_gnbs,
        baseline,
        dynamic,
        baseline_sinr,
        dynamic_sinr,
    })
}

/// Serving and interfering link budgets of the typical UE served by `serving`.
///
/// The serving pair is perfectly aligned. Interfering gNB `k` points at its
/// scheduled UE while the typical UE keeps pointing at its server.
fn typical_budgets(
    scenario: &ValidatedScenario,
    deployment: &Deployment,
    links: &OperatorLinks,
    serving: usize,
    scheduled: &[(usize, usize)],
) -> (LinkBudget, Vec<LinkBudget>) {
    let nodes = &deployment.operators[deployment.typical_operator_index];
    let typ = deployment.typical_ue;
    let typ_ue = deployment.typical_ue_index();
    let gnb_pattern = ElementPattern::ThreeGpp;
    let ue_pattern = if scenario.ue_isotropic { ElementPattern::Isotropic } else { ElementPattern::ThreeGpp };
    let gnb_array =
        |g: usize| ArrayGeometry::new(scenario.gnb_array.rows(), scenario.gnb_array.cols(), nodes.gnb_orientations[g], gnb_pattern);

    let serving_link = links.get(typ_ue, serving);
    let srv = nodes.gnbs[serving];
    let ue_array = ArrayGeometry::new(
        scenario.ue_array.rows(),
        scenario.ue_array.cols(),
        serving_link.arrival().azimuth,
        ue_pattern,
    );
    let ue_to_server = ue_array.local(srv.x - typ.x, srv.y - typ.y, srv.z - typ.z);

    let srv_array = gnb_array(serving);
    let server_to_ue = srv_array.local(typ.x - srv.x, typ.y - srv.y, typ.z - srv.z);
    let signal = LinkBudget {
        path_loss_db: serving_link.path_loss_db,
        gain_linear: beamforming_gain(
            LinkEnd { geometry: &srv_array, steer: server_to_ue, actual: server_to_ue },
            LinkEnd { geometry: &ue_array, steer: ue_to_server, actual: ue_to_server },
        ),
    };

    let interferers = scheduled
        .iter()
        .map(|&(k, target)| {
            let link: &LinkRecord = links.get(typ_ue, k);
            if link.is_outage() {
                return LinkBudget { path_loss_db: f64::INFINITY, gain_linear: 0.0 };
            }
            let pos = nodes.gnbs[k];
            let aim = nodes.ues[target];
            let arr = gnb_array(k);
            let steer = arr.local(aim.x - pos.x, aim.y - pos.y, aim.z - pos.z);
            let actual = arr.local(typ.x - pos.x, typ.y - pos.y, typ.z - pos.z);
            let ue_actual: Direction = ue_array.local(pos.x - typ.x, pos.y - typ.y, pos.z - typ.z);
            LinkBudget {
                path_loss_db: link.path_loss_db,
                gain_linear: beamforming_gain(
                    LinkEnd { geometry: &arr, steer, actual },
                    LinkEnd { geometry: &ue_array, steer: ue_to_server, actual: ue_actual },
                ),
            }
        })
        .collect();
    (signal, interferers)
}

/// Aggregate of one configuration over a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationResult {
    pub configuration: Configuration,
    /// Typical-UE throughputs sorted ascending (the empirical CDF support).
    pub sorted_samples: Vec<f64>,
    /// `None` when every sample is zero.
    pub jain: Option<f64>,
    pub mean_throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub scenario: ScenarioConfig,
    pub total_trials: u64,
    pub total_resamples: u64,
    /// In [`Configuration::ALL`] order.
    pub configurations: Vec<ConfigurationResult>,
    /// In trial order.
    pub trials: Vec<TrialRecord>,
}

impl CampaignResult {
    pub fn get(&self, cfg: Configuration) -> &ConfigurationResult {
        &self.configurations[cfg.index()]
    }
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::WorkerPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `num_trials` trials on rayon's global pool.
pub fn run_campaign(scenario: &ValidatedScenario) -> Result<CampaignResult, HarnessError> {
    run_campaign_with(scenario, None, &LoadRule::TypicalGnb)
}

/// Runs a campaign on `workers` threads (`None`: rayon's global pool). The
/// result does not depend on the worker count.
pub fn run_campaign_with(
    scenario: &ValidatedScenario,
    workers: Option<usize>,
    rule: &LoadRule,
) -> Result<CampaignResult, HarnessError> {
    let trials: Vec<TrialRecord> = with_workers(workers, || {
        (0..scenario.num_trials)
            .into_par_iter()
            .map(|k| run_trial_with(scenario, k, rule))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(aggregate(scenario.config().clone(), trials))
}

/// Builds per-configuration statistics from trial records (in trial order).
pub fn aggregate(scenario: ScenarioConfig, trials: Vec<TrialRecord>) -> CampaignResult {
    let configurations = Configuration::ALL
        .iter()
        .map(|&cfg| {
            let samples: Vec<f64> = trials.iter().map(|t| t.throughput(cfg)).collect();
            let mean = if samples.is_empty() {
                0.0
            } else {
                compensated_sum(samples.iter().copied()) / samples.len() as f64
            };
            let jain = jain_fairness(&samples).ok();
            let mut sorted = samples;
            sorted.sort_by(f64::total_cmp);
            ConfigurationResult { configuration: cfg, sorted_samples: sorted, jain, mean_throughput_bps: mean }
        })
        .collect();
    CampaignResult {
        scenario,
        total_trials: trials.len() as u64,
        total_resamples: trials.iter().map(|t| t.resample_count).sum(),
        configurations,
        trials,
    }
}

/// One Table-style row: a policy's SINR-based fairness and mean throughput
/// at one gNB density.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub density_per_km2: f64,
    pub policy: Policy,
    pub jain: Option<f64>,
    pub mean_throughput_bps: f64,
}

/// One campaign per density, same master seed, rows in density order.
pub fn density_sweep(
    scenario: &ValidatedScenario,
    densities: &[f64],
    workers: Option<usize>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if densities.is_empty() || densities.iter().any(|d| !(*d > 0.0) || d.is_infinite()) {
        return Err(HarnessError::BadDensities);
    }
    let mut rows = Vec::with_capacity(densities.len() * 2);
    for &density in densities {
        let cfg = ScenarioConfig { gnb_density_per_km2: density, ..scenario.config().clone() };
        let s = crate::scenario::validate_config(cfg)?;
        let result = run_campaign_with(&s, workers, &LoadRule::TypicalGnb)?;
        for policy in Policy::ALL {
            let c = result.get(Configuration::new(policy, Metric::Sinr));
            rows.push(SweepRow {
                density_per_km2: density,
                policy,
                jain: c.jain,
                mean_throughput_bps: c.mean_throughput_bps,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub value: f64,
    pub probability: f64,
}

/// Step CDF over the samples: one point per sample, sorted, with tied values
/// all at the top of their step.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<CdfPoint>, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = vec![CdfPoint { value: 0.0, probability: 0.0 }; n];
    let mut i = n;
    while i > 0 {
        let top = i;
        let v = sorted[i - 1];
        while i > 0 && sorted[i - 1] == v {
            i -= 1;
            out[i] = CdfPoint { value: v, probability: top as f64 / n as f64 };
        }
    }
    Ok(out)
}
