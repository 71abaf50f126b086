//! Result files: campaign summary JSON, CDF CSVs, sweep table and optional
//! per-trial dumps. Numbers are written with 9 significant digits, CSVs use
//! a header row, comma delimiters and LF line endings.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Policy;
use crate::harness::{empirical_cdf, CampaignResult, Configuration, HarnessError, Metric, SweepRow, TrialOutcome};
use crate::numeric::{fmt_sig9, linear_to_db, round_sig9};
use crate::scenario::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const RESULTS_FILE: &str = "results.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const PATTERN_FILE: &str = "pattern.csv";
pub const DEPLOYMENT_DUMP_FILE: &str = "deployment.csv";
pub const LINK_DUMP_FILE: &str = "links.csv";
pub const ALLOCATION_DUMP_FILE: &str = "allocations.csv";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{0} already exists (pass --force to overwrite)")]
    Exists(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

/// Per-configuration line of the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSummary {
    pub name: String,
    pub policy: Policy,
    pub metric: Metric,
    pub samples: u64,
    pub jain: Option<f64>,
    pub mean_throughput_bps: f64,
}

/// Contents of `results.json`. Floats are already rounded to 9 significant
/// digits, so writing and re-reading the file reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub total_trials: u64,
    pub total_resamples: u64,
    pub configurations: Vec<ConfigurationSummary>,
}

impl CampaignSummary {
    pub fn from_result(result: &CampaignResult) -> Self {
        let configurations = result
            .configurations
            .iter()
            .map(|c| ConfigurationSummary {
                name: c.configuration.name(),
                policy: c.configuration.policy(),
                metric: c.configuration.metric(),
                samples: c.sorted_samples.len() as u64,
                jain: c.jain.map(round_sig9),
                mean_throughput_bps: round_sig9(c.mean_throughput_bps),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: result.scenario.clone(),
            total_trials: result.total_trials,
            total_resamples: result.total_resamples,
            configurations,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Human-readable table (configuration, J, mean throughput).
    pub fn table(&self) -> String {
        let mut out = format!("{:<16} {:>12} {:>16}\n", "configuration", "jain", "mean_bps");
        for c in &self.configurations {
            let j = c.jain.map_or_else(|| "n/a".to_string(), fmt_sig9);
            out.push_str(&format!("{:<16} {:>12} {:>16}\n", c.name, j, fmt_sig9(c.mean_throughput_bps)));
        }
        out
    }
}

pub fn read_summary(path: &Path) -> Result<CampaignSummary, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path: path.to_path_buf(), source })
}

pub fn cdf_file_name(cfg: Configuration) -> String {
    format!("{}.csv", cfg.name())
}

/// Files [`write_campaign`] produces, in write order.
pub fn campaign_file_names() -> Vec<String> {
    std::iter::once(RESULTS_FILE.to_string())
        .chain(Configuration::ALL.iter().map(|&c| cdf_file_name(c)))
        .collect()
}

/// Refuses to go on if any target already exists and `force` is off.
pub fn check_writable(dir: &Path, names: &[String], force: bool) -> Result<(), OutputError> {
    if force {
        return Ok(());
    }
    for n in names {
        let p = dir.join(n);
        if p.exists() {
            return Err(OutputError::Exists(p));
        }
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, OutputError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |e| OutputError::Io { path: path.to_path_buf(), source: e.into() }
}

/// Writes `rows` (header first) to `path`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `results.json` and one CDF file per configuration into `dir`.
pub fn write_campaign(dir: &Path, result: &CampaignResult, force: bool) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    check_writable(dir, &campaign_file_names(), force)?;

    let mut written = Vec::new();
    let summary_path = dir.join(RESULTS_FILE);
    fs::write(&summary_path, CampaignSummary::from_result(result).to_json()).map_err(io_err(&summary_path))?;
    written.push(summary_path);

    for c in &result.configurations {
        let path = dir.join(cdf_file_name(c.configuration));
        let cdf = empirical_cdf(&c.sorted_samples)?;
        write_csv(
            &path,
            &["throughput_bps", "cdf"],
            cdf.iter().map(|p| [fmt_sig9(p.value), fmt_sig9(p.probability)]),
        )?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    write_csv(
        path,
        &["density_per_km2", "policy", "jain", "mean_throughput_gbps"],
        rows.iter().map(|r| {
            [
                fmt_sig9(r.density_per_km2),
                r.policy.as_str().to_string(),
                r.jain.map_or_else(String::new, fmt_sig9),
                fmt_sig9(r.mean_throughput_bps / 1e9),
            ]
        }),
    )
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!("{:>14} {:<9} {:>12} {:>14}\n", "gnb_per_km2", "policy", "jain", "mean_gbps");
    for r in rows {
        out.push_str(&format!(
            "{:>14} {:<9} {:>12} {:>14}\n",
            fmt_sig9(r.density_per_km2),
            r.policy.as_str(),
            r.jain.map_or_else(|| "n/a".to_string(), fmt_sig9),
            fmt_sig9(r.mean_throughput_bps / 1e9)
        ));
    }
    out
}

/// Appends-style writers for per-trial dumps. Each holds an open CSV file.
pub struct TrialDumps {
    deployment: csv::Writer<fs::File>,
    links: csv::Writer<fs::File>,
    allocations: csv::Writer<fs::File>,
    dir: PathBuf,
}

impl TrialDumps {
    pub fn file_names() -> Vec<String> {
        [DEPLOYMENT_DUMP_FILE, LINK_DUMP_FILE, ALLOCATION_DUMP_FILE].map(String::from).to_vec()
    }

    pub fn create(dir: &Path) -> Result<Self, OutputError> {
        let mut deployment = csv_writer(&dir.join(DEPLOYMENT_DUMP_FILE))?;
        let mut links = csv_writer(&dir.join(LINK_DUMP_FILE))?;
        let mut allocations = csv_writer(&dir.join(ALLOCATION_DUMP_FILE))?;
        let e = csv_err(dir);
        deployment.write_record(["trial", "operator", "node_type", "x_m", "y_m", "z_m"]).map_err(&e)?;
        links
            .write_record(["trial", "operator", "gnb", "ue", "state", "pl_db", "sinr_db", "snr_db", "throughput_bps"])
            .map_err(&e)?;
        allocations.write_record(["trial", "policy", "operator", "load", "W_m_hz"]).map_err(&e)?;
        Ok(Self { deployment, links, allocations, dir: dir.to_path_buf() })
    }

    /// Dumps one trial. SINR, SNR and throughput are filled on the typical
    /// UE's serving link only, using the baseline allocation.
    pub fn write_trial(&mut self, outcome: &TrialOutcome) -> Result<(), OutputError> {
        let e = csv_err(&self.dir);
        let trial = outcome.record.trial_index.to_string();
        let dep = &outcome.deployment;
        let typ_ue = dep.typical_ue_index();
        for (op, nodes) in dep.operators.iter().enumerate() {
            for g in &nodes.gnbs {
                self.deployment
                    .write_record([&trial, &op.to_string(), "gnb", &fmt_sig9(g.x), &fmt_sig9(g.y), &fmt_sig9(g.z)])
                    .map_err(&e)?;
            }
            for (u, p) in nodes.ues.iter().enumerate() {
                let kind = if op == dep.typical_operator_index && u == typ_ue { "typical" } else { "ue" };
                self.deployment
                    .write_record([&trial, &op.to_string(), kind, &fmt_sig9(p.x), &fmt_sig9(p.y), &fmt_sig9(p.z)])
                    .map_err(&e)?;
            }
        }

        for links in &outcome.links {
            for l in links.records() {
                let typical_serving = l.operator_index == dep.typical_operator_index
                    && l.ue_index == typ_ue
                    && Some(l.gnb_index) == outcome.record.serving_gnb;
                let (sinr_db, snr_db, tput) = match (&outcome.baseline_sinr, typical_serving) {
                    (Some(s), true) => (
                        fmt_sig9(linear_to_db(s.sinr_linear)),
                        fmt_sig9(linear_to_db(s.snr_linear)),
                        fmt_sig9(outcome.record.throughput(Configuration::BaselineSinr)),
                    ),
                    _ => (String::new(), String::new(), String::new()),
                };
                let pl = if l.path_loss_db.is_finite() { fmt_sig9(l.path_loss_db) } else { "inf".to_string() };
                self.links
                    .write_record([
                        trial.clone(),
                        l.operator_index.to_string(),
                        l.gnb_index.to_string(),
                        l.ue_index.to_string(),
                        l.state.as_str().to_string(),
                        pl,
                        sinr_db,
                        snr_db,
                        tput,
                    ])
                    .map_err(&e)?;
            }
        }

        for alloc in [&outcome.baseline, &outcome.dynamic] {
            for (op, w) in alloc.bandwidth_hz.iter().enumerate() {
                let load = match alloc.policy {
                    Policy::Baseline => outcome.record.loads[op],
                    Policy::Dynamic => alloc.loads[op],
                };
                self.allocations
                    .write_record([trial.clone(), alloc.policy.as_str().to_string(), op.to_string(), load.to_string(), fmt_sig9(*w)])
                    .map_err(&e)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), OutputError> {
        let dir = self.dir.clone();
        for w in [&mut self.deployment, &mut self.links, &mut self.allocations] {
            w.flush().map_err(io_err(&dir))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_campaign_with, simulate_trial, LoadRule};
    use crate::scenario::validate_config;

    fn campaign() -> CampaignResult {
        let s = validate_config(ScenarioConfig { num_trials: 12, area_side_m: 400.0, ..Default::default() }).unwrap();
        run_campaign_with(&s, Some(2), &LoadRule::TypicalGnb).unwrap()
    }

    #[test]
    fn summary_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let r = campaign();
        let files = write_campaign(dir.path(), &r, false).unwrap();
        assert_eq!(files.len(), 5);
        let back = read_summary(&dir.path().join(RESULTS_FILE)).unwrap();
        assert_eq!(back, CampaignSummary::from_result(&r));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let r = campaign();
        write_campaign(dir.path(), &r, false).unwrap();
        let before = fs::read(dir.path().join(RESULTS_FILE)).unwrap();
        assert!(matches!(write_campaign(dir.path(), &r, false), Err(OutputError::Exists(_))));
        assert_eq!(before, fs::read(dir.path().join(RESULTS_FILE)).unwrap());
        write_campaign(dir.path(), &r, true).unwrap();
    }

    #[test]
    fn cdf_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let r = campaign();
        write_campaign(dir.path(), &r, false).unwrap();
        let text = fs::read_to_string(dir.path().join("dynamic_snr.csv")).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("throughput_bps,cdf"));
        assert_eq!(lines.count(), 12);
        assert!(text.trim_end().ends_with(",1"));
    }

    #[test]
    fn table_matches_file_values() {
        let r = campaign();
        let s = CampaignSummary::from_result(&r);
        let table = s.table();
        for c in &s.configurations {
            assert!(table.contains(&fmt_sig9(c.mean_throughput_bps)));
        }
    }

    #[test]
    fn dumps_have_expected_headers() {
        let dir = tempfile::tempdir().unwrap();
        let s = validate_config(ScenarioConfig { area_side_m: 300.0, ..Default::default() }).unwrap();
        let o = simulate_trial(&s, 0, &LoadRule::TypicalGnb).unwrap();
        let mut d = TrialDumps::create(dir.path()).unwrap();
        d.write_trial(&o).unwrap();
        d.finish().unwrap();
        let dep = fs::read_to_string(dir.path().join(DEPLOYMENT_DUMP_FILE)).unwrap();
        assert!(dep.starts_with("trial,operator,node_type,x_m,y_m,z_m\n"));
        assert_eq!(dep.matches(",typical,").count(), 1);
        let alloc = fs::read_to_string(dir.path().join(ALLOCATION_DUMP_FILE)).unwrap();
        assert_eq!(alloc.lines().count(), 1 + 2 * 5);
        let links = fs::read_to_string(dir.path().join(LINK_DUMP_FILE)).unwrap();
        let expected: usize = o.links.iter().map(|l| l.records().len()).sum();
        assert_eq!(links.lines().count(), 1 + expected);
    }
}
