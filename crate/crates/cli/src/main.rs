//! `mmshare` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use mmshare::antenna::{pattern_grid, AngleRange, ArrayGeometry, Direction, ElementPattern};
use mmshare::harness::{density_sweep, run_campaign_with, simulate_trial, LoadRule};
use mmshare::numeric::fmt_sig9;
use mmshare::output::{
    check_writable, sweep_table, write_campaign, write_csv, write_sweep, CampaignSummary, OutputError, TrialDumps,
    PATTERN_FILE, SWEEP_FILE,
};
use mmshare::scenario::{validate_config, ScenarioConfig, ValidatedScenario};

#[derive(Debug, Parser)]
#[command(name = "mmshare", version, about = "Monte Carlo evaluation of mmWave spectrum sharing between operators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON scenario file; omitted fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Master seed override.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Trial count override.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<u64>,
    /// Worker threads (default: number of processors). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Override one config field, e.g. `--set tx_power_dbm=40` or
    /// `--set channel.los.sigma_db=4`. Values are parsed as JSON, else taken
    /// as a string.
    #[arg(long = "set", global = true, value_name = "K=V")]
    overrides: Vec<String>,
    /// Overwrite existing result files.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one campaign: results.json plus one CDF file per configuration.
    Run {
        /// Also dump deployments, links and allocations of the first N trials.
        #[arg(long, value_name = "N")]
        dump_trials: Option<u64>,
    },
    /// Run one campaign per gNB density and write a fairness/throughput table.
    Sweep {
        /// Comma-separated gNB densities per operator, per km².
        #[arg(long, value_name = "LIST", default_value = "50,75,100")]
        densities: String,
    },
    /// Export the beamformed gain of one array over an angle grid.
    Pattern {
        #[arg(long, value_enum, default_value_t = Side::Gnb)]
        array: Side,
        /// Azimuth grid in degrees, MIN:MAX:STEP.
        #[arg(long, value_name = "MIN:MAX:STEP", default_value = "-180:180:1", allow_hyphen_values = true)]
        phi: String,
        /// Zenith grid in degrees, MIN:MAX:STEP.
        #[arg(long, value_name = "MIN:MAX:STEP", default_value = "0:180:1")]
        theta: String,
        /// Use isotropic elements instead of the 3GPP element pattern.
        #[arg(long)]
        isotropic: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    Gnb,
    Ue,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {source}")]
    ConfigParse { path: PathBuf, source: serde_json::Error },
    #[error("--set {0}: expected KEY=VALUE")]
    BadOverride(String),
    #[error("--set {key}: {reason}")]
    OverrideTarget { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad density list {0:?}: expected comma-separated positive numbers")]
    BadDensityList(String),
    #[error("bad angle grid {0:?}: {1}")]
    BadGrid(String, String),
    #[error("--dump-trials {requested} exceeds the trial count {trials}")]
    BadDumpCount { requested: u64, trials: u64 },
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(OutputError::Harness(_)) => 1,
            CliError::Output(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage mistakes count as configuration errors; 2 is for I/O
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let scenario = load_scenario(&cli.common)?;
    let out = &cli.common.out;
    let workers = cli.common.workers;
    match cli.command {
        Command::Run { dump_trials } => cmd_run(&scenario, out, workers, cli.common.force, dump_trials),
        Command::Sweep { densities } => cmd_sweep(&scenario, out, workers, cli.common.force, &densities),
        Command::Pattern { array, phi, theta, isotropic } => {
            cmd_pattern(&scenario, out, cli.common.force, array, &phi, &theta, isotropic)
        }
    }
}

/// Defaults ← config file ← `--set` overrides ← `--seed`/`--trials`, then
/// validation. Nested objects merge key by key, so a partial `channel` block
/// keeps the remaining defaults.
fn load_scenario(common: &Common) -> Result<ValidatedScenario, CliError> {
    let mut value = serde_json::to_value(ScenarioConfig::default()).expect("defaults serialize");
    let file = match &common.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|source| CliError::ConfigRead { path: path.clone(), source })?;
            serde_json::from_str::<Value>(&text)
                .map_err(|source| CliError::ConfigParse { path: path.clone(), source })?
        }
        None => Value::Object(Default::default()),
    };
    merge(&mut value, file);
    for o in &common.overrides {
        apply_override(&mut value, o)?;
    }
    let source = common.config.clone().unwrap_or_else(|| PathBuf::from("<defaults>"));
    let mut cfg: ScenarioConfig =
        serde_json::from_value(value).map_err(|source_err| CliError::ConfigParse { path: source, source: source_err })?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.num_trials = trials;
    }
    validate_config(cfg).map_err(|e| CliError::Config(e.to_string()))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets a dotted key inside a JSON object, creating intermediate objects.
fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::BadOverride(spec.to_string()));
    }
    let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| CliError::OverrideTarget {
            key: key.to_string(),
            reason: format!("{} is not an object", parts[..i].join(".")),
        })?;
        if i + 1 == parts.len() {
            match obj.get_mut(*part) {
                Some(slot) => merge(slot, parsed),
                None => {
                    obj.insert(part.to_string(), parsed);
                }
            }
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("key has at least one part")
}

fn cmd_run(
    scenario: &ValidatedScenario,
    out: &Path,
    workers: Option<usize>,
    force: bool,
    dump_trials: Option<u64>,
) -> Result<(), CliError> {
    if let Some(n) = dump_trials {
        if n > scenario.num_trials {
            return Err(CliError::BadDumpCount { requested: n, trials: scenario.num_trials });
        }
        create_dir(out)?;
        check_writable(out, &TrialDumps::file_names(), force)?;
    }
    let result = run_campaign_with(scenario, workers, &LoadRule::TypicalGnb).map_err(OutputError::from)?;
    write_campaign(out, &result, force)?;

    if let Some(n) = dump_trials {
        let mut dumps = TrialDumps::create(out)?;
        for k in 0..n {
            let outcome = simulate_trial(scenario, k, &LoadRule::TypicalGnb).map_err(OutputError::from)?;
            dumps.write_trial(&outcome)?;
        }
        dumps.finish()?;
    }
    print!("{}", CampaignSummary::from_result(&result).table());
    Ok(())
}

fn cmd_sweep(
    scenario: &ValidatedScenario,
    out: &Path,
    workers: Option<usize>,
    force: bool,
    list: &str,
) -> Result<(), CliError> {
    let densities = parse_densities(list)?;
    create_dir(out)?;
    check_writable(out, &[SWEEP_FILE.to_string()], force)?;
    let rows = density_sweep(scenario, &densities, workers).map_err(OutputError::from)?;
    write_sweep(&out.join(SWEEP_FILE), &rows)?;
    print!("{}", sweep_table(&rows));
    Ok(())
}

fn parse_densities(list: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::BadDensityList(list.to_string());
    if list.trim().is_empty() {
        return Err(bad());
    }
    list.split(',')
        .map(|s| match s.trim().parse::<f64>() {
            Ok(d) if d > 0.0 && d.is_finite() => Ok(d),
            _ => Err(bad()),
        })
        .collect()
}

fn parse_range(spec: &str, lo: f64, hi: f64) -> Result<AngleRange, CliError> {
    let bad = |why: &str| CliError::BadGrid(spec.to_string(), why.to_string());
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(bad("expected MIN:MAX:STEP"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let r = AngleRange { start: num(start)?, stop: num(stop)?, step: num(step)? };
    if !(r.step > 0.0) || !r.step.is_finite() {
        return Err(bad("step must be positive"));
    }
    if !(r.start >= lo && r.stop <= hi && r.start <= r.stop) {
        return Err(bad(&format!("bounds must satisfy {lo} <= MIN <= MAX <= {hi}")));
    }
    Ok(r)
}

fn cmd_pattern(
    scenario: &ValidatedScenario,
    out: &Path,
    force: bool,
    side: Side,
    phi: &str,
    theta: &str,
    isotropic: bool,
) -> Result<(), CliError> {
    let phi = parse_range(phi, -180.0, 180.0)?;
    let theta = parse_range(theta, 0.0, 180.0)?;
    let (shape, element) = match side {
        Side::Gnb => (scenario.gnb_array, ElementPattern::ThreeGpp),
        Side::Ue if scenario.ue_isotropic => (scenario.ue_array, ElementPattern::Isotropic),
        Side::Ue => (scenario.ue_array, ElementPattern::ThreeGpp),
    };
    let element = if isotropic { ElementPattern::Isotropic } else { element };
    let geom = ArrayGeometry::new(shape.rows(), shape.cols(), 0.0, element);
    let points = pattern_grid(&geom, Direction::BROADSIDE, phi, theta)
        .map_err(|e| CliError::BadGrid(format!("{phi:?} x {theta:?}"), e.to_string()))?;

    create_dir(out)?;
    check_writable(out, &[PATTERN_FILE.to_string()], force)?;
    let path = out.join(PATTERN_FILE);
    write_csv(
        &path,
        &["phi_deg", "theta_deg", "gain_db"],
        points.iter().map(|p| [fmt_sig9(p.phi_deg), fmt_sig9(p.theta_deg), fmt_sig9(p.gain_db)]),
    )?;
    let peak = points.iter().map(|p| p.gain_db).fold(f64::NEG_INFINITY, f64::max);
    println!("{} points, peak gain {} dB -> {}", points.len(), fmt_sig9(peak), path.display());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|source| CliError::Output(OutputError::Io { path: dir.to_path_buf(), source }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn override_parses_json_then_string() {
        let mut v = json!({});
        apply_override(&mut v, "tx_power_dbm=40").unwrap();
        apply_override(&mut v, "gnb_array=[4,4]").unwrap();
        apply_override(&mut v, "channel.los.sigma_db=4.5").unwrap();
        apply_override(&mut v, "name=abc").unwrap();
        assert_eq!(
            v,
            json!({"tx_power_dbm": 40, "gnb_array": [4, 4], "channel": {"los": {"sigma_db": 4.5}}, "name": "abc"})
        );
    }

    #[test]
    fn partial_nested_objects_keep_defaults() {
        let mut v = serde_json::to_value(ScenarioConfig::default()).unwrap();
        merge(&mut v, json!({"channel": {"nlos": {"alpha": 70.0}}}));
        apply_override(&mut v, "channel.los.sigma_db=4").unwrap();
        let cfg: ScenarioConfig = serde_json::from_value(v).unwrap();
        let d = ScenarioConfig::default();
        assert_eq!(cfg.channel.nlos.alpha, 70.0);
        assert_eq!(cfg.channel.nlos.beta, d.channel.nlos.beta);
        assert_eq!(cfg.channel.los.sigma_db, 4.0);
        assert_eq!(cfg.channel.los.alpha, d.channel.los.alpha);
    }

    #[test]
    fn override_rejects_malformed() {
        let mut v = json!({"a": 1});
        assert!(matches!(apply_override(&mut v, "novalue"), Err(CliError::BadOverride(_))));
        assert!(matches!(apply_override(&mut v, "=3"), Err(CliError::BadOverride(_))));
        assert!(matches!(apply_override(&mut v, "a.b=3"), Err(CliError::OverrideTarget { .. })));
    }

    #[test]
    fn density_lists() {
        assert_eq!(parse_densities("50,75,100").unwrap(), vec![50.0, 75.0, 100.0]);
        assert_eq!(parse_densities(" 75 , 75").unwrap(), vec![75.0, 75.0]);
        for bad in ["", " ", "50,,75", "-1", "0", "abc", "nan", "inf"] {
            assert!(matches!(parse_densities(bad), Err(CliError::BadDensityList(_))), "{bad}");
        }
    }

    #[test]
    fn angle_ranges() {
        let r = parse_range("-90:90:45", -180.0, 180.0).unwrap();
        assert_eq!(r.values(), vec![-90.0, -45.0, 0.0, 45.0, 90.0]);
        for bad in ["0:10", "0:10:0", "10:0:1", "0:200:1", "a:b:c", "-5:10:1"] {
            assert!(parse_range(bad, 0.0, 180.0).is_err(), "{bad}");
        }
    }
}
