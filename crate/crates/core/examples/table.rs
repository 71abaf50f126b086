//! Prints fairness and mean throughput per gNB density.
//!
//! `cargo run --release --example table -- 2000 '{"ue_density_per_km2": 300}'`
//! (trial count and JSON overrides optional).

use mmshare::harness::density_sweep;
use mmshare::output::sweep_table;
use mmshare::scenario::{validate_config, ScenarioConfig};

fn main() {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let mut cfg = ScenarioConfig { num_trials: trials, ..ScenarioConfig::default() };
    if let Some(json) = std::env::args().nth(2) {
        let mut v = serde_json::to_value(&cfg).unwrap();
        let patch: serde_json::Value = serde_json::from_str(&json).expect("JSON object patch");
        for (k, val) in patch.as_object().expect("object") {
            v[k] = val.clone();
        }
        cfg = serde_json::from_value(v).expect("patched config");
    }
    let scenario = validate_config(cfg).expect("valid scenario");
    let t0 = std::time::Instant::now();
    let rows = density_sweep(&scenario, &[50.0, 75.0, 100.0], None).expect("sweep runs");
    print!("{}", sweep_table(&rows));
    eprintln!("{trials} trials per density in {:.1?}", t0.elapsed());
}
