//! A JSON-configured grid of Monte Carlo runs next to the analytical bounds.

use coded_caching::config::{sweep, ExperimentConfig};

const CONFIG: &str = r#"{
    "n": 4, "m": 8, "M": 2, "L": 1, "B": 8,
    "alpha": 0.8, "seed": 42, "trials": 40, "mode": "iid",
    "sweep": {
        "schemes": ["up", "rlfu"],
        "run": "both",
        "grid": {"M": [1, 2, "7/2"], "L": [1, 2]}
    }
}"#;

fn main() -> coded_caching::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    print!("{}", sweep(&cfg)?);
    Ok(())
}
