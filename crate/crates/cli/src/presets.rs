//! Named reproductions. A preset is a base configuration; a config file and
//! command-line flags are layered on top of it.

use anyhow::{bail, Result};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::run::{fig2_checks, run_learn, run_pipeline, run_teacher, Artifacts};

pub const NAMES: [&str; 4] = ["fig2", "fig3", "learn13", "pipeline6"];

/// Base configuration of preset `name` as JSON.
pub fn base(name: &str) -> Result<Value> {
    Ok(match name {
        // Six-neuron ring with unequal couplings.
        "fig2" => json!({
            "graph": {"teacher": [1, 2, 3, 4, 5, 6]},
            "dynamics": {"alpha": [0.6, 0.5, 0.7, 0.1, 0.8, 0.3], "x0": [0.3, 0.2, 0.1, 0.4, 0.5, 0.6]},
        }),
        // Three neurons, durations learned from couplings outside the WLC range.
        "fig3" => json!({
            "graph": {"teacher": [1, 3, 2]},
            "dynamics": {"alpha": [0.2, 0.6, 0.8], "x0": [0.3, 0.5, 0.2]},
            "learning": {"mode": "durations", "gamma0": [1.6, 0.1, 2.3], "y0": [0.2, 0.3, 0.6], "periods": 12.0},
        }),
        // Thirteen neurons, graph learning from a random start.
        "learn13" => json!({
            "graph": {"n": 13},
            "learning": {"mode": "structure"},
        }),
        // Six motor motifs with prescribed durations, robot paths and distance trace.
        "pipeline6" => json!({
            "graph": {"teacher": [1, 3, 6, 4, 2, 5]},
            "dynamics": {"durations": [7.0, 7.1, 4.1, 4.1, 9.4, 11.0]},
            "learning": {"mode": "behavior", "periods": 10.0},
            "motifsim": {"library": "six", "time_scale": 3.0},
        }),
        other => bail!(
            "unknown preset {other:?}; known presets: {}",
            NAMES.join(", ")
        ),
    })
}

/// Deep merge: objects merge key by key, anything else is replaced.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

pub fn run(name: &str, cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    match name {
        "fig2" => {
            let report = run_teacher(cfg, art)?;
            fig2_checks(art, cfg, &report)
        }
        "fig3" | "learn13" => run_learn(cfg, art),
        "pipeline6" => run_pipeline(cfg, art),
        other => bail!(
            "unknown preset {other:?}; known presets: {}",
            NAMES.join(", ")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_yields_a_valid_config() {
        for name in NAMES {
            let cfg: ExperimentConfig = serde_json::from_value(base(name).unwrap()).unwrap();
            cfg.validate().unwrap();
        }
        assert!(base("fig9").is_err());
    }

    #[test]
    fn merge_overrides_leaves_and_keeps_siblings() {
        let mut v = base("fig3").unwrap();
        merge(&mut v, json!({"learning": {"periods": 3.0}, "seed": 5}));
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.learning.periods, 3.0);
        assert_eq!(cfg.learning.gamma0, Some(vec![1.6, 0.1, 2.3]));
        assert_eq!(cfg.seed, 5);
    }
}
