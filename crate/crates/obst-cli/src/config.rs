//! Experiment configuration: a flat, JSON-compatible key-value structure.
//! Every field can come from a config file and be overridden by CLI flags;
//! the full configuration is echoed into every output file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("config error at {field}: {msg}")]
    Config { field: String, msg: String },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 0 ok, 1 config error, 2 invariant violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub const SCENARIOS: &[&str] = &[
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "custom",
];

/// All knobs of one experiment. `m` defaults to `n^2` capped at
/// `max_requests`; `sample_every` defaults to `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: String,
    /// Guest graph family: "bt" | "rnd" | "bad2" | "edge-list".
    pub guest: String,
    pub edge_list_path: Option<String>,
    pub bt_swarm_size: usize,
    pub bt_swarms_per_peer: usize,
    /// Number of trees whose union forms the "rnd" guest graph.
    pub rnd_k: usize,
    /// Request generator: "match" | "rw" | "uniform-edges".
    pub seq: String,
    /// Repeat probability of the random walk generator.
    pub p_repeat: f64,
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub m: Option<usize>,
    pub max_requests: usize,
    pub adjust: bool,
    pub adjust_every: usize,
    pub lambda_values: Vec<usize>,
    pub removal_fractions: Vec<f64>,
    pub sample_every: Option<usize>,
    pub seeds: Vec<u64>,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "custom".into(),
            guest: "rnd".into(),
            edge_list_path: None,
            bt_swarm_size: 32,
            bt_swarms_per_peer: 2,
            rnd_k: 16,
            seq: "match".into(),
            p_repeat: 0.5,
            n_values: vec![256],
            k_values: vec![1, 2, 4, 8, 16, 32],
            m: None,
            max_requests: 1_000_000,
            adjust: true,
            adjust_every: 1,
            lambda_values: vec![0],
            removal_fractions: (0..10).map(|i| i as f64 / 20.0).collect(),
            sample_every: None,
            seeds: vec![1, 2, 3, 4, 5],
            out_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    /// The defaults of a named scenario preset.
    pub fn preset(scenario: &str) -> Result<ExperimentConfig, CliError> {
        if !SCENARIOS.contains(&scenario) {
            return Err(CliError::config(
                "scenario",
                format!("unknown scenario {scenario:?}; expected one of {SCENARIOS:?}"),
            ));
        }
        let mut cfg = ExperimentConfig {
            scenario: scenario.to_string(),
            ..ExperimentConfig::default()
        };
        match scenario {
            // routing cost as a function of k and n, per guest family
            "fig3" => {
                cfg.n_values = vec![128, 256, 512];
            }
            // the two-tree separation: one vs two trees on the adversarial demand
            "fig4" => {
                cfg.guest = "bad2".into();
                cfg.seq = "uniform-edges".into();
                cfg.n_values = vec![64, 128, 256, 512, 1024];
                cfg.k_values = vec![1, 2];
                cfg.seeds = vec![1, 2, 3];
            }
            // request patterns compared at fixed n
            "fig5" => {
                cfg.guest = "bt".into();
                cfg.k_values = vec![1, 4, 32];
            }
            // diameter and min cut over time (ten repetitions)
            "fig6" => {
                cfg.k_values = vec![16];
                cfg.seeds = (1..=10).collect();
            }
            // diameter as a function of network size, per pattern
            "fig7" => {
                cfg.n_values = vec![64, 128, 256, 512];
                cfg.k_values = vec![16];
                cfg.seeds = vec![1, 2, 3];
            }
            // convergence traces for a few representative runs
            "fig8" => {
                cfg.n_values = vec![512];
                cfg.k_values = vec![16];
                cfg.seeds = vec![1, 2, 3];
            }
            // failure robustness sweep
            "fig9" => {
                cfg.k_values = vec![16];
                cfg.seeds = vec![1, 2, 3];
            }
            // churn sweep over lambda
            "fig10" => {
                cfg.n_values = vec![128];
                cfg.k_values = vec![16];
                cfg.lambda_values = vec![0, 1, 2, 4, 8];
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Parses the flat JSON config format.
    pub fn from_json(text: &str) -> Result<ExperimentConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config("<config file>", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Effective request count for one run at network size `n`.
    pub fn effective_m(&self, n: usize) -> usize {
        self.m.unwrap_or(n * n).min(self.max_requests)
    }

    pub fn effective_sample_every(&self, n: usize) -> usize {
        self.sample_every.unwrap_or(n).max(1)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !SCENARIOS.contains(&self.scenario.as_str()) {
            return Err(CliError::config(
                "scenario",
                format!("unknown scenario {:?}", self.scenario),
            ));
        }
        match self.guest.as_str() {
            "bt" | "rnd" | "bad2" => {}
            "edge-list" => {
                if self.edge_list_path.is_none() {
                    return Err(CliError::config(
                        "edge_list_path",
                        "required when guest = \"edge-list\"",
                    ));
                }
            }
            other => {
                return Err(CliError::config(
                    "guest",
                    format!("unknown guest {other:?}; expected bt | rnd | bad2 | edge-list"),
                ))
            }
        }
        match self.seq.as_str() {
            "match" | "rw" | "uniform-edges" => {}
            other => {
                return Err(CliError::config(
                    "seq",
                    format!("unknown generator {other:?}; expected match | rw | uniform-edges"),
                ))
            }
        }
        if !(0.0..=1.0).contains(&self.p_repeat) {
            return Err(CliError::config("p_repeat", "must be within [0, 1]"));
        }
        for (field, empty) in [
            ("n_values", self.n_values.is_empty()),
            ("k_values", self.k_values.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("lambda_values", self.lambda_values.is_empty()),
        ] {
            if empty {
                return Err(CliError::config(field, "must not be empty"));
            }
        }
        if self.n_values.contains(&0) {
            return Err(CliError::config("n_values", "network sizes must be positive"));
        }
        if self.k_values.contains(&0) {
            return Err(CliError::config("k_values", "tree counts must be positive"));
        }
        if self.guest == "bad2" {
            if let Some(&n) = self.n_values.iter().find(|&&n| n < 4 || n % 4 != 0) {
                return Err(CliError::config(
                    "n_values",
                    format!("bad2 needs n divisible by 4, got {n}"),
                ));
            }
        }
        if self.bt_swarm_size < 2 {
            return Err(CliError::config("bt_swarm_size", "must be at least 2"));
        }
        if self.bt_swarms_per_peer == 0 {
            return Err(CliError::config("bt_swarms_per_peer", "must be at least 1"));
        }
        if self.adjust_every == 0 {
            return Err(CliError::config("adjust_every", "must be at least 1"));
        }
        if self.max_requests == 0 {
            return Err(CliError::config("max_requests", "must be positive"));
        }
        for &f in &self.removal_fractions {
            if !(0.0..1.0).contains(&f) {
                return Err(CliError::config(
                    "removal_fractions",
                    format!("fraction {f} outside [0, 1)"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in SCENARIOS {
            ExperimentConfig::preset(s).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("fig99").is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let cfg = ExperimentConfig::preset("fig4").unwrap();
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(ExperimentConfig::from_json("{\"bogus_field\": 1}").is_err());
    }

    #[test]
    fn m_defaults_to_n_squared_with_cap() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.effective_m(100), 10_000);
        assert_eq!(cfg.effective_m(2000), 1_000_000);
        let cfg = ExperimentConfig {
            m: Some(42),
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.effective_m(100), 42);
    }

    #[test]
    fn validation_reports_field_paths() {
        let cfg = ExperimentConfig {
            guest: "nope".into(),
            ..ExperimentConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("guest"));
        assert_eq!(err.exit_code(), 1);
    }
}
