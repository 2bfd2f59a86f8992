//! Run configuration: a JSON file of hyperparameters, with the base seed
//! propagated into every component. The resolved configuration and the
//! command line are written next to each command's outputs.

use std::path::Path;

use lenp::bias::BiasConfig;
use lenp::blackbox::ForestConfig;
use lenp::experiment::{corpus_train_config, CorpusSetup, EvalConfig};
use lenp::explain::GlobalConfig;
use lenp::neural::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::output::{read_json, write_json};
use crate::{CliError, CliResult, Command};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusSetup,
    /// Network trained directly on the labels.
    pub train: TrainConfig,
    /// Network distilled from the forest in black-box mode.
    pub distill: TrainConfig,
    pub forest: ForestConfig,
    pub global: GlobalConfig,
    pub eval: EvalConfig,
    pub bias: BiasConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            corpus: CorpusSetup::default(),
            train: TrainConfig::default(),
            distill: corpus_train_config(),
            forest: ForestConfig::default(),
            global: GlobalConfig::default(),
            eval: EvalConfig::default(),
            bias: BiasConfig::default(),
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid by `path` if given; `seed` (flag or environment)
    /// beats the file's seed. The seed is then copied into every component.
    pub fn resolve(path: Option<&Path>, seed: Option<u64>) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                // accept a bare configuration or a captured `config.json`
                let mut v: serde_json::Value = read_json(p)?;
                if v.get("command").is_some() {
                    if let Some(inner) = v.get_mut("config").map(serde_json::Value::take) {
                        v = inner;
                    }
                }
                serde_json::from_value(v).map_err(|source| CliError::Json { path: p.to_path_buf(), source })?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.apply_seed();
        Ok(cfg)
    }

    fn apply_seed(&mut self) {
        let s = self.seed;
        self.corpus.corpus_seed = s;
        self.corpus.split_seed = s;
        self.train.seed = s;
        self.distill.seed = s;
        self.forest.seed = s;
        self.eval.seed = s;
    }
}

#[derive(Serialize)]
struct Captured<'a> {
    command: &'a Command,
    config: &'a RunConfig,
}

/// Writes `name` into `dir`: the command with its arguments and the fully
/// resolved configuration. Re-running with `--config` on this file and the
/// same arguments reproduces the outputs.
pub fn capture(dir: &Path, name: &str, command: &Command, config: &RunConfig) -> CliResult<()> {
    write_json(&dir.join(name), &Captured { command, config })
}
