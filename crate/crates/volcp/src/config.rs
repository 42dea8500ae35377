//! Run configuration shared by the command-line tools.
//!
//! A config can come from a JSON file (all fields optional, unknown fields
//! rejected), from command-line flags, or both, with flags overriding file
//! values. The effective config is echoed next to every output so a run
//! can be reproduced from its artifacts alone.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::filter::{FilterConfig, HazardModel};
use crate::ingest::MissingPolicy;
use crate::model::Hyperparams;
use crate::{Error, Result};

/// All knobs of a filtering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Per-step change probability of the built-in gap distribution.
    pub hazard_p: f64,
    /// Noise-variance prior shape.
    pub a: f64,
    /// Noise-variance prior scale.
    pub b: f64,
    /// Prior scale multiplier for the segment mean.
    pub delta0: f64,
    /// Prior scale multiplier for the AR coefficient.
    pub delta1: f64,
    /// Maximum number of support atoms kept per step.
    pub max_support: usize,
    /// Whether segments carry a mean term.
    pub include_mu: bool,
    /// How missing price cells are handled.
    pub missing_policy: MissingPolicy,
    /// Worker threads for multi-series commands; 0 picks automatically.
    pub threads: usize,
    /// Seed for synthetic data generation.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hazard_p: 0.02,
            a: 5e-4,
            b: 5e-4,
            delta0: 10.0,
            delta1: 0.02,
            max_support: 100,
            include_mu: true,
            missing_policy: MissingPolicy::Error,
            threads: 0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        // Constructing the model objects runs their range checks.
        self.filter_config()?;
        Ok(())
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Hyperparams::new(self.a, self.b, self.delta0, self.delta1, self.include_mu)
    }

    pub fn hazard(&self) -> Result<HazardModel> {
        HazardModel::shifted_geometric(self.hazard_p)
    }

    pub fn filter_config(&self) -> Result<FilterConfig> {
        FilterConfig::new(self.hyperparams()?, self.hazard()?, self.max_support)
    }

    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_reader(r)
            .map_err(|e| Error::input(format!("bad config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| Error::input(format!("config encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }
}
