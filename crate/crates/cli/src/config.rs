//! Run configuration: defaults, file loading (TOML or JSON), and the
//! resolved form serialized next to every command's outputs.

use crate::{CliError, CliResult};
use bgsl_core::hmc::HmcConfig;
use bgsl_core::prior::PriorTriple;
use bgsl_core::scaling::FitForm;
use bgsl_core::synth::{EnsembleSpec, InputKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// Unrolling depth used for fitting, evaluation, and checks.
    pub depth: usize,
    pub out: PathBuf,
    pub prior: PriorChoice,
    pub hmc: HmcSettings,
    pub gen: Option<GenSettings>,
    pub fit: Option<FitSettings>,
    pub eval: Option<EvalSettings>,
    pub check: Option<CheckSettings>,
    pub sweep: Option<SweepSettings>,
    pub scale: Option<ScaleSettings>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            depth: 200,
            out: PathBuf::from("out"),
            prior: PriorChoice::default(),
            hmc: HmcSettings::default(),
            gen: None,
            fit: None,
            eval: None,
            check: None,
            sweep: None,
            scale: None,
        }
    }
}

impl RunConfig {
    pub fn hmc_config(&self) -> HmcConfig {
        HmcConfig {
            n_chains: self.hmc.chains,
            n_warmup: self.hmc.warmup,
            n_samples: self.hmc.samples,
            target_accept: self.hmc.target_accept,
            leapfrog_steps: self.hmc.leapfrog,
            seed: self.seed,
        }
    }

    /// Load from TOML or JSON, deciding by content.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Sampler settings (the seed lives at the top level).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcSettings {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub target_accept: f64,
    pub leapfrog: usize,
}

impl Default for HmcSettings {
    fn default() -> Self {
        let d = HmcConfig::default();
        HmcSettings {
            chains: d.n_chains,
            warmup: d.n_warmup,
            samples: d.n_samples,
            target_accept: d.target_accept,
            leapfrog: d.leapfrog_steps,
        }
    }
}

/// Named prior presets, or a fully custom triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorChoice {
    Named(String),
    Custom(PriorTriple),
}

impl Default for PriorChoice {
    fn default() -> Self {
        PriorChoice::Named("altered".into())
    }
}

impl PriorChoice {
    pub fn resolve(&self) -> CliResult<PriorTriple> {
        let triple = match self {
            PriorChoice::Named(name) => match name.as_str() {
                "altered" => PriorTriple::altered(),
                "original" => PriorTriple::original(),
                "uninformative" => PriorTriple::uninformative(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown prior preset '{other}' (expected altered, original, or uninformative)"
                    )))
                }
            },
            PriorChoice::Custom(t) => *t,
        };
        triple.validate()?;
        Ok(triple)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenSettings {
    pub ensemble: EnsembleSpec,
    pub train_t: usize,
    pub test_t: usize,
    pub input: InputKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSettings {
    pub train: PathBuf,
    #[serde(default)]
    pub map: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSettings {
    pub posterior: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CheckStage {
    Prior,
    Posterior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSettings {
    pub data: PathBuf,
    pub stage: CheckStage,
    pub replicates: usize,
    /// How many held-out inputs feed the replicated datasets.
    pub n_inputs: usize,
    pub posterior: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSettings {
    pub data: PathBuf,
    pub n_inputs: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub grid_points: usize,
}

impl SweepSettings {
    /// Log-spaced grid from `theta_lo` to `theta_hi` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let k = self.grid_points.max(2);
        let (lo, hi) = (self.theta_lo.ln(), self.theta_hi.ln());
        (0..k)
            .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSettings {
    pub anchor_n: usize,
    pub anchor_theta: f64,
    pub anchor_delta: f64,
    pub targets: Vec<usize>,
    pub fit_form: Option<FitForm>,
    pub fit_points: Option<PathBuf>,
}
