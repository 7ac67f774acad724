//! Pipeline orchestration behind the `bgsl` binary: dataset generation,
//! posterior fitting, evaluation, predictive checks, θ sweeps, and size
//! scaling, all reproducible from a serialized run configuration.

pub mod config;

use bgsl_core::checks::{posterior_predictive_check, prior_predictive_check};
use bgsl_core::dataset::Dataset;
use bgsl_core::graph::EdgeVector;
use bgsl_core::hmc::{fit_posterior, PosteriorSamples};
use bgsl_core::posterior::{map_estimate, MapConfig, PosteriorDensity};
use bgsl_core::predict::{evaluate_dataset, reliability_to_csv};
use bgsl_core::scaling::{fit_trend, scale_table_csv, ScaleAnchor};
use bgsl_core::solver::{sweep_to_csv, theta_sweep, SolveConfig};
use bgsl_core::synth::make_dataset;
use bgsl_core::unroll::UnrollConfig;
use config::{CheckStage, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("sampler: {0}")]
    Sampler(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 config, 3 sampler failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sampler(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<bgsl_core::Error> for CliError {
    fn from(e: bgsl_core::Error) -> Self {
        use bgsl_core::Error::*;
        match e {
            SamplerFailure(_) | Divergence { .. } => CliError::Sampler(e.to_string()),
            Io { .. } | Json { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Persist the fully resolved configuration next to the outputs, so the run
/// can be reproduced from that file alone.
fn write_resolved_config(cfg: &RunConfig) -> CliResult<PathBuf> {
    let path = cfg.out.join("run_config.json");
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::Config(format!("serializing config: {e}")))?;
    write_file(&path, &text)?;
    Ok(path)
}

fn unroll_config(cfg: &RunConfig) -> UnrollConfig<f64> {
    UnrollConfig::with_depth(cfg.depth)
}

/// Generate train/test datasets.
pub fn cmd_gen(cfg: &RunConfig) -> CliResult<()> {
    let gen = cfg
        .gen
        .as_ref()
        .ok_or_else(|| CliError::Config("gen: missing [gen] settings".into()))?;
    gen.ensemble.validate()?;
    write_resolved_config(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = make_dataset(&gen.ensemble, gen.train_t, gen.input, &mut rng)?;
    let mut rng_test = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let test = make_dataset(&gen.ensemble, gen.test_t, gen.input, &mut rng_test)?;
    train.save(&cfg.out.join("train.json"))?;
    test.save(&cfg.out.join("test.json"))?;
    println!(
        "gen: wrote {} train and {} test pairs to {}",
        train.len(),
        test.len(),
        cfg.out.display()
    );
    Ok(())
}

/// Fit the posterior (or a MAP point estimate with `map = true`).
pub fn cmd_fit(cfg: &RunConfig) -> CliResult<()> {
    let fit = cfg
        .fit
        .as_ref()
        .ok_or_else(|| CliError::Config("fit: missing [fit] settings".into()))?;
    write_resolved_config(cfg)?;
    let data = Dataset::<f64>::load(&fit.train)?;
    let density = PosteriorDensity {
        data: &data,
        prior: cfg.prior.resolve()?,
        unroll: unroll_config(cfg),
    };
    if fit.map {
        let map = map_estimate(&density, &MapConfig::default(), None)?;
        #[derive(Serialize)]
        struct MapFile {
            theta: f64,
            delta: f64,
            b: f64,
            log_posterior: f64,
            steps: usize,
            grad_norm: f64,
        }
        let text = serde_json::to_string_pretty(&MapFile {
            theta: map.params[0],
            delta: map.params[1],
            b: map.params[2],
            log_posterior: map.log_posterior,
            steps: map.steps,
            grad_norm: map.grad_norm,
        })
        .expect("map serialization cannot fail");
        write_file(&cfg.out.join("map.json"), &text)?;
        println!(
            "fit: MAP estimate theta={:.4} delta={:.4} b={:.4}",
            map.params[0], map.params[1], map.params[2]
        );
        return Ok(());
    }
    let hmc = cfg.hmc_config();
    let samples = fit_posterior(&density, &hmc)?;
    samples.save(
        &cfg.out.join("posterior.csv"),
        &cfg.out.join("diagnostics.json"),
    )?;
    println!(
        "fit: {} draws; split R-hat (theta, delta, b) = ({:.3}, {:.3}, {:.3})",
        samples.len(),
        samples.diagnostics.theta.split_rhat,
        samples.diagnostics.delta.split_rhat,
        samples.diagnostics.b.split_rhat
    );
    Ok(())
}

/// Aggregated evaluation metrics for one test set.
#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub n_test: usize,
    pub mean_nll: f64,
    pub mean_brier: f64,
    pub mean_error_pct: f64,
    pub ece: f64,
    pub correlation: bgsl_core::predict::ErrorUncertaintyCorrelation,
    pub per_graph: Vec<bgsl_core::predict::PairMetrics>,
}

/// Evaluate a posterior on a test dataset (library form of `bgsl eval`):
/// metrics report plus reliability and per-edge CSVs.
pub fn evaluate_to_artifacts(
    samples: &PosteriorSamples,
    test: &Dataset<f64>,
    unroll: &UnrollConfig<f64>,
    seed: u64,
) -> CliResult<(MetricsReport, String, String)> {
    let eval = evaluate_dataset(samples, test, unroll, seed)?;
    let report = MetricsReport {
        n_test: eval.per_graph.len(),
        mean_nll: eval.mean_nll,
        mean_brier: eval.mean_brier,
        mean_error_pct: eval.mean_error_pct,
        ece: eval.ece,
        correlation: eval.correlation,
        per_graph: eval.per_graph.clone(),
    };
    let mut edges_csv = String::from("graph,edge,label,pred_mean,pred_stdv\n");
    for (k, (ev, (_, a))) in eval.pairs.iter().zip(test.pairs()).enumerate() {
        for (idx, &label) in a.values().iter().enumerate() {
            edges_csv.push_str(&format!(
                "{k},{idx},{label},{},{}\n",
                ev.pred_mean.values()[idx],
                ev.pred_stdv.values()[idx]
            ));
        }
    }
    Ok((report, reliability_to_csv(&eval.reliability), edges_csv))
}

/// Score a fitted posterior against a test set.
pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let eval = cfg
        .eval
        .as_ref()
        .ok_or_else(|| CliError::Config("eval: missing [eval] settings".into()))?;
    write_resolved_config(cfg)?;
    let samples = load_posterior(&eval.posterior)?;
    let test = Dataset::<f64>::load(&eval.test)?;
    let (report, reliability, edges) =
        evaluate_to_artifacts(&samples, &test, &unroll_config(cfg), cfg.seed)?;
    let text = serde_json::to_string_pretty(&report)
        .expect("metrics serialization cannot fail");
    write_file(&cfg.out.join("metrics.json"), &text)?;
    write_file(&cfg.out.join("reliability.csv"), &reliability)?;
    write_file(&cfg.out.join("edges.csv"), &edges)?;
    println!(
        "eval: NLL {:.3}, Brier {:.4e}, Error {:.3}%, ECE {:.3e}, corr {:.3}",
        report.mean_nll,
        report.mean_brier,
        report.mean_error_pct,
        report.ece,
        report.correlation.overall
    );
    Ok(())
}

fn load_posterior(path: &Path) -> CliResult<PosteriorSamples> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(PosteriorSamples::from_csv(&text, &path.display().to_string())?)
}

/// Prior or posterior predictive check.
pub fn cmd_check(cfg: &RunConfig) -> CliResult<()> {
    let check = cfg
        .check
        .as_ref()
        .ok_or_else(|| CliError::Config("check: missing [check] settings".into()))?;
    write_resolved_config(cfg)?;
    let data = Dataset::<f64>::load(&check.data)?;
    let unroll = unroll_config(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report = match check.stage {
        CheckStage::Prior => {
            let inputs: Vec<EdgeVector<f64>> = data
                .inputs()
                .take(check.n_inputs)
                .cloned()
                .collect();
            prior_predictive_check(
                &cfg.prior.resolve()?,
                &inputs,
                check.replicates,
                &unroll,
                &mut rng,
            )?
        }
        CheckStage::Posterior => {
            let posterior = check.posterior.as_ref().ok_or_else(|| {
                CliError::Config("check: posterior stage needs a posterior file".into())
            })?;
            let samples = load_posterior(posterior)?;
            posterior_predictive_check(&samples, &data, &unroll, &mut rng)?
        }
    };
    write_file(&cfg.out.join("check_stats.csv"), &report.stats_to_csv())?;
    write_file(&cfg.out.join("check_summary.json"), &report.summary_json())?;
    println!(
        "check: {} replicates, median density {:.3}, fraction in [0.75, 1] = {:.3}",
        report.replicated_stats.len(),
        report.quantile(0.5),
        report.band_fraction(0.75, 1.0)
    );
    Ok(())
}

/// Solve the θ grid on held-out inputs and record solution statistics.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: missing [sweep] settings".into()))?;
    write_resolved_config(cfg)?;
    let data = Dataset::<f64>::load(&sweep.data)?;
    let inputs: Vec<EdgeVector<f64>> = data.inputs().take(sweep.n_inputs).cloned().collect();
    let grid = sweep.grid();
    let rows = theta_sweep(&inputs, &grid, &SolveConfig::default())?;
    for (theta, row) in grid.iter().zip(rows.iter()) {
        if let Err(err) = row {
            eprintln!("sweep: theta {theta}: {err}");
        }
    }
    write_file(&cfg.out.join("sweep.csv"), &sweep_to_csv(&rows))?;
    println!("sweep: {} grid points over {} inputs", grid.len(), inputs.len());
    Ok(())
}

/// Scale anchored parameters to target sizes, or fit an empirical trend.
pub fn cmd_scale(cfg: &RunConfig) -> CliResult<()> {
    let scale = cfg
        .scale
        .as_ref()
        .ok_or_else(|| CliError::Config("scale: missing [scale] settings".into()))?;
    write_resolved_config(cfg)?;
    let anchor = ScaleAnchor::from_theta_delta(scale.anchor_n, scale.anchor_theta, scale.anchor_delta);
    let csv = scale_table_csv(&anchor, &scale.targets)?;
    write_file(&cfg.out.join("scale.csv"), &csv)?;
    if let (Some(form), Some(points_path)) = (scale.fit_form, scale.fit_points.as_ref()) {
        let text = std::fs::read_to_string(points_path)
            .map_err(|e| CliError::Io(format!("{}: {e}", points_path.display())))?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('n') {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| {
                s.and_then(|v| v.trim().parse::<f64>().ok()).ok_or_else(|| {
                    CliError::Config(format!(
                        "{}:{}: expected 'n,value'",
                        points_path.display(),
                        lineno + 1
                    ))
                })
            };
            let n = parse(parts.next())?;
            let y = parse(parts.next())?;
            points.push((n, y));
        }
        let coeffs = fit_trend(&points, form)?;
        #[derive(Serialize)]
        struct TrendFile {
            form: bgsl_core::scaling::FitForm,
            c0: f64,
            c1: f64,
        }
        let text = serde_json::to_string_pretty(&TrendFile {
            form,
            c0: coeffs.0,
            c1: coeffs.1,
        })
        .expect("trend serialization cannot fail");
        write_file(&cfg.out.join("trend.json"), &text)?;
    }
    println!("scale: wrote table for {} target sizes", scale.targets.len());
    Ok(())
}
