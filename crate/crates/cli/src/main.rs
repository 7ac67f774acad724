use bgsl_cli::config::{CheckStage, RunConfig};
use bgsl_cli::{cmd_check, cmd_eval, cmd_fit, cmd_gen, cmd_scale, cmd_sweep, CliError};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Graph structure learning from smooth signals with edge-wise uncertainty.
#[derive(Parser)]
#[command(name = "bgsl", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML or JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base RNG seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Unrolling depth.
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Number of HMC chains.
    #[arg(long, global = true)]
    chains: Option<usize>,

    /// Warmup iterations per chain.
    #[arg(long, global = true)]
    warmup: Option<usize>,

    /// Post-warmup draws per chain.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Prior preset: altered, original, or uninformative.
    #[arg(long, global = true)]
    prior: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/test datasets from a random-graph ensemble.
    Gen {
        /// Ensemble: rg:<radius>, er:<p>, or ba:<m>.
        #[arg(long)]
        ensemble: Option<String>,
        /// Node count.
        #[arg(long)]
        nodes: Option<usize>,
        /// Training pairs.
        #[arg(long)]
        train: Option<usize>,
        /// Test pairs.
        #[arg(long)]
        test: Option<usize>,
        /// Distance input: "analytic" or "empirical:<P>".
        #[arg(long)]
        input: Option<String>,
    },
    /// Sample the parameter posterior with HMC (or compute a MAP estimate).
    Fit {
        /// Training dataset (JSON).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Emit a MAP point estimate instead of posterior draws.
        #[arg(long)]
        map: bool,
    },
    /// Score a posterior against a test dataset.
    Eval {
        /// Posterior draws (CSV from `fit`).
        #[arg(long)]
        posterior: Option<PathBuf>,
        /// Test dataset (JSON).
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Prior or posterior predictive check.
    Check {
        /// Dataset supplying inputs (and labels for the posterior stage).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        stage: Option<CheckStage>,
        /// Replicated datasets to draw (prior stage).
        #[arg(long)]
        replicates: Option<usize>,
        /// Held-out inputs used per replicate.
        #[arg(long)]
        inputs: Option<usize>,
        /// Posterior CSV (posterior stage).
        #[arg(long)]
        posterior: Option<PathBuf>,
    },
    /// Solve a θ grid and record solution sparsity statistics.
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        inputs: Option<usize>,
        #[arg(long)]
        theta_lo: Option<f64>,
        #[arg(long)]
        theta_hi: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Transfer anchored parameters across sizes; optionally fit a trend.
    Scale {
        /// Anchor as n:theta:delta, e.g. 20:1.0:2.0.
        #[arg(long)]
        anchor: Option<String>,
        /// Comma-separated target node counts.
        #[arg(long)]
        targets: Option<String>,
        /// Trend form for --fit-points: logarithmic, linear, power_law.
        #[arg(long)]
        fit_form: Option<String>,
        /// CSV of n,value observations to fit.
        #[arg(long)]
        fit_points: Option<PathBuf>,
    },
}

fn parse_ensemble(kind: &str, n: usize) -> Result<bgsl_core::synth::EnsembleSpec, CliError> {
    use bgsl_core::synth::EnsembleSpec;
    let (name, value) = kind
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("ensemble '{kind}' is not kind:value")))?;
    let parse_f = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad ensemble parameter '{v}'")))
    };
    Ok(match name {
        "rg" => EnsembleSpec::Rg {
            n,
            radius: parse_f(value)?,
        },
        "er" => EnsembleSpec::Er {
            n,
            p: parse_f(value)?,
        },
        "ba" => EnsembleSpec::Ba {
            n,
            m: value
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad attachment count '{value}'")))?,
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown ensemble '{other}' (expected rg, er, or ba)"
            )))
        }
    })
}

fn parse_input(text: &str) -> Result<bgsl_core::synth::InputKind, CliError> {
    use bgsl_core::synth::InputKind;
    if text == "analytic" {
        return Ok(InputKind::Analytic);
    }
    if let Some(p) = text.strip_prefix("empirical:") {
        return Ok(InputKind::Empirical {
            p: p.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad signal count '{p}'")))?,
        });
    }
    Err(CliError::Config(format!(
        "unknown input kind '{text}' (expected analytic or empirical:<P>)"
    )))
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(depth) = cli.common.depth {
        cfg.depth = depth;
    }
    if let Some(chains) = cli.common.chains {
        cfg.hmc.chains = chains;
    }
    if let Some(warmup) = cli.common.warmup {
        cfg.hmc.warmup = warmup;
    }
    if let Some(samples) = cli.common.samples {
        cfg.hmc.samples = samples;
    }
    if let Some(out) = &cli.common.out {
        cfg.out = out.clone();
    }
    if let Some(prior) = &cli.common.prior {
        cfg.prior = bgsl_cli::config::PriorChoice::Named(prior.clone());
        cfg.prior.resolve()?;
    }

    match &cli.command {
        Command::Gen {
            ensemble,
            nodes,
            train,
            test,
            input,
        } => {
            let mut gen = cfg.gen.take().unwrap_or(bgsl_cli::config::GenSettings {
                ensemble: bgsl_core::synth::EnsembleSpec::Rg {
                    n: 20,
                    radius: 1.0 / 3.0,
                },
                train_t: 50,
                test_t: 100,
                input: bgsl_core::synth::InputKind::Analytic,
            });
            let n = nodes.unwrap_or(gen.ensemble.n());
            if let Some(kind) = ensemble {
                gen.ensemble = parse_ensemble(kind, n)?;
            }
            if let Some(t) = train {
                gen.train_t = *t;
            }
            if let Some(t) = test {
                gen.test_t = *t;
            }
            if let Some(text) = input {
                gen.input = parse_input(text)?;
            }
            cfg.gen = Some(gen);
        }
        Command::Fit { train, map } => {
            let mut fit = cfg.fit.take().unwrap_or(bgsl_cli::config::FitSettings {
                train: cfg.out.join("train.json"),
                map: false,
            });
            if let Some(path) = train {
                fit.train = path.clone();
            }
            if *map {
                fit.map = true;
            }
            cfg.fit = Some(fit);
        }
        Command::Eval { posterior, test } => {
            let mut eval = cfg.eval.take().unwrap_or(bgsl_cli::config::EvalSettings {
                posterior: cfg.out.join("posterior.csv"),
                test: cfg.out.join("test.json"),
            });
            if let Some(path) = posterior {
                eval.posterior = path.clone();
            }
            if let Some(path) = test {
                eval.test = path.clone();
            }
            cfg.eval = Some(eval);
        }
        Command::Check {
            data,
            stage,
            replicates,
            inputs,
            posterior,
        } => {
            let mut check = cfg.check.take().unwrap_or(bgsl_cli::config::CheckSettings {
                data: cfg.out.join("train.json"),
                stage: CheckStage::Prior,
                replicates: 10_000,
                n_inputs: 5,
                posterior: None,
            });
            if let Some(path) = data {
                check.data = path.clone();
            }
            if let Some(s) = stage {
                check.stage = *s;
            }
            if let Some(r) = replicates {
                check.replicates = *r;
            }
            if let Some(k) = inputs {
                check.n_inputs = *k;
            }
            if let Some(path) = posterior {
                check.posterior = Some(path.clone());
            }
            cfg.check = Some(check);
        }
        Command::Sweep {
            data,
            inputs,
            theta_lo,
            theta_hi,
            grid_points,
        } => {
            let mut sweep = cfg.sweep.take().unwrap_or(bgsl_cli::config::SweepSettings {
                data: cfg.out.join("train.json"),
                n_inputs: 5,
                theta_lo: 1e-3,
                theta_hi: 1e3,
                grid_points: 13,
            });
            if let Some(path) = data {
                sweep.data = path.clone();
            }
            if let Some(k) = inputs {
                sweep.n_inputs = *k;
            }
            if let Some(v) = theta_lo {
                sweep.theta_lo = *v;
            }
            if let Some(v) = theta_hi {
                sweep.theta_hi = *v;
            }
            if let Some(v) = grid_points {
                sweep.grid_points = *v;
            }
            cfg.sweep = Some(sweep);
        }
        Command::Scale {
            anchor,
            targets,
            fit_form,
            fit_points,
        } => {
            let mut scale = cfg.scale.take().unwrap_or(bgsl_cli::config::ScaleSettings {
                anchor_n: 20,
                anchor_theta: 1.0,
                anchor_delta: 1.0,
                targets: vec![50, 100, 200],
                fit_form: None,
                fit_points: None,
            });
            if let Some(text) = anchor {
                let parts: Vec<&str> = text.split(':').collect();
                if parts.len() != 3 {
                    return Err(CliError::Config(format!(
                        "anchor '{text}' is not n:theta:delta"
                    )));
                }
                scale.anchor_n = parts[0]
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad anchor size '{}'", parts[0])))?;
                scale.anchor_theta = parts[1]
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad anchor theta '{}'", parts[1])))?;
                scale.anchor_delta = parts[2]
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad anchor delta '{}'", parts[2])))?;
            }
            if let Some(text) = targets {
                scale.targets = text
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<usize>().map_err(|_| {
                            CliError::Config(format!("bad target size '{s}'"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            if let Some(form) = fit_form {
                scale.fit_form = Some(match form.as_str() {
                    "logarithmic" => bgsl_core::scaling::FitForm::Logarithmic,
                    "linear" => bgsl_core::scaling::FitForm::Linear,
                    "power_law" => bgsl_core::scaling::FitForm::PowerLaw,
                    other => {
                        return Err(CliError::Config(format!("unknown trend form '{other}'")))
                    }
                });
            }
            if let Some(path) = fit_points {
                scale.fit_points = Some(path.clone());
            }
            cfg.scale = Some(scale);
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Gen { .. } => cmd_gen(&cfg),
        Command::Fit { .. } => cmd_fit(&cfg),
        Command::Eval { .. } => cmd_eval(&cfg),
        Command::Check { .. } => cmd_check(&cfg),
        Command::Sweep { .. } => cmd_sweep(&cfg),
        Command::Scale { .. } => cmd_scale(&cfg),
    }
}

fn main() {
    // BGSL_THREADS caps the worker pool; the default uses all cores.
    if let Ok(text) = std::env::var("BGSL_THREADS") {
        if let Ok(n) = text.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        } else {
            eprintln!("warning: ignoring non-numeric BGSL_THREADS='{text}'");
        }
    }
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
