//! Hamiltonian Monte Carlo with fixed-length leapfrog trajectories.
//!
//! Warmup adapts the step size by dual averaging toward a target acceptance
//! rate and estimates a diagonal mass matrix from mid-warmup draws; both are
//! frozen for the sampling phase. A non-finite Hamiltonian anywhere along a
//! trajectory aborts it: the proposal is rejected and counted as a
//! divergence. Chains run independently with RNG streams derived from
//! `(seed, chain index)`, so runs are reproducible regardless of scheduling.

use crate::diagnostics::{split_rhat_ess, ParamDiagnostics};
use crate::error::{Error, Result};
use crate::posterior::{LogDensityGrad, PosteriorDensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Chain, iteration, and adaptation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub target_accept: f64,
    pub leapfrog_steps: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            n_chains: 4,
            n_warmup: 500,
            n_samples: 1000,
            target_accept: 0.8,
            leapfrog_steps: 32,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_warmup == 0 || self.n_samples == 0 || self.leapfrog_steps == 0
        {
            return Err(Error::InvalidConfig("chain/iteration counts must be positive".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig("target_accept must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One chain's sampling-phase output.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub draws: Vec<Vec<f64>>,
    pub accept_rate: f64,
    pub divergences: usize,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
}

/// Gradients are clipped to this Euclidean norm inside the integrator, so
/// chains initialized absurdly far out (wide priors) can still travel back
/// instead of stalling on astronomically small adapted step sizes.
const GRAD_CLIP: f64 = 1e6;

fn clip(mut g: Vec<f64>) -> Vec<f64> {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm.is_finite() && norm <= GRAD_CLIP {
        return g;
    }
    if !norm.is_finite() {
        return g;
    }
    let s = GRAD_CLIP / norm;
    for x in g.iter_mut() {
        *x *= s;
    }
    g
}

struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    t: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps0: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps0).ln(),
            log_eps: eps0.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            t: 0.0,
            target,
        }
    }

    fn update(&mut self, accept_prob: f64) {
        self.t += 1.0;
        let eta = 1.0 / (self.t + Self::T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_prob);
        self.log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_bar;
        let w = self.t.powf(-Self::KAPPA);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
    }

    fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    fn averaged(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

struct ChainState<'a, T: LogDensityGrad + ?Sized> {
    target: &'a T,
    z: Vec<f64>,
    logp: f64,
    grad: Vec<f64>,
    inv_mass: Vec<f64>,
    rng: ChaCha8Rng,
}

struct Transition {
    accept_prob: f64,
    divergent: bool,
    accepted: bool,
}

impl<T: LogDensityGrad + ?Sized> ChainState<'_, T> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(self.inv_mass.iter())
            .map(|(pi, im)| im * pi * pi)
            .sum::<f64>()
    }

    fn draw_momentum(&mut self) -> Vec<f64> {
        self.inv_mass
            .iter()
            .map(|im| {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                n / im.sqrt()
            })
            .collect()
    }

    /// One leapfrog trajectory plus the Metropolis correction.
    ///
    /// The step size is jittered ±20% per trajectory; a fixed step count with
    /// a fixed step size resonates on near-Gaussian targets (trajectories
    /// close onto themselves), and drawing ε independently of the state keeps
    /// the transition valid.
    fn transition(&mut self, eps: f64, steps: usize) -> Transition {
        let eps = eps * (0.9 + 0.2 * self.rng.gen::<f64>());
        let p0 = self.draw_momentum();
        let h0 = -self.logp + self.kinetic(&p0);

        let mut z = self.z.clone();
        let mut p = p0;
        let mut logp = self.logp;
        let mut grad = self.grad.clone();
        let mut ok = true;

        for pi in p.iter_mut().zip(grad.iter()) {
            *pi.0 += 0.5 * eps * pi.1;
        }
        for step in 0..steps {
            for (zi, (pi, im)) in z.iter_mut().zip(p.iter().zip(self.inv_mass.iter())) {
                *zi += eps * im * pi;
            }
            if z.iter().any(|x| !x.is_finite()) {
                ok = false;
                break;
            }
            let (lp, g) = self.target.value_and_grad(&z);
            logp = lp;
            grad = clip(g);
            if !logp.is_finite() || grad.iter().any(|x| !x.is_finite()) {
                ok = false;
                break;
            }
            let scale = if step + 1 == steps { 0.5 } else { 1.0 };
            for (pi, gi) in p.iter_mut().zip(grad.iter()) {
                *pi += scale * eps * gi;
            }
        }

        if !ok {
            return Transition {
                accept_prob: 0.0,
                divergent: true,
                accepted: false,
            };
        }
        let h1 = -logp + self.kinetic(&p);
        if !h1.is_finite() {
            return Transition {
                accept_prob: 0.0,
                divergent: true,
                accepted: false,
            };
        }
        let accept_prob = (h0 - h1).exp().min(1.0);
        let accepted = self.rng.gen::<f64>() < accept_prob;
        if accepted {
            self.z = z;
            self.logp = logp;
            self.grad = grad;
        }
        Transition {
            accept_prob,
            divergent: false,
            accepted,
        }
    }

    /// Double or halve a unit step until the one-step acceptance crosses 1/2.
    fn reasonable_epsilon(&mut self, steps_hint: usize) -> f64 {
        let _ = steps_hint;
        let mut eps = 0.1;
        let mut dir = 0.0;
        for _ in 0..60 {
            let p0 = self.draw_momentum();
            let h0 = -self.logp + self.kinetic(&p0);
            let mut z = self.z.clone();
            let mut p = p0;
            for (pi, gi) in p.iter_mut().zip(self.grad.iter()) {
                *pi += 0.5 * eps * gi;
            }
            for (zi, (pi, im)) in z.iter_mut().zip(p.iter().zip(self.inv_mass.iter())) {
                *zi += eps * im * pi;
            }
            let a = if z.iter().all(|x| x.is_finite()) {
                let (lp, g) = self.target.value_and_grad(&z);
                let g = clip(g);
                if lp.is_finite() {
                    for (pi, gi) in p.iter_mut().zip(g.iter()) {
                        *pi += 0.5 * eps * gi;
                    }
                    let h1 = -lp + self.kinetic(&p);
                    if h1.is_finite() {
                        (h0 - h1).exp().min(1.0)
                    } else {
                        0.0
                    }
                } else {
                    0.0
                }
            } else {
                0.0
            };
            let want = if a > 0.5 { 2.0 } else { 0.5 };
            if dir == 0.0 {
                dir = want;
            }
            if want != dir {
                break;
            }
            eps *= dir;
            if !(1e-8..=1e2).contains(&eps) {
                break;
            }
        }
        eps.clamp(1e-8, 1e2)
    }
}

fn run_chain<T: LogDensityGrad + ?Sized>(
    target: &T,
    cfg: &HmcConfig,
    chain_idx: usize,
    init: &[f64],
) -> Result<ChainRun> {
    let dim = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain_idx as u64 + 1);

    let (logp, grad) = target.value_and_grad(init);
    if !logp.is_finite() {
        return Err(Error::SamplerFailure(format!(
            "chain {chain_idx}: non-finite log density at initialization"
        )));
    }
    let mut state = ChainState {
        target,
        z: init.to_vec(),
        logp,
        grad: clip(grad),
        inv_mass: vec![1.0; dim],
        rng,
    };

    let eps0 = state.reasonable_epsilon(cfg.leapfrog_steps);
    let mut adapt = DualAveraging::new(eps0, cfg.target_accept);

    // Expanding adaptation windows: an initial step-size-only buffer, then
    // doubling covariance windows that each re-estimate the diagonal mass
    // and re-anchor the step size, then a final step-size-only buffer.
    let window_ends = mass_window_ends(cfg.n_warmup);
    let mut next_window = 0;
    let mut window: Vec<Vec<f64>> = Vec::new();
    for k in 0..cfg.n_warmup {
        let t = state.transition(adapt.current(), cfg.leapfrog_steps);
        adapt.update(t.accept_prob);
        if next_window < window_ends.len() {
            window.push(state.z.clone());
            if k + 1 == window_ends[next_window] {
                if window.len() >= 10 {
                    state.inv_mass = estimate_inv_mass(&window, dim);
                    let eps = adapt.current();
                    adapt = DualAveraging::new(eps.clamp(1e-8, 1e2), cfg.target_accept);
                }
                window.clear();
                next_window += 1;
            }
        }
    }
    let eps = adapt.averaged().clamp(1e-10, 1e3);

    let mut draws = Vec::with_capacity(cfg.n_samples);
    let mut accepts = 0usize;
    let mut divergences = 0usize;
    for _ in 0..cfg.n_samples {
        let t = state.transition(eps, cfg.leapfrog_steps);
        if t.divergent {
            divergences += 1;
        }
        if t.accepted {
            accepts += 1;
        }
        draws.push(state.z.clone());
    }
    if divergences == cfg.n_samples {
        return Err(Error::SamplerFailure(format!(
            "chain {chain_idx}: every sampling iteration diverged"
        )));
    }

    Ok(ChainRun {
        draws,
        accept_rate: accepts as f64 / cfg.n_samples as f64,
        divergences,
        step_size: eps,
        inv_mass: state.inv_mass,
    })
}

/// Iteration indices (exclusive ends) of the mass-estimation windows: skip
/// an initial buffer, then double window sizes, and leave a final buffer
/// for step-size-only adaptation.
fn mass_window_ends(warmup: usize) -> Vec<usize> {
    if warmup < 40 {
        return Vec::new();
    }
    let init_buffer = (warmup * 15 / 100).clamp(10, 75);
    let term_buffer = (warmup / 5).clamp(10, 100);
    let last = warmup - term_buffer;
    let mut ends = Vec::new();
    let mut size = 25usize.min((last - init_buffer).max(1));
    let mut pos = init_buffer;
    loop {
        let end = pos + size;
        // Merge a too-small trailing window into this one.
        if end >= last || last - end < size * 2 {
            ends.push(last);
            break;
        }
        ends.push(end);
        pos = end;
        size *= 2;
    }
    ends
}

fn estimate_inv_mass(window: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let n = window.len() as f64;
    (0..dim)
        .map(|k| {
            let mean = window.iter().map(|z| z[k]).sum::<f64>() / n;
            let var = window
                .iter()
                .map(|z| (z[k] - mean) * (z[k] - mean))
                .sum::<f64>()
                / (n - 1.0);
            // Shrink toward unity like a regularized covariance estimate.
            let reg = (n / (n + 5.0)) * var + 5.0 / (n + 5.0) * 1e-3;
            reg.clamp(1e-10, 1e10)
        })
        .collect()
}

/// Sample all chains from explicit per-chain initial positions.
pub fn hmc_sample<T: LogDensityGrad + ?Sized>(
    target: &T,
    cfg: &HmcConfig,
    inits: &[Vec<f64>],
) -> Result<Vec<ChainRun>> {
    cfg.validate()?;
    if inits.len() != cfg.n_chains {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_chains,
            got: inits.len(),
        });
    }
    (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, cfg, c, &inits[c]))
        .collect()
}

/// Parameter-posterior draws with per-chain bookkeeping and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub n_chains: usize,
    pub n_samples: usize,
    /// Natural-scale draws (θ, δ, b), chain-major.
    pub draws: Vec<[f64; 3]>,
    /// The same draws in unconstrained coordinates (ln θ, ln δ, ln b).
    pub unconstrained: Vec<[f64; 3]>,
    pub diagnostics: FitDiagnostics,
}

/// Sampler health summary serialized next to the draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub theta: ParamDiagnostics,
    pub delta: ParamDiagnostics,
    pub b: ParamDiagnostics,
    pub accept_rate: Vec<f64>,
    pub divergences: Vec<usize>,
    pub step_size: Vec<f64>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Natural-scale draws of chain `c`.
    pub fn chain(&self, c: usize) -> &[[f64; 3]] {
        &self.draws[c * self.n_samples..(c + 1) * self.n_samples]
    }

    /// Per-chain series of parameter `k` (0 = θ, 1 = δ, 2 = b).
    pub fn param_chains(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains)
            .map(|c| self.chain(c).iter().map(|d| d[k]).collect())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("chain,draw,theta,delta,b\n");
        for c in 0..self.n_chains {
            for (i, d) in self.chain(c).iter().enumerate() {
                out.push_str(&format!("{c},{i},{},{},{}\n", d[0], d[1], d[2]));
            }
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut per_chain: Vec<Vec<[f64; 3]>> = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Precondition(format!(
                    "{origin}:{}: expected 5 fields",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::Precondition(format!("{origin}:{}: bad number '{s}'", lineno + 1))
                })
            };
            let chain = fields[0].parse::<usize>().map_err(|_| {
                Error::Precondition(format!("{origin}:{}: bad chain index", lineno + 1))
            })?;
            if per_chain.len() <= chain {
                per_chain.resize(chain + 1, Vec::new());
            }
            per_chain[chain].push([parse(fields[2])?, parse(fields[3])?, parse(fields[4])?]);
        }
        if per_chain.is_empty() || per_chain.iter().any(|c| c.is_empty()) {
            return Err(Error::Precondition(format!("{origin}: no draws found")));
        }
        let n_samples = per_chain[0].len();
        if per_chain.iter().any(|c| c.len() != n_samples) {
            return Err(Error::Precondition(format!(
                "{origin}: chains have unequal lengths"
            )));
        }
        let n_chains = per_chain.len();
        let draws: Vec<[f64; 3]> = per_chain.into_iter().flatten().collect();
        let unconstrained = draws
            .iter()
            .map(|d| [d[0].ln(), d[1].ln(), d[2].ln()])
            .collect();
        let diag = |k: usize| {
            let chains: Vec<Vec<f64>> = (0..n_chains)
                .map(|c| {
                    draws[c * n_samples..(c + 1) * n_samples]
                        .iter()
                        .map(|d| d[k])
                        .collect()
                })
                .collect();
            // Tiny files cannot support the diagnostics; report NaN rather
            // than refusing to load.
            split_rhat_ess(&chains).unwrap_or(ParamDiagnostics {
                split_rhat: f64::NAN,
                ess: f64::NAN,
                degenerate: false,
            })
        };
        let diagnostics = FitDiagnostics {
            theta: diag(0),
            delta: diag(1),
            b: diag(2),
            accept_rate: Vec::new(),
            divergences: Vec::new(),
            step_size: Vec::new(),
        };
        Ok(PosteriorSamples {
            n_chains,
            n_samples,
            draws,
            unconstrained,
            diagnostics,
        })
    }

    pub fn save(&self, csv_path: &Path, diagnostics_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())
            .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
        let diag = serde_json::to_string_pretty(&self.diagnostics)
            .map_err(|e| Error::json(diagnostics_path.display().to_string(), e))?;
        std::fs::write(diagnostics_path, diag)
            .map_err(|e| Error::io(diagnostics_path.display().to_string(), e))
    }
}

/// Fit the model: overdispersed chain initializations, sample, package
/// draws with diagnostics.
///
/// Chains start uniform on [-2, 2] per unconstrained coordinate. Raw prior
/// draws are too heavy-tailed to start from: the δ and b priors span many
/// decades, and a chain dropped on a saturated-likelihood plateau cannot
/// reach the mass within a fixed warmup budget.
pub fn fit_posterior(
    density: &PosteriorDensity<'_>,
    cfg: &HmcConfig,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let inits = (0..cfg.n_chains)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0x8000_0000u64 + c as u64);
            for _ in 0..100 {
                let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if density.value([z[0], z[1], z[2]]).is_finite() {
                    return Ok(z);
                }
            }
            Err(Error::SamplerFailure(format!(
                "chain {c}: no finite initialization in 100 draws"
            )))
        })
        .collect::<Result<Vec<_>>>()?;

    let runs = hmc_sample(density, cfg, &inits)?;

    let mut unconstrained = Vec::with_capacity(cfg.n_chains * cfg.n_samples);
    for run in &runs {
        for z in &run.draws {
            unconstrained.push([z[0], z[1], z[2]]);
        }
    }
    let draws: Vec<[f64; 3]> = unconstrained
        .iter()
        .map(|z| [z[0].exp(), z[1].exp(), z[2].exp()])
        .collect();

    let diag = |k: usize| {
        let chains: Vec<Vec<f64>> = (0..cfg.n_chains)
            .map(|c| {
                draws[c * cfg.n_samples..(c + 1) * cfg.n_samples]
                    .iter()
                    .map(|d| d[k])
                    .collect()
            })
            .collect();
        split_rhat_ess(&chains)
    };

    let diagnostics = FitDiagnostics {
        theta: diag(0)?,
        delta: diag(1)?,
        b: diag(2)?,
        accept_rate: runs.iter().map(|r| r.accept_rate).collect(),
        divergences: runs.iter().map(|r| r.divergences).collect(),
        step_size: runs.iter().map(|r| r.step_size).collect(),
    };
    Ok(PosteriorSamples {
        n_chains: cfg.n_chains,
        n_samples: cfg.n_samples,
        draws,
        unconstrained,
        diagnostics,
    })
}
