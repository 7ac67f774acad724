//! MCMC mixing diagnostics: split potential scale reduction and effective
//! sample size.
//!
//! Both follow the split-chain formulation: every chain is halved, the
//! potential scale reduction compares between- to within-half variance, and
//! the effective sample size combines per-half autocorrelations with Geyer's
//! initial monotone positive sequence truncation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mixing summary for one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub split_rhat: f64,
    pub ess: f64,
    /// Set when the chains carry (numerically) zero variance, in which case
    /// the scale reduction is reported as exactly 1.
    pub degenerate: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Autocovariance with denominator n (biased), up to `max_lag` inclusive.
fn autocov(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    (0..=max_lag)
        .map(|t| {
            let mut acc = 0.0;
            for k in 0..n - t {
                acc += centered[k] * centered[k + t];
            }
            acc / n as f64
        })
        .collect()
}

fn split_in_half(chain: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = chain.len() / 2;
    // Odd lengths drop the middle draw.
    let first = chain[..n].to_vec();
    let second = chain[chain.len() - n..].to_vec();
    (first, second)
}

const DEGENERATE_VAR: f64 = 1e-300;

/// Split R-hat and effective sample size for one parameter.
///
/// `chains` holds the per-chain draws; at least two chains of at least four
/// draws are required.
pub fn split_rhat_ess(chains: &[Vec<f64>]) -> Result<ParamDiagnostics> {
    if chains.len() < 2 {
        return Err(Error::Precondition("diagnostics need at least 2 chains".into()));
    }
    if chains.iter().any(|c| c.len() < 4) {
        return Err(Error::Precondition("diagnostics need at least 4 draws per chain".into()));
    }

    let mut halves: Vec<Vec<f64>> = Vec::with_capacity(2 * chains.len());
    for chain in chains {
        let (a, b) = split_in_half(chain);
        halves.push(a);
        halves.push(b);
    }
    let n = halves.iter().map(|h| h.len()).min().unwrap();
    for h in halves.iter_mut() {
        h.truncate(n);
    }
    let j = halves.len();

    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let vars: Vec<f64> = halves.iter().map(|h| sample_var(h)).collect();
    let w = mean(&vars);
    let b = n as f64 * sample_var(&means);

    if w <= DEGENERATE_VAR {
        return Ok(ParamDiagnostics {
            split_rhat: 1.0,
            ess: (j * n) as f64,
            degenerate: true,
        });
    }

    let var_plus = (n - 1) as f64 / n as f64 * w + b / n as f64;
    let split_rhat = (var_plus / w).sqrt();

    // Combined autocorrelations: rho_t = 1 - (W - mean_j s_j^2 rho_{j,t}) / var_plus.
    let max_lag = n - 2;
    let acovs: Vec<Vec<f64>> = halves.iter().map(|h| autocov(h, max_lag)).collect();
    let unbias = n as f64 / (n - 1) as f64;
    let rho = |t: usize| -> f64 {
        let mean_acov = acovs.iter().map(|a| a[t]).sum::<f64>() / j as f64 * unbias;
        1.0 - (w - mean_acov) / var_plus
    };

    // Geyer: sum pairs while positive, enforcing monotone non-increase.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 <= max_lag {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
        t += 2;
    }
    let tau = tau.max(1.0 / (j * n) as f64);
    let ess = (j * n) as f64 / tau;

    Ok(ParamDiagnostics {
        split_rhat,
        ess,
        degenerate: false,
    })
}
