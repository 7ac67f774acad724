//! Prior and posterior predictive checks with the mean-edge-density test
//! statistic.
//!
//! A replicate draws parameters (from the prior, or one posterior sample),
//! pushes every held-out input through the network, Bernoulli-samples labels
//! from the resulting probabilities, and records the mean edge density
//! across inputs. The histogram of replicate statistics is compared against
//! prior beliefs (prior check) or the observed label density (posterior
//! check).

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::EdgeVector;
use crate::hmc::PosteriorSamples;
use crate::prior::PriorTriple;
use crate::scalar::sigmoid_raw;
use crate::unroll::{ForwardLanes, UnrollConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Histogram bin count over the [0, 1] density axis.
pub const HISTOGRAM_BINS: usize = 30;

/// Replicated test statistics with an optional observed reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Mean edge density of each replicated dataset.
    pub replicated_stats: Vec<f64>,
    /// The statistic on the real data (posterior check only).
    pub observed_stat: Option<f64>,
    /// Uniform histogram over [0, 1]: (edges, counts).
    pub histogram: (Vec<f64>, Vec<usize>),
}

impl CheckReport {
    fn from_stats(mut stats: Vec<f64>, observed: Option<f64>) -> Self {
        let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
            .map(|k| k as f64 / HISTOGRAM_BINS as f64)
            .collect();
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for &s in &stats {
            let k = ((s * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
            counts[k] += 1;
        }
        stats.shrink_to_fit();
        CheckReport {
            replicated_stats: stats,
            observed_stat: observed,
            histogram: (edges, counts),
        }
    }

    /// Fraction of replicates whose statistic lies in `[lo, hi]`.
    pub fn band_fraction(&self, lo: f64, hi: f64) -> f64 {
        let hits = self
            .replicated_stats
            .iter()
            .filter(|&&s| s >= lo && s <= hi)
            .count();
        hits as f64 / self.replicated_stats.len() as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.replicated_stats.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }

    /// One statistic per line, for plotting.
    pub fn stats_to_csv(&self) -> String {
        let mut out = String::from("replicate,density\n");
        for (k, s) in self.replicated_stats.iter().enumerate() {
            out.push_str(&format!("{k},{s}\n"));
        }
        out
    }

    /// Summary block: quantiles, the dense band, and the observed statistic.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            n_replicates: usize,
            q05: f64,
            q25: f64,
            median: f64,
            q75: f64,
            q95: f64,
            frac_in_075_100: f64,
            observed_stat: Option<f64>,
        }
        serde_json::to_string_pretty(&Summary {
            n_replicates: self.replicated_stats.len(),
            q05: self.quantile(0.05),
            q25: self.quantile(0.25),
            median: self.quantile(0.5),
            q75: self.quantile(0.75),
            q95: self.quantile(0.95),
            frac_in_075_100: self.band_fraction(0.75, 1.0),
            observed_stat: self.observed_stat,
        })
        .expect("summary serialization cannot fail")
    }
}

/// Mean density over inputs of labels Bernoulli-drawn from the network at
/// parameters `(θ, δ, b)`.
fn replicate_density<R: Rng>(
    params: [f64; 3],
    inputs: &[EdgeVector<f64>],
    unroll: &UnrollConfig<f64>,
    rng: &mut R,
) -> f64 {
    let rows: Vec<Vec<f64>> = inputs
        .iter()
        .map(|e| e.values().iter().map(|&x| params[0] * x).collect())
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let lanes = ForwardLanes::new(inputs[0].n(), &refs).expect("validated inputs");
    let out = lanes.run(unroll.depth, unroll.a0, unroll.lambda0);
    let m = inputs[0].len();
    let mut density = 0.0;
    for l in 0..inputs.len() {
        let mut ones = 0usize;
        for idx in 0..m {
            let p = sigmoid_raw(params[1] * out.a(idx, l) - params[2]);
            if rng.gen::<f64>() < p {
                ones += 1;
            }
        }
        density += ones as f64 / m as f64;
    }
    density / inputs.len() as f64
}

/// Replicate datasets from the prior: draw `(θ, δ, b)` per replicate and
/// record the mean label density over the held-out inputs.
pub fn prior_predictive_check<R: Rng>(
    prior: &PriorTriple,
    inputs: &[EdgeVector<f64>],
    n_replicates: usize,
    unroll: &UnrollConfig<f64>,
    rng: &mut R,
) -> Result<CheckReport> {
    if inputs.is_empty() {
        return Err(Error::Precondition("predictive checks need inputs".into()));
    }
    let base = rng.next_u64();
    let stats: Vec<f64> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut stream = ChaCha8Rng::seed_from_u64(base);
            stream.set_stream(r as u64);
            let z = prior.sample_z(&mut stream);
            let params = [z[0].exp(), z[1].exp(), z[2].exp()];
            replicate_density(params, inputs, unroll, &mut stream)
        })
        .collect();
    Ok(CheckReport::from_stats(stats, None))
}

/// Replicate datasets from the posterior: one replicate per posterior draw,
/// compared against the observed mean label density.
pub fn posterior_predictive_check<R: Rng>(
    samples: &PosteriorSamples,
    data: &Dataset<f64>,
    unroll: &UnrollConfig<f64>,
    rng: &mut R,
) -> Result<CheckReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("posterior check needs draws".into()));
    }
    if data.is_empty() {
        return Err(Error::Precondition("posterior check needs data".into()));
    }
    let inputs: Vec<EdgeVector<f64>> = data.inputs().cloned().collect();
    let base = rng.next_u64();
    let stats: Vec<f64> = samples
        .draws
        .par_iter()
        .enumerate()
        .map(|(r, params)| {
            let mut stream = ChaCha8Rng::seed_from_u64(base);
            stream.set_stream(r as u64);
            replicate_density(*params, &inputs, unroll, &mut stream)
        })
        .collect();
    Ok(CheckReport::from_stats(stats, Some(data.mean_label_density())))
}
