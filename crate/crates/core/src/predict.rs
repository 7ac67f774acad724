//! Posterior-predictive sampling and the evaluation metric suite: negative
//! log likelihood, Brier score, thresholded error, expected calibration
//! error, and error-uncertainty correlation.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::EdgeVector;
use crate::hmc::PosteriorSamples;
use crate::posterior::bernoulli_loglik_logit;
use crate::scalar::sigmoid_raw;
use crate::unroll::{ForwardLanes, UnrollConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-edge point estimates and uncertainties from predictive draws.
#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    /// Mean of the binary draws, in [0, 1].
    pub pred_mean: EdgeVector<f64>,
    /// Sample standard deviation of the draws (denominator M-1).
    pub pred_stdv: EdgeVector<f64>,
    /// The raw draws, when retained.
    pub draws: Option<Vec<EdgeVector<f64>>>,
}

/// Edge logits under every posterior draw: row m holds
/// `δ_m Γ_{θ_m}(e) - b_m`. Scores work on logits so saturated heads stay
/// numerically exact through the softplus form.
pub fn posterior_edge_logits(
    e_test: &EdgeVector<f64>,
    samples: &PosteriorSamples,
    unroll: &UnrollConfig<f64>,
) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = samples
        .draws
        .iter()
        .map(|p| e_test.values().iter().map(|&x| p[0] * x).collect())
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let lanes = ForwardLanes::new(e_test.n(), &refs).expect("consistent dimensions");
    let out = lanes.run(unroll.depth, unroll.a0, unroll.lambda0);
    samples
        .draws
        .iter()
        .enumerate()
        .map(|(m, p)| {
            (0..e_test.len())
                .map(|idx| p[1] * out.a(idx, m) - p[2])
                .collect()
        })
        .collect()
}

/// Edge probabilities under every posterior draw: the sigmoid of
/// [`posterior_edge_logits`].
pub fn posterior_edge_probs(
    e_test: &EdgeVector<f64>,
    samples: &PosteriorSamples,
    unroll: &UnrollConfig<f64>,
) -> Vec<Vec<f64>> {
    posterior_edge_logits(e_test, samples, unroll)
        .into_iter()
        .map(|row| row.into_iter().map(sigmoid_raw).collect())
        .collect()
}

/// One Bernoulli draw of the whole edge set per posterior sample.
pub fn posterior_predictive_draws<R: Rng>(
    e_test: &EdgeVector<f64>,
    samples: &PosteriorSamples,
    unroll: &UnrollConfig<f64>,
    rng: &mut R,
) -> Vec<EdgeVector<f64>> {
    let probs = posterior_edge_probs(e_test, samples, unroll);
    draws_from_probs(&probs, e_test.n(), rng)
}

/// Per-sample log likelihoods of the labels, each via the softplus form.
fn sample_logliks(logits: &[Vec<f64>], labels: &EdgeVector<f64>) -> Vec<f64> {
    logits
        .iter()
        .map(|row| {
            row.iter()
                .zip(labels.values())
                .map(|(&w, &a)| bernoulli_loglik_logit(w, a == 1.0))
                .sum()
        })
        .collect()
}

fn draws_from_probs<R: Rng>(probs: &[Vec<f64>], n: usize, rng: &mut R) -> Vec<EdgeVector<f64>> {
    // Per-sample RNG streams keep the draws reproducible regardless of how
    // callers batch the samples.
    let base = rng.next_u64();
    probs
        .iter()
        .enumerate()
        .map(|(m, p)| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(m as u64);
            EdgeVector::new(
                p.iter()
                    .map(|&pi| if r.gen::<f64>() < pi { 1.0 } else { 0.0 })
                    .collect(),
                n,
            )
            .expect("probability rows match the edge count")
        })
        .collect()
}

/// Per-edge mean and sample standard deviation of predictive draws.
pub fn predictive_moments(draws: &[EdgeVector<f64>]) -> Result<PredictiveSummary> {
    let m = draws.len();
    if m < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: m });
    }
    let n = draws[0].n();
    let edges = draws[0].len();
    let mut mean = vec![0.0; edges];
    for d in draws {
        for (acc, &x) in mean.iter_mut().zip(d.values()) {
            *acc += x;
        }
    }
    for x in mean.iter_mut() {
        *x /= m as f64;
    }
    let mut stdv = vec![0.0; edges];
    for d in draws {
        for ((acc, &x), &mu) in stdv.iter_mut().zip(d.values()).zip(mean.iter()) {
            *acc += (x - mu) * (x - mu);
        }
    }
    for x in stdv.iter_mut() {
        *x = (*x / (m - 1) as f64).sqrt();
    }
    Ok(PredictiveSummary {
        pred_mean: EdgeVector::new(mean, n)?,
        pred_stdv: EdgeVector::new(stdv, n)?,
        draws: None,
    })
}

/// Negative log predictive density of one test graph:
/// `-(logsumexp_m log p(a | e, Θ_m) - log M)`, each inner term in softplus
/// form, so it stays finite for arbitrarily saturated logits.
pub fn nll_from_logits(logits: &[Vec<f64>], labels: &EdgeVector<f64>) -> f64 {
    let logliks = sample_logliks(logits, labels);
    let max = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logliks.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    -(lse - (logliks.len() as f64).ln())
}

/// Mean squared distance between per-sample probabilities and the labels,
/// averaged over samples and edges.
pub fn brier_from_logits(logits: &[Vec<f64>], labels: &EdgeVector<f64>) -> f64 {
    let m = logits.len() as f64;
    let edges = labels.len() as f64;
    logits
        .iter()
        .map(|row| {
            row.iter()
                .zip(labels.values())
                .map(|(&w, &a)| {
                    let p = sigmoid_raw(w);
                    (p - a) * (p - a)
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / (m * edges)
}

/// Percentage of edges misclassified by thresholding the predictive mean at
/// 1/2 (a mean of exactly 1/2 predicts "no edge").
pub fn error_rate(pred_mean: &EdgeVector<f64>, labels: &EdgeVector<f64>) -> f64 {
    let wrong = pred_mean
        .values()
        .iter()
        .zip(labels.values())
        .filter(|(&p, &a)| ((p > 0.5) as u8 as f64) != a)
        .count();
    100.0 * wrong as f64 / labels.len() as f64
}

/// One reliability bin on the confidence axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub accuracy: f64,
    pub confidence: f64,
}

/// Expected calibration error over pooled edges with uniform bins on
/// (1/2, 1]; a confidence of exactly 1/2 lands in the first bin.
pub fn ece(
    pred_mean: &[f64],
    labels: &[f64],
    n_bins: usize,
) -> Result<(f64, Vec<ReliabilityBin>)> {
    if pred_mean.is_empty() || pred_mean.len() != labels.len() {
        return Err(Error::Precondition(
            "calibration needs matching, nonempty predictions and labels".into(),
        ));
    }
    if n_bins == 0 {
        return Err(Error::InvalidConfig("need at least one calibration bin".into()));
    }
    let mut count = vec![0usize; n_bins];
    let mut acc = vec![0.0; n_bins];
    let mut conf = vec![0.0; n_bins];
    for (&p, &a) in pred_mean.iter().zip(labels.iter()) {
        let predicted = (p > 0.5) as u8 as f64;
        let confidence = p.max(1.0 - p);
        let k = (((confidence - 0.5) / 0.5 * n_bins as f64).ceil() as usize)
            .clamp(1, n_bins)
            - 1;
        count[k] += 1;
        conf[k] += confidence;
        if predicted == a {
            acc[k] += 1.0;
        }
    }
    let total: usize = count.iter().sum();
    let mut value = 0.0;
    let mut table = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let lo = 0.5 + 0.5 * k as f64 / n_bins as f64;
        let hi = 0.5 + 0.5 * (k + 1) as f64 / n_bins as f64;
        let (a_k, c_k) = if count[k] > 0 {
            (acc[k] / count[k] as f64, conf[k] / count[k] as f64)
        } else {
            (f64::NAN, f64::NAN)
        };
        if count[k] > 0 {
            value += count[k] as f64 / total as f64 * (a_k - c_k).abs();
        }
        table.push(ReliabilityBin {
            lo,
            hi,
            count: count[k],
            accuracy: a_k,
            confidence: c_k,
        });
    }
    Ok((value, table))
}

/// Render a reliability table as CSV; empty bins leave accuracy and
/// confidence blank.
pub fn reliability_to_csv(table: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,accuracy,confidence\n");
    for b in table {
        if b.count > 0 {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.lo, b.hi, b.count, b.accuracy, b.confidence
            ));
        } else {
            out.push_str(&format!("{},{},0,,\n", b.lo, b.hi));
        }
    }
    out
}

/// Pearson correlations between per-edge error `|a - mean|` and predictive
/// standard deviation: overall, on label-1 edges, and on label-0 edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorUncertaintyCorrelation {
    pub overall: f64,
    pub true_positive: f64,
    pub true_negative: f64,
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Correlation between `|label - pred_mean|` and `pred_stdv`, pooled and by
/// label class.
pub fn error_uncertainty_correlation(
    pred_mean: &[f64],
    pred_stdv: &[f64],
    labels: &[f64],
) -> Result<ErrorUncertaintyCorrelation> {
    let errors: Vec<f64> = pred_mean
        .iter()
        .zip(labels.iter())
        .map(|(&p, &a)| (a - p).abs())
        .collect();
    let subset = |want: f64| -> (Vec<f64>, Vec<f64>) {
        labels
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == want)
            .map(|(k, _)| (errors[k], pred_stdv[k]))
            .unzip()
    };
    let (e1, s1) = subset(1.0);
    let (e0, s0) = subset(0.0);
    Ok(ErrorUncertaintyCorrelation {
        overall: pearson(&errors, pred_stdv)?,
        true_positive: pearson(&e1, &s1)?,
        true_negative: pearson(&e0, &s0)?,
    })
}

/// Full evaluation of one test pair. Draw-based quantities (mean, stdv,
/// error) and probability-based scores (NLL, Brier) share the forward
/// passes.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub nll: f64,
    pub brier: f64,
    pub error_pct: f64,
    pub pred_mean: EdgeVector<f64>,
    pub pred_stdv: EdgeVector<f64>,
}

pub fn evaluate_pair<R: Rng>(
    e_test: &EdgeVector<f64>,
    labels: &EdgeVector<f64>,
    samples: &PosteriorSamples,
    unroll: &UnrollConfig<f64>,
    rng: &mut R,
) -> Result<PairEvaluation> {
    let logits = posterior_edge_logits(e_test, samples, unroll);
    let probs: Vec<Vec<f64>> = logits
        .iter()
        .map(|row| row.iter().map(|&w| sigmoid_raw(w)).collect())
        .collect();
    let draws = draws_from_probs(&probs, e_test.n(), rng);
    let moments = predictive_moments(&draws)?;
    Ok(PairEvaluation {
        nll: nll_from_logits(&logits, labels),
        brier: brier_from_logits(&logits, labels),
        error_pct: error_rate(&moments.pred_mean, labels),
        pred_mean: moments.pred_mean,
        pred_stdv: moments.pred_stdv,
    })
}

/// Per-graph scores of a dataset evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub nll: f64,
    pub brier: f64,
    pub error_pct: f64,
}

/// Whole-test-set evaluation: per-graph proper scores plus pooled
/// calibration and error-uncertainty correlation across all edges.
#[derive(Debug, Clone)]
pub struct DatasetEvaluation {
    pub per_graph: Vec<PairMetrics>,
    pub mean_nll: f64,
    pub mean_brier: f64,
    pub mean_error_pct: f64,
    pub ece: f64,
    pub reliability: Vec<ReliabilityBin>,
    pub correlation: ErrorUncertaintyCorrelation,
    /// Per-graph predictive summaries, in test order.
    pub pairs: Vec<PairEvaluation>,
}

/// Evaluate a posterior on every pair of a test set. Per-pair randomness
/// derives from `(seed, pair index)`, so results do not depend on
/// scheduling.
pub fn evaluate_dataset(
    samples: &PosteriorSamples,
    test: &Dataset<f64>,
    unroll: &UnrollConfig<f64>,
    seed: u64,
) -> Result<DatasetEvaluation> {
    use rayon::prelude::*;
    if test.is_empty() {
        return Err(Error::Precondition("evaluation needs a nonempty test set".into()));
    }
    let pairs: Vec<PairEvaluation> = test
        .pairs()
        .par_iter()
        .enumerate()
        .map(|(k, (e, a))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            evaluate_pair(e, a, samples, unroll, &mut rng)
        })
        .collect::<Result<_>>()?;

    let t = pairs.len() as f64;
    let per_graph: Vec<PairMetrics> = pairs
        .iter()
        .map(|ev| PairMetrics {
            nll: ev.nll,
            brier: ev.brier,
            error_pct: ev.error_pct,
        })
        .collect();

    let mut means = Vec::new();
    let mut stdvs = Vec::new();
    let mut labels = Vec::new();
    for (ev, (_, a)) in pairs.iter().zip(test.pairs()) {
        means.extend_from_slice(ev.pred_mean.values());
        stdvs.extend_from_slice(ev.pred_stdv.values());
        labels.extend_from_slice(a.values());
    }
    let (ece_value, reliability) = ece(&means, &labels, 10)?;
    let correlation = error_uncertainty_correlation(&means, &stdvs, &labels)?;

    Ok(DatasetEvaluation {
        mean_nll: per_graph.iter().map(|g| g.nll).sum::<f64>() / t,
        mean_brier: per_graph.iter().map(|g| g.brier).sum::<f64>() / t,
        mean_error_pct: per_graph.iter().map(|g| g.error_pct).sum::<f64>() / t,
        per_graph,
        ece: ece_value,
        reliability,
        correlation,
        pairs,
    })
}
