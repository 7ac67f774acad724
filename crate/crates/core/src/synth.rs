//! Random-graph ensembles, smooth-signal generation, analytic and empirical
//! distance inputs, and dataset assembly.
//!
//! Smooth signals are colored Gaussians `x ~ N(0, L†)`: energy concentrates
//! on the low Laplacian frequencies. Their expected pairwise squared
//! distances form the analytic distance matrix
//! `E[E]_{ij} = L†_ii + L†_jj - 2 L†_ij`, which coincides with the
//! effective-resistance distance of the graph. Empirical distances from `P`
//! signals are divided by `P` so they estimate the analytic matrix
//! unbiasedly.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{edge_count, edge_slots, laplacian_pinv_eigen, n_components, EdgeVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Random-graph family and node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSpec {
    /// Random geometric graph: nodes uniform in the unit square, edges
    /// between pairs within `radius`.
    Rg { n: usize, radius: f64 },
    /// Erdős–Rényi with independent edge probability `p`.
    Er { n: usize, p: f64 },
    /// Barabási–Albert preferential attachment with `m` links per node.
    Ba { n: usize, m: usize },
}

impl EnsembleSpec {
    pub fn n(&self) -> usize {
        match *self {
            EnsembleSpec::Rg { n, .. } | EnsembleSpec::Er { n, .. } | EnsembleSpec::Ba { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnsembleSpec::Rg { n, radius } => {
                if n < 2 || radius <= 0.0 {
                    return Err(Error::InvalidConfig("geometric graph needs n >= 2, radius > 0".into()));
                }
            }
            EnsembleSpec::Er { n, p } => {
                if n < 2 || !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidConfig("edge probability must lie in [0, 1]".into()));
                }
            }
            EnsembleSpec::Ba { n, m } => {
                if n < 2 || m == 0 || m >= n {
                    return Err(Error::InvalidConfig("attachment count must satisfy 0 < m < n".into()));
                }
            }
        }
        Ok(())
    }
}

/// Draw one binary graph from the ensemble.
pub fn gen_graph<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<EdgeVector<f64>> {
    spec.validate()?;
    Ok(match *spec {
        EnsembleSpec::Rg { n, radius } => {
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            let mut vals = Vec::with_capacity(edge_count(n));
            for (_, i, j) in edge_slots(n) {
                let dx = pts[i].0 - pts[j].0;
                let dy = pts[i].1 - pts[j].1;
                vals.push(if (dx * dx + dy * dy).sqrt() <= radius { 1.0 } else { 0.0 });
            }
            EdgeVector::new(vals, n)?
        }
        EnsembleSpec::Er { n, p } => {
            let vals = (0..edge_count(n))
                .map(|_| if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
                .collect();
            EdgeVector::new(vals, n)?
        }
        EnsembleSpec::Ba { n, m } => {
            // Start from m isolated nodes; each newcomer attaches to m
            // distinct targets drawn preferentially by degree (uniformly
            // while all degrees are zero).
            let mut degree = vec![0usize; n];
            let mut graph = EdgeVector::zeros(n);
            for v in m..n {
                let mut targets: Vec<usize> = Vec::with_capacity(m);
                while targets.len() < m {
                    let total: usize = degree[..v].iter().sum();
                    let pick = if total == 0 {
                        rng.gen_range(0..v)
                    } else {
                        let mut ticket = rng.gen_range(0..total);
                        let mut chosen = 0;
                        for (u, &d) in degree[..v].iter().enumerate() {
                            if ticket < d {
                                chosen = u;
                                break;
                            }
                            ticket -= d;
                        }
                        chosen
                    };
                    if !targets.contains(&pick) {
                        targets.push(pick);
                    }
                }
                for &u in &targets {
                    let (a, b) = if u < v { (u, v) } else { (v, u) };
                    let idx = crate::graph::edge_index(a, b, n)?;
                    graph.values_mut()[idx] = 1.0;
                    degree[u] += 1;
                    degree[v] += 1;
                }
            }
            graph
        }
    })
}

/// Draw graphs until one is connected. The smooth-signal pipeline requires
/// a rank-(n-1) Laplacian, so disconnected draws are rejected.
pub fn gen_connected_graph<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    rng: &mut R,
) -> Result<EdgeVector<f64>> {
    for _ in 0..10_000 {
        let g = gen_graph(spec, rng)?;
        if n_components(&g, 0.0) == 1 {
            return Ok(g);
        }
    }
    Err(Error::Precondition(format!(
        "no connected draw from {spec:?} in 10000 attempts"
    )))
}

/// Columns of smooth signals `x = sqrt(L†) x0`, `x0 ~ N(0, I)`, stacked
/// into an n x P matrix.
pub fn sample_smooth_signals<R: Rng + ?Sized>(
    a: &EdgeVector<f64>,
    p: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = a.n();
    if n_components(a, 0.0) != 1 {
        return Err(Error::Precondition(
            "smooth signals need a connected graph".into(),
        ));
    }
    let (inv_eigs, u) = laplacian_pinv_eigen(a);
    let sqrt_eigs: Vec<f64> = inv_eigs.iter().map(|&x| x.sqrt()).collect();
    // sqrt(L†) = U diag(sqrt(λ†)) U'.
    let sqrt_pinv =
        &u * DMatrix::from_diagonal(&DVector::from_vec(sqrt_eigs)) * u.transpose();
    let x0 = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    Ok(sqrt_pinv * x0)
}

/// Expected pairwise squared distances of smooth signals,
/// `L†_ii + L†_jj - 2 L†_ij`, vectorized.
pub fn analytic_distance(a: &EdgeVector<f64>) -> Result<EdgeVector<f64>> {
    let n = a.n();
    if n_components(a, 0.0) != 1 {
        return Err(Error::Precondition(
            "the analytic distance matrix needs a connected graph".into(),
        ));
    }
    let (inv_eigs, u) = laplacian_pinv_eigen(a);
    let pinv = &u * DMatrix::from_diagonal(&DVector::from_vec(inv_eigs)) * u.transpose();
    let mut vals = Vec::with_capacity(edge_count(n));
    for (_, i, j) in edge_slots(n) {
        vals.push((pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)]).max(0.0));
    }
    EdgeVector::new(vals, n)
}

/// Pairwise squared Euclidean distances of the rows of `x`; with
/// `normalize`, divided by the number of signals so the result estimates
/// [`analytic_distance`] unbiasedly.
pub fn empirical_distance(x: &DMatrix<f64>, normalize: bool) -> Result<EdgeVector<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    if p == 0 {
        return Err(Error::Precondition("need at least one signal".into()));
    }
    let mut vals = Vec::with_capacity(edge_count(n));
    for (_, i, j) in edge_slots(n) {
        let mut acc = 0.0;
        for k in 0..p {
            let d = x[(i, k)] - x[(j, k)];
            acc += d * d;
        }
        vals.push(if normalize { acc / p as f64 } else { acc });
    }
    EdgeVector::new(vals, n)
}

/// Dissimilarity construction from raw nodal signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Plain squared Euclidean row distances.
    Euclidean,
    /// `1 - |pearson correlation|` between rows.
    OneMinusAbsCorr,
    /// Elementwise log of the squared Euclidean distances.
    LogEuclidean,
}

/// Build the dissimilarity input from a signal matrix under `mode`.
pub fn distance_from_signals(x: &DMatrix<f64>, mode: DistanceMode) -> Result<EdgeVector<f64>> {
    let n = x.nrows();
    match mode {
        DistanceMode::Euclidean => empirical_distance(x, false),
        DistanceMode::LogEuclidean => {
            let raw = empirical_distance(x, false)?;
            if raw.values().iter().any(|&d| d <= 0.0) {
                return Err(Error::DegenerateInput(
                    "log distance undefined for coincident rows".into(),
                ));
            }
            Ok(raw.map(|d| d.ln()))
        }
        DistanceMode::OneMinusAbsCorr => {
            let p = x.ncols();
            let mut centered = x.clone();
            let mut norms = Vec::with_capacity(n);
            for i in 0..n {
                let mean: f64 = (0..p).map(|k| x[(i, k)]).sum::<f64>() / p as f64;
                for k in 0..p {
                    centered[(i, k)] -= mean;
                }
                let norm: f64 = (0..p).map(|k| centered[(i, k)] * centered[(i, k)]).sum();
                if norm == 0.0 {
                    return Err(Error::DegenerateInput(format!(
                        "row {i} is constant; correlation undefined"
                    )));
                }
                norms.push(norm.sqrt());
            }
            let mut vals = Vec::with_capacity(edge_count(n));
            for (_, i, j) in edge_slots(n) {
                let dot: f64 = (0..p).map(|k| centered[(i, k)] * centered[(j, k)]).sum();
                let corr = dot / (norms[i] * norms[j]);
                vals.push((1.0 - corr.abs()).max(0.0));
            }
            EdgeVector::new(vals, n)
        }
    }
}

/// Parse a signal matrix from CSV text: rows are nodes, columns are
/// observations.
pub fn signals_from_csv(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::Precondition(format!(
                        "{origin}:{}: bad number '{v}'",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Precondition(format!(
                    "{origin}:{}: ragged row ({} values, expected {})",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Precondition(format!("{origin}: no rows")));
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Load a signal matrix from a CSV file.
pub fn load_signals(path: &std::path::Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    signals_from_csv(&text, &path.display().to_string())
}

/// Input construction for generated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InputKind {
    /// The exact expected distance matrix.
    Analytic,
    /// Normalized empirical distances from `p` sampled smooth signals.
    Empirical { p: usize },
}

/// Generate `t` i.i.d. pairs of (distance input, binary labels).
///
/// Graphs are redrawn until connected; each pair derives its own RNG
/// stream from `rng`, so generation is reproducible and order-independent.
pub fn make_dataset<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    t: usize,
    input: InputKind,
    rng: &mut R,
) -> Result<Dataset<f64>> {
    spec.validate()?;
    let base = rng.next_u64();
    let pairs = (0..t)
        .map(|k| {
            let mut stream = ChaCha8Rng::seed_from_u64(base);
            stream.set_stream(k as u64);
            let labels = gen_connected_graph(spec, &mut stream)?;
            let e = match input {
                InputKind::Analytic => analytic_distance(&labels)?,
                InputKind::Empirical { p } => {
                    let x = sample_smooth_signals(&labels, p, &mut stream)?;
                    empirical_distance(&x, true)?
                }
            };
            Ok((e, labels))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(spec.n(), pairs)
}
