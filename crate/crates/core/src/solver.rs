//! Convergent solvers for the smoothness-regularized graph learning problem
//!
//! ```text
//! minimize over a >= 0:   2 a'e - alpha * 1' log(S a) + (beta/2) ||a||^2
//! ```
//!
//! in its (θ, δ)-parameterization: solve with `alpha = beta = 1` on the
//! rescaled input `θ e`, then multiply the solution by `δ`. θ alone controls
//! sparsity and δ rescales edge weights. Two solvers are provided: the
//! step-size-free dual proximal gradient (DPG) iteration, and a primal-dual
//! splitting (PDS) baseline with step size γ for cross-checks.

use crate::error::{Error, Result};
use crate::graph::{edge_count, graph_stats, DegreeOperator, EdgeVector, EDGE_THRESHOLD};
use crate::scalar::{Real, Scalar};
use num_traits::{Float, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default initialization of the edge iterate (uncertain edges).
pub const DEFAULT_A0: f64 = 0.5;
/// Default initialization of the dual iterate (near its typical limit).
pub const DEFAULT_LAMBDA0: f64 = 17.0;

/// Sparsity/scale parameters of the (θ, δ)-parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpgParams<T> {
    pub theta: T,
    pub delta: T,
}

impl<T: Real> DpgParams<T> {
    pub fn new(theta: T, delta: T) -> Self {
        DpgParams { theta, delta }
    }
}

/// Parameters of the (α, β)-parameterization with PDS step size γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdsParams<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

/// Iteration budget and stopping rule on the relative change of `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iter: 50_000,
            rel_tol: 1e-8,
        }
    }
}

/// Converged (or truncated) solver output.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    /// Edge weights, already scaled by δ for DPG.
    pub a_star: EdgeVector<T>,
    /// Final dual iterate (DPG only).
    pub lambda_star: Option<Vec<T>>,
    pub iters: usize,
    pub converged: bool,
    pub final_rel_change: f64,
}

const NORM_FLOOR: f64 = 1e-30;

/// One DPG iteration, in place. `d` is scratch of length `n`.
///
/// The three update lines:
/// `d = S a - (N-1) λ`;
/// `λ = -(d - sqrt(d^2 + 4(N-1)))/(2(N-1))` entrywise;
/// `a = max(0, S'λ / 2 - e_scaled)`.
#[inline]
pub(crate) fn dpg_step_core<S: Scalar>(
    n: usize,
    a: &mut [S],
    lambda: &mut [S],
    d: &mut [S],
    e_scaled: &[S],
) {
    let n1 = S::Real::of((n - 1) as f64);
    let zero = S::from_real(S::Real::zero());
    let four_n1 = S::from_real(n1 * S::Real::of(4.0));
    let inv_2n1 = S::from_real(Float::recip(S::Real::of(2.0) * n1));
    let n1s = S::from_real(n1);
    let half = S::from_real(S::Real::of(0.5));

    for di in d.iter_mut() {
        *di = zero;
    }
    let mut i = 0;
    let mut j = 1;
    for &w in a.iter() {
        d[i] = d[i] + w;
        d[j] = d[j] + w;
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
    for (di, li) in d.iter_mut().zip(lambda.iter_mut()) {
        let dk = *di - n1s * *li;
        *di = dk;
        *li = ((dk * dk + four_n1).sqrt() - dk) * inv_2n1;
    }
    let mut i = 0;
    let mut j = 1;
    for (ak, &ek) in a.iter_mut().zip(e_scaled.iter()) {
        *ak = ((lambda[i] + lambda[j]) * half - ek).relu();
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
}

/// One DPG iteration on owned values, returning `(a', λ', d)`.
pub fn dpg_step<T: Real>(
    a: &EdgeVector<T>,
    lambda: &[T],
    e_scaled: &EdgeVector<T>,
) -> Result<(EdgeVector<T>, Vec<T>, Vec<T>)> {
    let n = a.n();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    if e_scaled.n() != n {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: e_scaled.len(),
        });
    }
    let mut av = a.values().to_vec();
    let mut lv = lambda.to_vec();
    let mut d = vec![T::zero(); n];
    dpg_step_core(n, &mut av, &mut lv, &mut d, e_scaled.values());
    Ok((EdgeVector::new(av, n)?, lv, d))
}

/// Run DPG to convergence from the default initialization.
pub fn dpg_solve<T: Real>(
    e: &EdgeVector<T>,
    params: &DpgParams<T>,
    cfg: &SolveConfig,
) -> Result<SolveResult<T>> {
    let n = e.n();
    dpg_solve_from(
        e,
        params,
        cfg,
        &EdgeVector::constant(n, T::of(DEFAULT_A0)),
        &vec![T::of(DEFAULT_LAMBDA0); n],
    )
}

/// Run DPG to convergence from explicit initial iterates.
///
/// Iterates on the rescaled input `θ e` and returns `δ a_k`; the dual
/// iterate is returned unscaled.
pub fn dpg_solve_from<T: Real>(
    e: &EdgeVector<T>,
    params: &DpgParams<T>,
    cfg: &SolveConfig,
    a0: &EdgeVector<T>,
    lambda0: &[T],
) -> Result<SolveResult<T>> {
    let n = e.n();
    if a0.n() != n || lambda0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lambda0.len(),
        });
    }
    let e_scaled: Vec<T> = e.values().iter().map(|&x| params.theta * x).collect();
    let mut a = a0.values().to_vec();
    let mut lambda = lambda0.to_vec();
    let mut d = vec![T::zero(); n];
    let mut prev = a.clone();

    let mut iters = 0;
    let mut converged = false;
    let mut rel = f64::INFINITY;
    for k in 1..=cfg.max_iter {
        dpg_step_core(n, &mut a, &mut lambda, &mut d, &e_scaled);
        iters = k;
        let (diff2, norm2) = diff_and_norm(&a, &prev);
        rel = diff2.sqrt() / norm2.sqrt().max(NORM_FLOOR);
        if !rel.is_finite() && !norm_is_finite(&a) {
            return Err(Error::Divergence { iter: k });
        }
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
        prev.copy_from_slice(&a);
    }

    let a_star = EdgeVector::new(a.iter().map(|&x| params.delta * x).collect(), n)?;
    Ok(SolveResult {
        a_star,
        lambda_star: Some(lambda),
        iters,
        converged,
        final_rel_change: rel,
    })
}

fn diff_and_norm<T: Real>(a: &[T], prev: &[T]) -> (f64, f64) {
    let mut diff2 = T::zero();
    let mut norm2 = T::zero();
    for (&x, &p) in a.iter().zip(prev.iter()) {
        diff2 = diff2 + (x - p) * (x - p);
        norm2 = norm2 + p * p;
    }
    (diff2.to_f64().unwrap(), norm2.to_f64().unwrap())
}

fn norm_is_finite<T: Real>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// One PDS iteration, returning `(a', v')`.
pub fn pds_step<T: Real>(
    a: &EdgeVector<T>,
    v: &[T],
    e: &EdgeVector<T>,
    params: &PdsParams<T>,
) -> Result<(EdgeVector<T>, Vec<T>)> {
    let n = a.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let mut av = a.values().to_vec();
    let mut vv = v.to_vec();
    let mut ws = PdsWorkspace::new(n);
    pds_step_core(n, &mut av, &mut vv, e.values(), params, &mut ws);
    Ok((EdgeVector::new(av, n)?, vv))
}

struct PdsWorkspace<T> {
    r1: Vec<T>,
    p1: Vec<T>,
    r2: Vec<T>,
    p2: Vec<T>,
    sa: Vec<T>,
}

impl<T: Real> PdsWorkspace<T> {
    fn new(n: usize) -> Self {
        PdsWorkspace {
            r1: vec![T::zero(); edge_count(n)],
            p1: vec![T::zero(); edge_count(n)],
            r2: vec![T::zero(); n],
            p2: vec![T::zero(); n],
            sa: vec![T::zero(); n],
        }
    }
}

fn degrees_into<T: Real>(n: usize, a: &[T], out: &mut [T]) {
    for o in out.iter_mut() {
        *o = T::zero();
    }
    let mut i = 0;
    let mut j = 1;
    for &w in a.iter() {
        out[i] = out[i] + w;
        out[j] = out[j] + w;
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
}

fn pds_step_core<T: Real>(
    n: usize,
    a: &mut [T],
    v: &mut [T],
    e: &[T],
    params: &PdsParams<T>,
    ws: &mut PdsWorkspace<T>,
) {
    let g = params.gamma;
    let two = T::of(2.0);
    let two_beta = two * params.beta;
    let four_ag = T::of(4.0) * params.alpha * g;
    let half = T::of(0.5);

    // r1 = a - γ(2β a + 2e + S'v); p1 = max(0, r1)
    let mut i = 0;
    let mut j = 1;
    for idx in 0..a.len() {
        let r = a[idx] - g * (two_beta * a[idx] + two * e[idx] + v[i] + v[j]);
        ws.r1[idx] = r;
        ws.p1[idx] = Scalar::relu(r);
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
    // r2 = v + γ S a; p2 = (r2 - sqrt(r2^2 + 4αγ))/2
    degrees_into(n, a, &mut ws.sa);
    for k in 0..n {
        let r = v[k] + g * ws.sa[k];
        ws.r2[k] = r;
        ws.p2[k] = (r - Float::sqrt(r * r + four_ag)) * half;
    }
    // q1 = p1 - γ(2β p1 + 2e + S'p2); a' = a - r1 + q1
    let mut i = 0;
    let mut j = 1;
    for idx in 0..a.len() {
        let q = ws.p1[idx] - g * (two_beta * ws.p1[idx] + two * e[idx] + ws.p2[i] + ws.p2[j]);
        a[idx] = a[idx] - ws.r1[idx] + q;
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
    // q2 = p2 + γ S p1; v' = v - r2 + q2
    degrees_into(n, &ws.p1, &mut ws.sa);
    for k in 0..n {
        let q = ws.p2[k] + g * ws.sa[k];
        v[k] = v[k] - ws.r2[k] + q;
    }
}

/// Run PDS to convergence from the default initialization
/// (`a0 = 1/2`, `v0 = 0`).
pub fn pds_solve<T: Real>(
    e: &EdgeVector<T>,
    params: &PdsParams<T>,
    cfg: &SolveConfig,
) -> Result<SolveResult<T>> {
    let n = e.n();
    pds_solve_from(
        e,
        params,
        cfg,
        &EdgeVector::constant(n, T::of(DEFAULT_A0)),
        &vec![T::zero(); n],
    )
}

/// Run PDS to convergence from explicit initial iterates.
///
/// Divergence (any non-finite entry) is an error carrying the iteration
/// index; it is the expected outcome for too-large γ.
pub fn pds_solve_from<T: Real>(
    e: &EdgeVector<T>,
    params: &PdsParams<T>,
    cfg: &SolveConfig,
    a0: &EdgeVector<T>,
    v0: &[T],
) -> Result<SolveResult<T>> {
    let n = e.n();
    if a0.n() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v0.len(),
        });
    }
    let mut a = a0.values().to_vec();
    let mut v = v0.to_vec();
    let mut prev = a.clone();
    let mut ws = PdsWorkspace::new(n);

    let mut iters = 0;
    let mut converged = false;
    let mut rel = f64::INFINITY;
    for k in 1..=cfg.max_iter {
        pds_step_core(n, &mut a, &mut v, e.values(), params, &mut ws);
        iters = k;
        let (diff2, norm2) = diff_and_norm(&a, &prev);
        if !(diff2.is_finite() && norm2.is_finite())
            || !norm_is_finite(&a)
            || !norm_is_finite(&v)
        {
            return Err(Error::Divergence { iter: k });
        }
        rel = diff2.sqrt() / norm2.sqrt().max(NORM_FLOOR);
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
        prev.copy_from_slice(&a);
    }

    // The final PDS update is not a prox output, so clamp the numerical
    // negatives (-0.0 and tolerance-level dust) that the true solution
    // does not have.
    for x in a.iter_mut() {
        *x = Scalar::relu(*x);
    }
    Ok(SolveResult {
        a_star: EdgeVector::new(a, n)?,
        lambda_star: None,
        iters,
        converged,
        final_rel_change: rel,
    })
}

/// The composite objective minimized by both solvers,
/// `2 a'e - alpha 1'log(S a) + beta ||a||^2`.
///
/// This is the vectorized form of the symmetric-matrix objective with
/// Frobenius penalty `(beta/2)||A||_F^2`; vectorizing the strict upper
/// triangle folds the double-counted off-diagonal entries into the linear
/// and quadratic terms. Infinite when some node degree is non-positive.
pub fn gsl_objective<T: Real>(a: &EdgeVector<T>, e: &EdgeVector<T>, alpha: T, beta: T) -> T {
    let op = DegreeOperator::new(a.n());
    let degrees = op.apply(a).expect("matching node counts");
    let mut fidelity = T::zero();
    for (&ai, &ei) in a.values().iter().zip(e.values().iter()) {
        fidelity = fidelity + ai * ei;
    }
    let mut barrier = T::zero();
    for &d in &degrees {
        if d <= T::zero() {
            return T::infinity();
        }
        barrier = barrier + Float::ln(d);
    }
    let mut sq = T::zero();
    for &ai in a.values() {
        sq = sq + ai * ai;
    }
    T::of(2.0) * fidelity - alpha * barrier + beta * sq
}

/// Per-θ summary of solution statistics across a set of inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSweepRow {
    pub theta: f64,
    pub density_mean: f64,
    pub density_std: f64,
    pub components_mean: f64,
    pub w_min: f64,
    pub w_q25: f64,
    pub w_med: f64,
    pub w_q75: f64,
    pub w_max: f64,
}

/// Solve every input at each θ (with δ = 1) and summarize the solutions'
/// sparsity statistics. Weight quantiles pool the supra-threshold weights
/// of all solutions at that θ. Per-point solver errors are reported in
/// place without aborting the rest of the sweep.
pub fn theta_sweep<T: Real>(
    e_set: &[EdgeVector<T>],
    theta_grid: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<Result<ThetaSweepRow>>> {
    if e_set.is_empty() {
        return Err(Error::InvalidConfig("theta sweep needs at least one input".into()));
    }
    if theta_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("theta grid must be sorted ascending".into()));
    }
    Ok(theta_grid
        .par_iter()
        .map(|&theta| sweep_point(e_set, theta, cfg))
        .collect())
}

fn sweep_point<T: Real>(
    e_set: &[EdgeVector<T>],
    theta: f64,
    cfg: &SolveConfig,
) -> Result<ThetaSweepRow> {
    let params = DpgParams::new(T::of(theta), T::one());
    let mut densities = Vec::with_capacity(e_set.len());
    let mut components = Vec::with_capacity(e_set.len());
    let mut weights: Vec<f64> = Vec::new();
    for e in e_set {
        let sol = dpg_solve(e, &params, cfg)?;
        let stats = graph_stats(&sol.a_star, EDGE_THRESHOLD);
        densities.push(stats.edge_density);
        components.push(stats.n_components as f64);
        weights.extend(
            sol.a_star
                .values()
                .iter()
                .map(|x| x.to_f64().unwrap())
                .filter(|&w| w > EDGE_THRESHOLD),
        );
    }
    weights.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let density_mean = mean(&densities);
    let density_std = if densities.len() > 1 {
        (densities
            .iter()
            .map(|d| (d - density_mean) * (d - density_mean))
            .sum::<f64>()
            / (densities.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let q = |p: f64| -> f64 {
        if weights.is_empty() {
            return 0.0;
        }
        let pos = p * (weights.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        weights[lo] + (weights[hi] - weights[lo]) * (pos - lo as f64)
    };
    Ok(ThetaSweepRow {
        theta,
        density_mean,
        density_std,
        components_mean: mean(&components),
        w_min: q(0.0),
        w_q25: q(0.25),
        w_med: q(0.5),
        w_q75: q(0.75),
        w_max: q(1.0),
    })
}

/// Render sweep rows as CSV (failed grid points are skipped).
pub fn sweep_to_csv(rows: &[Result<ThetaSweepRow>]) -> String {
    let mut out = String::from(
        "theta,density_mean,density_std,components_mean,w_min,w_q25,w_med,w_q75,w_max\n",
    );
    for row in rows.iter().flatten() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.theta,
            row.density_mean,
            row.density_std,
            row.components_mean,
            row.w_min,
            row.w_q25,
            row.w_med,
            row.w_q75,
            row.w_max
        ));
    }
    out
}
