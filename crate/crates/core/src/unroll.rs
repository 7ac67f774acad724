//! Depth-D truncation of the DPG iteration as a differentiable forward pass,
//! plus the sigmoid edge-probability head.
//!
//! [`forward`] is generic over [`Scalar`], so the identical code path yields
//! plain values on floats and values-plus-tangents on dual numbers; memory
//! stays flat in the depth because iterates are updated in place.
//! [`forward_lanes`] is an equivalent batched kernel that advances many
//! independent forward passes in lockstep, which is what the likelihood and
//! prediction loops use on hot paths. The two are tested against each other.

use crate::error::{Error, Result};
use crate::graph::EdgeVector;
use crate::scalar::{Real, Scalar};
use num_traits::Zero;
use crate::solver::{dpg_step_core, DEFAULT_A0, DEFAULT_LAMBDA0};
use serde::{Deserialize, Serialize};

/// Unrolling depth and initial iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnrollConfig<T> {
    pub depth: usize,
    pub a0: T,
    pub lambda0: T,
}

impl<T: Real> Default for UnrollConfig<T> {
    fn default() -> Self {
        UnrollConfig {
            depth: 200,
            a0: T::of(DEFAULT_A0),
            lambda0: T::of(DEFAULT_LAMBDA0),
        }
    }
}

impl<T: Real> UnrollConfig<T> {
    pub fn with_depth(depth: usize) -> Self {
        UnrollConfig {
            depth,
            ..Default::default()
        }
    }
}

/// Scale and shift of the edge-probability head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadParams<T> {
    pub delta: T,
    pub b: T,
}

/// Run `depth` DPG iterations on `θ e` from the configured initialization.
///
/// Returns the unscaled final iterate (the head applies δ).
pub fn forward<S: Scalar>(
    e: &EdgeVector<S::Real>,
    theta: S,
    cfg: &UnrollConfig<S::Real>,
) -> Vec<S> {
    let n = e.n();
    let e_scaled: Vec<S> = e
        .values()
        .iter()
        .map(|&x| theta * S::from_real(x))
        .collect();
    let mut a = vec![S::from_real(cfg.a0); e.len()];
    let mut lambda = vec![S::from_real(cfg.lambda0); n];
    let mut d = vec![S::from_real(S::Real::zero()); n];
    for _ in 0..cfg.depth {
        dpg_step_core(n, &mut a, &mut lambda, &mut d, &e_scaled);
    }
    a
}

/// Edge probabilities `sigmoid(δ a - b)`.
pub fn edge_probs<S: Scalar>(a_d: &[S], head: &HeadParams<S>) -> Vec<S> {
    a_d.iter()
        .map(|&a| (head.delta * a - head.b).sigmoid())
        .collect()
}

/// Pre-sigmoid head output `δ a - b`, for likelihood evaluation in logit
/// space.
pub fn edge_logits<S: Scalar>(a_d: &[S], head: &HeadParams<S>) -> Vec<S> {
    a_d.iter().map(|&a| head.delta * a - head.b).collect()
}

/// A batch of independent forward passes advanced in lockstep.
///
/// Lanes are processed in blocks of eight (one SIMD register of doubles);
/// a block's entire state stays cache-resident across all iterations.
/// Each lane optionally carries one tangent propagating a directional
/// derivative; seeding it with `θ e` yields d/d(ln θ).
pub struct ForwardLanes {
    n: usize,
    lanes: usize,
    /// Per-lane rescaled inputs, row-major: `rows[l]` has one entry per edge.
    rows: Vec<Vec<f64>>,
    tangent: TangentSeed,
}

enum TangentSeed {
    None,
    /// d(θ e)/d(ln θ) = θ e: the seed equals the value input.
    SameAsValue,
    Rows(Vec<Vec<f64>>),
}

/// SIMD-friendly lane block width.
const BLOCK: usize = 8;

impl ForwardLanes {
    /// Value-only batch: lane `l` iterates on `e_scaled_rows[l]`.
    pub fn new(n: usize, e_scaled_rows: &[&[f64]]) -> Result<Self> {
        Self::build(n, e_scaled_rows, TangentSeed::None)
    }

    /// Batch whose tangent seed equals the value input, giving derivatives
    /// in the `ln θ` direction.
    pub fn with_tangent_from_value(n: usize, e_scaled_rows: &[&[f64]]) -> Result<Self> {
        Self::build(n, e_scaled_rows, TangentSeed::SameAsValue)
    }

    /// Batch with one explicit tangent seed per lane.
    pub fn with_tangent(
        n: usize,
        e_scaled_rows: &[&[f64]],
        e_scaled_tan_rows: &[&[f64]],
    ) -> Result<Self> {
        if e_scaled_tan_rows.len() != e_scaled_rows.len() {
            return Err(Error::DimensionMismatch {
                expected: e_scaled_rows.len(),
                got: e_scaled_tan_rows.len(),
            });
        }
        let tan = e_scaled_tan_rows.iter().map(|r| r.to_vec()).collect();
        Self::build(n, e_scaled_rows, TangentSeed::Rows(tan))
    }

    fn build(n: usize, rows: &[&[f64]], tangent: TangentSeed) -> Result<Self> {
        let m = crate::graph::edge_count(n);
        if rows.is_empty() {
            return Err(Error::InvalidConfig("forward batch needs lanes".into()));
        }
        for r in rows {
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: r.len(),
                });
            }
        }
        if let TangentSeed::Rows(t) = &tangent {
            for r in t {
                if r.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: r.len(),
                    });
                }
            }
        }
        Ok(ForwardLanes {
            n,
            lanes: rows.len(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            tangent,
        })
    }

    /// Run `depth` iterations on all lanes.
    pub fn run(&self, depth: usize, a0: f64, lambda0: f64) -> LanesOutput {
        let m = crate::graph::edge_count(self.n);
        let n_blocks = self.lanes.div_ceil(BLOCK);
        let with_tan = !matches!(self.tangent, TangentSeed::None);
        let mut a = vec![0.0; n_blocks * m * BLOCK];
        let mut at = vec![0.0; if with_tan { n_blocks * m * BLOCK } else { 0 }];

        let pack_block = |rows: &[Vec<f64>], block: usize| -> Vec<f64> {
            let mut packed = vec![0.0; m * BLOCK];
            for slot in 0..BLOCK {
                // Padding lanes replay lane 0 and are discarded on read-out.
                let lane = (block * BLOCK + slot).min(self.lanes - 1);
                let row = &rows[lane.min(rows.len() - 1)];
                for idx in 0..m {
                    packed[idx * BLOCK + slot] = row[idx];
                }
            }
            packed
        };

        for block in 0..n_blocks {
            let e_block = pack_block(&self.rows, block);
            let span = block * m * BLOCK..(block + 1) * m * BLOCK;
            match &self.tangent {
                TangentSeed::None => run_block::<false>(
                    self.n,
                    depth,
                    a0,
                    lambda0,
                    &e_block,
                    &e_block,
                    &mut a[span],
                    &mut [],
                ),
                TangentSeed::SameAsValue => run_block::<true>(
                    self.n,
                    depth,
                    a0,
                    lambda0,
                    &e_block,
                    &e_block,
                    &mut a[span.clone()],
                    &mut at[span],
                ),
                TangentSeed::Rows(tan) => {
                    let t_block = pack_block(tan, block);
                    run_block::<true>(
                        self.n,
                        depth,
                        a0,
                        lambda0,
                        &e_block,
                        &t_block,
                        &mut a[span.clone()],
                        &mut at[span],
                    )
                }
            }
        }

        LanesOutput {
            lanes: self.lanes,
            stride: m * BLOCK,
            a,
            a_tan: if with_tan { Some(at) } else { None },
        }
    }
}
/// One block of eight lanes through the full unrolled iteration. State is
/// held as arrays of `[f64; BLOCK]`, so the inner loops compile to straight
/// vector code and a block stays cache-resident across all iterations.
fn run_block<const TAN: bool>(
    n: usize,
    depth: usize,
    a0: f64,
    lambda0: f64,
    e: &[f64],
    e_tan: &[f64],
    a: &mut [f64],
    at: &mut [f64],
) {
    type Lane = [f64; BLOCK];
    let zero: Lane = [0.0; BLOCK];

    let (a8, rem) = a.as_chunks_mut::<BLOCK>();
    debug_assert!(rem.is_empty());
    let (e8, _) = e.as_chunks::<BLOCK>();
    let (et8, _) = e_tan.as_chunks::<BLOCK>();
    let (at8, _) = at.as_chunks_mut::<BLOCK>();
    a8.fill([a0; BLOCK]);
    at8.fill(zero);

    let mut lam: Vec<Lane> = vec![[lambda0; BLOCK]; n];
    let mut lamt: Vec<Lane> = vec![zero; if TAN { n } else { 0 }];
    let mut d: Vec<Lane> = vec![zero; n];
    let mut dt: Vec<Lane> = vec![zero; if TAN { n } else { 0 }];

    let n1 = (n - 1) as f64;
    let four_n1 = 4.0 * n1;
    let inv_2n1 = 1.0 / (2.0 * n1);

    for _ in 0..depth {
        d.fill(zero);
        if TAN {
            dt.fill(zero);
        }
        // d = S a: row i's edges are contiguous, so its accumulator stays in
        // registers; only the column endpoint needs a scatter.
        let mut idx = 0;
        for i in 0..n {
            let mut acc = zero;
            let mut acc_t = zero;
            for j in i + 1..n {
                let aw = a8[idx];
                let dj = &mut d[j];
                for l in 0..BLOCK {
                    acc[l] += aw[l];
                    dj[l] += aw[l];
                }
                if TAN {
                    let atw = at8[idx];
                    let tj = &mut dt[j];
                    for l in 0..BLOCK {
                        acc_t[l] += atw[l];
                        tj[l] += atw[l];
                    }
                }
                idx += 1;
            }
            let di = &mut d[i];
            for l in 0..BLOCK {
                di[l] += acc[l];
            }
            if TAN {
                let ti = &mut dt[i];
                for l in 0..BLOCK {
                    ti[l] += acc_t[l];
                }
            }
        }
        // d -= (N-1) λ, then λ = (sqrt(d^2 + 4(N-1)) - d)/(2(N-1)).
        // The tangent simplifies: dλ/d(dk) = dk/root - 1 = -2(N-1) λ'/root,
        // so λ_tan = -λ' · d_tan / root.
        if TAN {
            for k in 0..n {
                let (dk_l, lk_l) = (&mut d[k], &mut lam[k]);
                let (dt_l, lt_l) = (&mut dt[k], &mut lamt[k]);
                for l in 0..BLOCK {
                    let dk = dk_l[l] - n1 * lk_l[l];
                    let dkt = dt_l[l] - n1 * lt_l[l];
                    let root = (dk * dk + four_n1).sqrt();
                    let lk = (root - dk) * inv_2n1;
                    lk_l[l] = lk;
                    lt_l[l] = -lk * dkt / root;
                    dk_l[l] = dk;
                    dt_l[l] = dkt;
                }
            }
        } else {
            for k in 0..n {
                let (dk_l, lk_l) = (&mut d[k], &mut lam[k]);
                for l in 0..BLOCK {
                    let dk = dk_l[l] - n1 * lk_l[l];
                    let root = (dk * dk + four_n1).sqrt();
                    lk_l[l] = (root - dk) * inv_2n1;
                    dk_l[l] = dk;
                }
            }
        }
        // a = max(0, S'λ / 2 - e), branchless: relu(x) = (x + |x|)/2
        // propagates NaN; the tangent is masked by the activation sign.
        let mut idx = 0;
        for i in 0..n {
            let li = lam[i];
            let lti = if TAN { lamt[i] } else { zero };
            for j in i + 1..n {
                let lj = lam[j];
                let es = e8[idx];
                let av = &mut a8[idx];
                if TAN {
                    let ltj = lamt[j];
                    let est = et8[idx];
                    let avt = &mut at8[idx];
                    for l in 0..BLOCK {
                        let pre = 0.5 * (li[l] + lj[l]) - es[l];
                        av[l] = 0.5 * (pre + pre.abs());
                        let mask = (pre > 0.0) as u8 as f64;
                        avt[l] = mask * (0.5 * (lti[l] + ltj[l]) - est[l]);
                    }
                } else {
                    for l in 0..BLOCK {
                        let pre = 0.5 * (li[l] + lj[l]) - es[l];
                        av[l] = 0.5 * (pre + pre.abs());
                    }
                }
                idx += 1;
            }
        }
    }
}

/// Block-major results of a batched forward pass.
pub struct LanesOutput {
    lanes: usize,
    stride: usize,
    a: Vec<f64>,
    a_tan: Option<Vec<f64>>,
}

impl LanesOutput {
    pub fn lanes(&self) -> usize {
        self.lanes
    }

    /// Value of edge `idx` in lane `l`.
    #[inline(always)]
    pub fn a(&self, idx: usize, l: usize) -> f64 {
        self.a[(l / BLOCK) * self.stride + idx * BLOCK + l % BLOCK]
    }

    /// Tangent of edge `idx` in lane `l`.
    #[inline(always)]
    pub fn a_tan(&self, idx: usize, l: usize) -> f64 {
        self.a_tan.as_ref().unwrap()[(l / BLOCK) * self.stride + idx * BLOCK + l % BLOCK]
    }

    pub fn has_tangent(&self) -> bool {
        self.a_tan.is_some()
    }

    /// Copy one lane out as a plain vector.
    pub fn lane_values(&self, l: usize) -> Vec<f64> {
        (0..self.stride / BLOCK).map(|idx| self.a(idx, l)).collect()
    }
}
