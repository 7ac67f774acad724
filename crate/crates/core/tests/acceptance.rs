//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints the measured quantities next to its thresholds; the heavyweight
//! posterior fit is shared across criteria through lazy fixtures.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! measurements of passing criteria as well.

use bgsl_core::dataset::Dataset;
use bgsl_core::diagnostics::split_rhat_ess;
use bgsl_core::graph::{edge_count, DegreeOperator, EdgeVector};
use bgsl_core::hmc::{fit_posterior, hmc_sample, HmcConfig, PosteriorSamples};
use bgsl_core::posterior::{LogDensityGrad, PosteriorDensity};
use bgsl_core::predict::{evaluate_dataset, DatasetEvaluation};
use bgsl_core::prior::PriorTriple;
use bgsl_core::scaling::{scale_theta, ScaleAnchor};
use bgsl_core::solver::{dpg_solve, gsl_objective, pds_solve, DpgParams, PdsParams, SolveConfig};
use bgsl_core::synth::{
    analytic_distance, empirical_distance, gen_connected_graph, make_dataset,
    sample_smooth_signals, EnsembleSpec, InputKind,
};
use bgsl_core::unroll::UnrollConfig;
use bgsl_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::LazyLock;
use std::time::Instant;

const DEPTH: usize = 200;

fn rg13(n: usize) -> EnsembleSpec {
    EnsembleSpec::Rg {
        n,
        radius: 1.0 / 3.0,
    }
}

static TRAIN: LazyLock<Dataset<f64>> = LazyLock::new(|| {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    make_dataset(&rg13(20), 50, InputKind::Analytic, &mut rng).expect("train dataset")
});

static TEST: LazyLock<Dataset<f64>> = LazyLock::new(|| {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    make_dataset(&rg13(20), 100, InputKind::Analytic, &mut rng).expect("test dataset")
});

fn paper_hmc(seed: u64) -> HmcConfig {
    HmcConfig {
        seed,
        ..HmcConfig::default()
    }
}

/// The criterion-4 fit: informative prior, depth 200, default sampler
/// settings (4 chains x (500 warmup + 1000 draws), 32 leapfrog steps).
static FIT: LazyLock<PosteriorSamples> = LazyLock::new(|| {
    let density = PosteriorDensity {
        data: &TRAIN,
        prior: PriorTriple::altered(),
        unroll: UnrollConfig::with_depth(DEPTH),
    };
    fit_posterior(&density, &paper_hmc(7)).expect("criterion-4 fit")
});

static C4_EVAL: LazyLock<DatasetEvaluation> = LazyLock::new(|| {
    evaluate_dataset(&FIT, &TEST, &UnrollConfig::with_depth(DEPTH), 99).expect("c4 evaluation")
});

fn twenty_inputs() -> Vec<EdgeVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    (0..20)
        .map(|_| {
            let g = gen_connected_graph(&rg13(20), &mut rng).expect("connected draw");
            analytic_distance(&g).expect("analytic input")
        })
        .collect()
}

#[test]
fn c01_solver_equivalence() {
    let cfg = SolveConfig::default();
    let mut worst = 0.0f64;
    for e in twenty_inputs() {
        let dpg = dpg_solve(&e, &DpgParams::new(1.0, 1.0), &cfg).unwrap();
        let pds = pds_solve(
            &e,
            &PdsParams {
                alpha: 1.0,
                beta: 1.0,
                gamma: 0.1,
            },
            &cfg,
        )
        .unwrap();
        let rel = dpg.a_star.distance(&pds.a_star) / dpg.a_star.norm();
        worst = worst.max(rel);
    }
    println!("criterion 1: max relative l2 distance DPG vs PDS = {worst:.3e} (<= 1e-3)");
    assert!(worst <= 1e-3, "solver mismatch {worst}");
}

#[test]
fn c02_pds_divergence_detection() {
    let cfg = SolveConfig::default();
    let mut iters = Vec::new();
    for e in twenty_inputs() {
        match pds_solve(
            &e,
            &PdsParams {
                alpha: 1.0,
                beta: 1.0,
                gamma: 0.3,
            },
            &cfg,
        ) {
            Err(Error::Divergence { iter }) => iters.push(iter),
            other => panic!("expected divergence at gamma = 0.3, got {other:?}"),
        }
    }
    println!(
        "criterion 2: all 20 inputs diverged, first detection between iterations {} and {}",
        iters.iter().min().unwrap(),
        iters.iter().max().unwrap()
    );
}

/// Exhaustive coarse grid over [0, 3]^3 followed by a local refinement to
/// step 1e-3. The objective is strictly convex, so the refinement brackets
/// the grid optimum.
fn grid_oracle_n3(e: &EdgeVector<f64>) -> f64 {
    let h = 0.01;
    let k = 301usize;
    let ev = e.values();
    // ln of every representable degree x + y on the coarse grid.
    let ln_table: Vec<f64> = (0..2 * k - 1)
        .map(|s| {
            if s == 0 {
                f64::NEG_INFINITY
            } else {
                (s as f64 * h).ln()
            }
        })
        .collect();
    let lin: Vec<f64> = (0..k).map(|i| i as f64 * h).collect();
    let sq: Vec<f64> = lin.iter().map(|v| v * v).collect();

    let mut best = f64::INFINITY;
    let mut best_idx = (0usize, 0usize, 0usize);
    for ix in 0..k {
        let ex = 2.0 * lin[ix] * ev[0] + sq[ix];
        for iy in 0..k {
            let exy = ex + 2.0 * lin[iy] * ev[1] + sq[iy] - ln_table[ix + iy];
            for iz in 0..k {
                let obj = exy + 2.0 * lin[iz] * ev[2] + sq[iz]
                    - ln_table[ix + iz]
                    - ln_table[iy + iz];
                if obj < best {
                    best = obj;
                    best_idx = (ix, iy, iz);
                }
            }
        }
    }

    // Refine on the 1e-3 grid within two coarse cells of the coarse optimum.
    let fine = 1e-3;
    let exact = |x: f64, y: f64, z: f64| -> f64 {
        let degs = [x + y, x + z, y + z];
        if degs.iter().any(|&d| d <= 0.0) {
            return f64::INFINITY;
        }
        2.0 * (x * ev[0] + y * ev[1] + z * ev[2]) + x * x + y * y + z * z
            - degs.iter().map(|d| d.ln()).sum::<f64>()
    };
    let range = |c: usize| {
        let center = (c * 10) as i64;
        (center - 20).max(0)..=(center + 20).min(3000)
    };
    for ix in range(best_idx.0) {
        for iy in range(best_idx.1) {
            for iz in range(best_idx.2) {
                let obj = exact(ix as f64 * fine, iy as f64 * fine, iz as f64 * fine);
                if obj < best {
                    best = obj;
                }
            }
        }
    }
    best
}

#[test]
fn c03_grid_oracle_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let cfg = SolveConfig::default();
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..5 {
        let e = EdgeVector::new((0..3).map(|_| rng.gen_range(0.1..2.0)).collect(), 3).unwrap();
        let sol = dpg_solve(&e, &DpgParams::new(1.0, 1.0), &cfg).unwrap();
        let solver_obj = gsl_objective(&sol.a_star, &e, 1.0, 1.0);
        let oracle_obj = grid_oracle_n3(&e);
        worst_gap = worst_gap.max(solver_obj - oracle_obj);
    }
    println!("criterion 3: max objective gap solver - oracle = {worst_gap:.3e} (<= 1e-4)");
    assert!(worst_gap <= 1e-4, "objective gap {worst_gap}");
}

#[test]
fn c04_iid_generalization() {
    let eval = &*C4_EVAL;
    println!(
        "criterion 4: NLL {:.3} (in [9, 13]), Brier {:.4e} (in [1.0e-2, 1.8e-2]), \
         Error {:.3}% (<= 2.5), ECE {:.3e} (<= 8e-3)",
        eval.mean_nll, eval.mean_brier, eval.mean_error_pct, eval.ece
    );
    assert!(
        (9.0..=13.0).contains(&eval.mean_nll),
        "NLL {} outside [9, 13]",
        eval.mean_nll
    );
    assert!(
        (1.0e-2..=1.8e-2).contains(&eval.mean_brier),
        "Brier {} outside [1.0e-2, 1.8e-2]",
        eval.mean_brier
    );
    assert!(
        eval.mean_error_pct <= 2.5,
        "error {}% above 2.5%",
        eval.mean_error_pct
    );
    assert!(eval.ece <= 8e-3, "ECE {} above 8e-3", eval.ece);
}

#[test]
fn c05_label_mismatch_ordering() {
    let unroll = UnrollConfig::with_depth(DEPTH);
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let rg_half = make_dataset(
        &EnsembleSpec::Rg { n: 20, radius: 0.5 },
        100,
        InputKind::Analytic,
        &mut rng,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let er_half = make_dataset(
        &EnsembleSpec::Er { n: 20, p: 0.5 },
        100,
        InputKind::Analytic,
        &mut rng,
    )
    .unwrap();
    let nll_rg13 = C4_EVAL.mean_nll;
    let nll_rg12 = evaluate_dataset(&FIT, &rg_half, &unroll, 99).unwrap().mean_nll;
    let nll_er12 = evaluate_dataset(&FIT, &er_half, &unroll, 99).unwrap().mean_nll;
    println!(
        "criterion 5: NLL(ER_1/2) {nll_er12:.2} > NLL(RG_1/2) {nll_rg12:.2} > NLL(RG_1/3) {nll_rg13:.2}"
    );
    assert!(nll_er12 > nll_rg12, "{nll_er12} vs {nll_rg12}");
    assert!(nll_rg12 > nll_rg13, "{nll_rg12} vs {nll_rg13}");
}

#[test]
fn c06_covariate_shift_monotone() {
    let unroll = UnrollConfig::with_depth(DEPTH);
    let p_grid = [10usize, 100, 1000, 10_000];
    // Nested signal subsets per test graph couple the evaluations, isolating
    // the effect of the sample count.
    let signals: Vec<_> = TEST
        .labels()
        .enumerate()
        .map(|(k, graph)| {
            let mut rng = ChaCha8Rng::seed_from_u64(9000);
            rng.set_stream(k as u64);
            sample_smooth_signals(graph, *p_grid.last().unwrap(), &mut rng).unwrap()
        })
        .collect();
    let mut nlls = Vec::new();
    for &p in &p_grid {
        let pairs: Vec<_> = signals
            .iter()
            .zip(TEST.labels())
            .map(|(x, label)| {
                let sub = x.columns(0, p).into_owned();
                (empirical_distance(&sub, true).unwrap(), label.clone())
            })
            .collect();
        let data = Dataset::new(20, pairs).unwrap();
        nlls.push(evaluate_dataset(&FIT, &data, &unroll, 99).unwrap().mean_nll);
    }
    println!("criterion 6: NLL over P in {{10, 1e2, 1e3, 1e4}} = {nlls:.3?} (non-increasing)");
    for w in nlls.windows(2) {
        assert!(w[1] <= w[0], "NLL increased with more signals: {nlls:?}");
    }
}

/// Rescale the held-out inputs so the converged dual variable at θ = 1
/// averages 17, the calibration the reference pipeline documents for its
/// own inputs. Sparse regimes freeze the primal pattern long before the
/// dual settles, so convergence here watches both iterates.
fn calibrated_check_inputs() -> (Vec<EdgeVector<f64>>, f64) {
    let inputs: Vec<EdgeVector<f64>> = TRAIN.inputs().take(5).cloned().collect();
    let limit_lambda = |e: &EdgeVector<f64>| -> f64 {
        let n = e.n();
        let mut a = EdgeVector::constant(n, 0.5);
        let mut lam = vec![17.0; n];
        for _ in 0..100_000 {
            let (a1, l1, _) = bgsl_core::solver::dpg_step(&a, &lam, e).unwrap();
            let da = a1.distance(&a) / a1.norm().max(1e-30);
            let dl: f64 = l1
                .iter()
                .zip(&lam)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                / l1.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-30);
            a = a1;
            lam = l1;
            if da < 1e-9 && dl < 1e-9 {
                break;
            }
        }
        lam.iter().sum::<f64>() / n as f64
    };
    let mean_limit_lambda = |scale: f64| -> f64 {
        inputs.iter().map(|e| limit_lambda(&e.scale(scale))).sum::<f64>() / inputs.len() as f64
    };
    let (mut lo, mut hi) = (5.0, 120.0);
    for _ in 0..15 {
        let mid = 0.5 * (lo + hi);
        if mean_limit_lambda(mid) < 17.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    (inputs.iter().map(|e| e.scale(scale)).collect(), scale)
}

#[test]
fn c07_predictive_check_bands() {
    use bgsl_core::checks::prior_predictive_check;
    let (inputs, scale) = calibrated_check_inputs();
    let unroll = UnrollConfig::with_depth(DEPTH);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let altered =
        prior_predictive_check(&PriorTriple::altered(), &inputs, 10_000, &unroll, &mut rng)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let original =
        prior_predictive_check(&PriorTriple::original(), &inputs, 10_000, &unroll, &mut rng)
            .unwrap();
    let fa = altered.band_fraction(0.75, 1.0);
    let fo = original.band_fraction(0.75, 1.0);
    println!(
        "criterion 7: input scale {scale:.1} (limiting dual = 17 at theta = 1); \
         altered band {fa:.3} (in 0.12 +/- 0.05), original band {fo:.3} (in 0.04 +/- 0.03)"
    );
    assert!(
        (0.07..=0.17).contains(&fa),
        "altered-prior band fraction {fa}"
    );
    assert!(
        (0.01..=0.07).contains(&fo),
        "original-prior band fraction {fo}"
    );
}

#[test]
fn c08_prior_ablation_at_t1() {
    let unroll = UnrollConfig::with_depth(DEPTH);
    let train1 = Dataset::new(20, TRAIN.pairs()[..1].to_vec()).unwrap();

    let fit_with = |prior: PriorTriple| {
        let density = PosteriorDensity {
            data: &train1,
            prior,
            unroll,
        };
        let start = Instant::now();
        let samples = fit_posterior(&density, &paper_hmc(7)).expect("t1 fit");
        (samples, start.elapsed().as_secs_f64())
    };
    let (informative, t_inf) = fit_with(PriorTriple::altered());
    let (uninformative, t_unf) = fit_with(PriorTriple::uninformative());

    let eval_inf = evaluate_dataset(&informative, &TEST, &unroll, 99).unwrap();
    let eval_unf = evaluate_dataset(&uninformative, &TEST, &unroll, 99).unwrap();
    println!(
        "criterion 8: informative NLL {:.3} ECE {:.3e} time {:.1}s | \
         uninformative NLL {:.3} ECE {:.3e} time {:.1}s",
        eval_inf.mean_nll, eval_inf.ece, t_inf, eval_unf.mean_nll, eval_unf.ece, t_unf
    );
    assert!(
        eval_inf.mean_nll <= eval_unf.mean_nll,
        "informative NLL {} vs uninformative {}",
        eval_inf.mean_nll,
        eval_unf.mean_nll
    );
    assert!(
        eval_inf.ece <= eval_unf.ece,
        "informative ECE {} vs uninformative {}",
        eval_inf.ece,
        eval_unf.ece
    );
    assert!(
        t_inf < t_unf,
        "informative fit took {t_inf}s, uninformative {t_unf}s"
    );
}

#[test]
fn c09_error_uncertainty_correlation() {
    let r = C4_EVAL.correlation;
    println!(
        "criterion 9: Pearson r(error, pred stdv) overall {:.3} (>= 0.6), \
         label-1 edges {:.3}, label-0 edges {:.3}",
        r.overall, r.true_positive, r.true_negative
    );
    assert!(r.overall >= 0.6, "correlation {}", r.overall);
}

/// Mean F1 of thresholded solver outputs against the labels.
fn mean_f1(data: &Dataset<f64>, theta: f64, cfg: &SolveConfig) -> f64 {
    let mut total = 0.0;
    for (e, labels) in data.pairs() {
        let sol = dpg_solve(e, &DpgParams::new(theta, 1.0), cfg).unwrap();
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fnn = 0.0;
        for (&w, &a) in sol.a_star.values().iter().zip(labels.values()) {
            let predicted = w > 1e-5;
            match (predicted, a == 1.0) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fnn += 1.0,
                (false, false) => {}
            }
        }
        total += if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fnn) } else { 0.0 };
    }
    total / data.len() as f64
}

fn best_theta(data: &Dataset<f64>, grid: &[f64], cfg: &SolveConfig) -> f64 {
    use rayon::prelude::*;
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&theta| (theta, mean_f1(data, theta, cfg)))
        .collect();
    scores
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0
}

#[test]
fn c10_scaling_law() {
    let cfg = SolveConfig {
        max_iter: 30_000,
        rel_tol: 1e-6,
    };
    // Grid spacing factor ~1.33, comfortably below the factor-2 acceptance.
    let grid: Vec<f64> = (0..29)
        .map(|k| 10f64.powf(-2.0 + 3.5 * k as f64 / 28.0))
        .collect();
    let er = |n: usize| EnsembleSpec::Er { n, p: 0.25 };
    // The size-transfer law moves parameters between problem sizes at a
    // fixed data distribution; the raw expected distances of this ensemble
    // shrink like 1/n, so each input is standardized to unit mean entry to
    // keep the entry scale stationary across sizes.
    let data_for = |n: usize, t: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = make_dataset(&er(n), t, InputKind::Analytic, &mut rng).unwrap();
        let pairs: Vec<_> = raw
            .pairs()
            .iter()
            .map(|(e, a)| {
                let mean = e.values().iter().sum::<f64>() / e.len() as f64;
                (e.scale(1.0 / mean), a.clone())
            })
            .collect();
        Dataset::new(n, pairs).unwrap()
    };

    let anchor_data = data_for(20, 10, 606);
    let theta_20 = best_theta(&anchor_data, &grid, &cfg);
    let anchor = ScaleAnchor::from_theta_delta(20, theta_20, 1.0);

    for (n, t, seed) in [(50usize, 8usize, 607u64), (200, 6, 608)] {
        let data = data_for(n, t, seed);
        let theta_n = best_theta(&data, &grid, &cfg);
        let predicted = scale_theta(&anchor, n).unwrap();
        let ratio = theta_n / predicted;
        println!(
            "criterion 10: n={n}: grid-optimal theta {theta_n:.4}, scaled from anchor {predicted:.4}, \
             ratio {ratio:.2} (within [0.5, 2])"
        );
        assert!(
            (0.5..=2.0).contains(&ratio),
            "n={n}: ratio {ratio} outside factor 2"
        );
    }
}

struct StdNormal3;

impl LogDensityGrad for StdNormal3 {
    fn dim(&self) -> usize {
        3
    }

    fn value_and_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (
            -0.5 * z.iter().map(|x| x * x).sum::<f64>(),
            z.iter().map(|x| -x).collect(),
        )
    }
}

#[test]
fn c11_property_suites() {
    // Forward-mode gradient against central finite differences.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pairs: Vec<_> = (0..3)
            .map(|_| {
                let g = gen_connected_graph(&rg13(10), &mut rng).unwrap();
                (analytic_distance(&g).unwrap(), g)
            })
            .collect();
        let data = Dataset::new(10, pairs).unwrap();
        let density = PosteriorDensity {
            data: &data,
            prior: PriorTriple::altered(),
            unroll: UnrollConfig::with_depth(50),
        };
        let z = [0.2, 3.5, 1.8];
        let (_, grad) = density.value_and_grad(z);
        let mut worst = 0.0f64;
        for k in 0..3 {
            let h = 1e-5;
            let (mut zp, mut zm) = (z, z);
            zp[k] += h;
            zm[k] -= h;
            let fd = (density.value(zp) - density.value(zm)) / (2.0 * h);
            worst = worst.max((grad[k] - fd).abs() / fd.abs().max(1.0));
        }
        println!("criterion 11a: gradient vs finite differences, rel error {worst:.2e} (<= 1e-4)");
        assert!(worst <= 1e-4);
    }

    // Degree-operator adjoint identity at n = 200.
    {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let op = DegreeOperator::new(n);
        let a = EdgeVector::new(
            (0..edge_count(n)).map(|_| rng.gen::<f64>()).collect(),
            n,
        )
        .unwrap();
        let lambda: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let lhs: f64 = op
            .apply(&a)
            .unwrap()
            .iter()
            .zip(&lambda)
            .map(|(&d, &l)| d * l)
            .sum();
        let rhs: f64 = op
            .apply_adjoint(&lambda)
            .unwrap()
            .values()
            .iter()
            .zip(a.values())
            .map(|(&s, &w)| s * w)
            .sum();
        let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
        println!("criterion 11b: adjoint identity rel error {rel:.2e} (<= 1e-12)");
        assert!(rel <= 1e-12);
    }

    // Analytic distance equals effective resistance via direct solves.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let g = gen_connected_graph(&EnsembleSpec::Er { n: 12, p: 0.3 }, &mut rng).unwrap();
            let analytic = analytic_distance(&g).unwrap();
            let l = bgsl_core::graph::laplacian(&g);
            let reduced = l.view((0, 0), (11, 11)).into_owned().lu();
            for (idx, i, j) in (0..12)
                .flat_map(|i| (i + 1..12).map(move |j| (i, j)))
                .enumerate()
                .map(|(idx, (i, j))| (idx, i, j))
            {
                let mut rhs = nalgebra::DVector::zeros(11);
                if i < 11 {
                    rhs[i] = 1.0;
                }
                if j < 11 {
                    rhs[j] = -1.0;
                }
                let sol = reduced.solve(&rhs).unwrap();
                let r = (if i < 11 { sol[i] } else { 0.0 }) - (if j < 11 { sol[j] } else { 0.0 });
                worst = worst.max((analytic.values()[idx] - r).abs() / r.abs().max(1.0));
            }
        }
        println!("criterion 11c: resistance-distance agreement rel error {worst:.2e} (<= 1e-10)");
        assert!(worst <= 1e-10);
    }

    // HMC recovers standard-normal moments.
    {
        let cfg = HmcConfig {
            leapfrog_steps: 16,
            seed: 42,
            ..HmcConfig::default()
        };
        let inits = vec![vec![0.5; 3], vec![-0.5; 3], vec![1.0; 3], vec![-1.0; 3]];
        let runs = hmc_sample(&StdNormal3, &cfg, &inits).unwrap();
        let all: Vec<&Vec<f64>> = runs.iter().flat_map(|r| r.draws.iter()).collect();
        let m = all.len() as f64;
        let mut worst_mean = 0.0f64;
        let mut worst_var = 0.0f64;
        for k in 0..3 {
            let mean = all.iter().map(|z| z[k]).sum::<f64>() / m;
            let var =
                all.iter().map(|z| (z[k] - mean) * (z[k] - mean)).sum::<f64>() / (m - 1.0);
            worst_mean = worst_mean.max(mean.abs());
            worst_var = worst_var.max((var - 1.0).abs());
        }
        println!(
            "criterion 11d: gaussian target |mean| {worst_mean:.3} (<= 0.05), |var - 1| {worst_var:.3} (<= 0.1)"
        );
        assert!(worst_mean <= 0.05);
        assert!(worst_var <= 0.1);
    }

    // Mixing diagnostics of the criterion-4 fit.
    {
        let d = &FIT.diagnostics;
        println!(
            "criterion 11e: split R-hat (theta, delta, b) = ({:.3}, {:.3}, {:.3}) (<= 1.05); \
             ESS = ({:.0}, {:.0}, {:.0}) (>= 400)",
            d.theta.split_rhat,
            d.delta.split_rhat,
            d.b.split_rhat,
            d.theta.ess,
            d.delta.ess,
            d.b.ess
        );
        for p in [&d.theta, &d.delta, &d.b] {
            assert!(p.split_rhat <= 1.05, "split R-hat {}", p.split_rhat);
            assert!(p.ess >= 400.0, "ESS {}", p.ess);
        }
        // The same numbers recomputed from the raw draws.
        for k in 0..3 {
            let again = split_rhat_ess(&FIT.param_chains(k)).unwrap();
            assert!(again.split_rhat <= 1.05);
        }
    }

    // Sample covariance of smooth signals approaches the pseudoinverse.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let g = gen_connected_graph(&EnsembleSpec::Er { n: 10, p: 0.4 }, &mut rng).unwrap();
        let p = 100_000;
        let x = sample_smooth_signals(&g, p, &mut rng).unwrap();
        let pinv = bgsl_core::graph::laplacian_pinv(&g);
        let cov = &x * x.transpose() / p as f64;
        let rel = (&cov - &pinv).norm() / pinv.norm();
        println!("criterion 11f: signal covariance vs pseudoinverse rel error {rel:.3} (<= 0.05)");
        assert!(rel <= 0.05);
    }
}
