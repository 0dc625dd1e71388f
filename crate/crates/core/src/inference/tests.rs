use ndarray::{array, Array1, Array2};

use super::*;
use crate::model::{fixed_order_logdensity_1hl, predict, Activation, ModelConfig, Ordering, Parameters};
use crate::numerics::{log_sum_exp, sample_permutation, Rng};

fn jittered(cfg: &ModelConfig, seed: u64, scale: f64) -> Parameters<f64> {
    let mut rng = Rng::new(seed);
    let mut p = Parameters::init(cfg, &mut rng).unwrap();
    let flat: Vec<f64> = p.to_flat().iter().map(|v| v + scale * rng.normal()).collect();
    p.set_flat(&flat).unwrap();
    p
}

fn all_binary(dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((1 << dim, dim), |(r, c)| ((r >> c) & 1) as f64)
}

/// Per-step forward passes through the full network, no incremental state.
fn naive_logdensity(p: &Parameters<f64>, x: &Array1<f64>, order: &Ordering) -> f64 {
    (0..order.dim())
        .map(|d| {
            let pred = predict(p, x.view(), &order.context(d)).unwrap();
            pred.conditional_logdensity(x[order.at(d)], order.at(d)).unwrap().0
        })
        .sum()
}

#[test]
fn binary_joint_sums_to_one_under_every_ordering() {
    let cfg = ModelConfig::binary(6, &[7, 5]);
    let p = jittered(&cfg, 3, 0.3);
    let xs = all_binary(6);
    let mut rng = Rng::new(11);
    for _ in 0..5 {
        let order = sample_permutation(&mut rng, 6);
        let ll = logdensities(&p, xs.view(), &order).unwrap();
        let total: f64 = ll.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }
}

#[test]
fn incremental_matches_naive_forward_passes() {
    let mut rng = Rng::new(5);
    for (cfg, seed) in [
        (ModelConfig::binary(7, &[6]), 1),
        (ModelConfig::binary(7, &[6, 4, 3]).with_activation(Activation::Sigmoid), 2),
        (ModelConfig::mog(4, &[5, 5], 3), 3),
        (ModelConfig::binary(5, &[4]).with_input_masks(false), 4),
    ] {
        let p = jittered(&cfg, seed, 0.4);
        for _ in 0..4 {
            let order = sample_permutation(&mut rng, cfg.dim);
            let x = Array1::from_shape_fn(cfg.dim, |_| match cfg.head {
                crate::model::HeadKind::Binary => rng.below(2) as f64,
                _ => rng.normal(),
            });
            let fast = logdensity(&p, x.view(), &order).unwrap().0;
            let slow = naive_logdensity(&p, &x, &order);
            assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
        }
    }
}

#[test]
fn agrees_with_recursive_single_layer_evaluation() {
    let cfg = ModelConfig::binary(8, &[9]).with_input_masks(false);
    let p = jittered(&cfg, 8, 0.5);
    let mut rng = Rng::new(2);
    for _ in 0..20 {
        let order = sample_permutation(&mut rng, 8);
        let x = Array1::from_shape_fn(8, |_| rng.below(2) as f64);
        let a = logdensity(&p, x.view(), &order).unwrap().0;
        let b = fixed_order_logdensity_1hl(&p, x.view(), &order).unwrap().0;
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn conditionals_chain_to_the_joint() {
    let cfg = ModelConfig::mog(5, &[6], 2);
    let p = jittered(&cfg, 4, 0.3);
    let xs = Array2::from_shape_fn((9, 5), |(r, c)| ((r * 5 + c) as f64).sin());
    let order = Ordering::new(vec![3, 0, 4, 1, 2]).unwrap();
    let full = logdensities(&p, xs.view(), &order).unwrap();
    let head = prefix_logdensities(&p, xs.view(), &order, 0..2).unwrap();
    let tail = prefix_logdensities(&p, xs.view(), &order, 2..5).unwrap();
    for n in 0..9 {
        assert!((full[n] - head[n] - tail[n]).abs() < 1e-12);
    }
}

#[test]
fn rows_past_the_prefix_are_ignored() {
    let cfg = ModelConfig::binary(5, &[4]);
    let p = jittered(&cfg, 6, 0.5);
    let order = Ordering::new(vec![2, 4, 0, 1, 3]).unwrap();
    let a = array![[1.0, 0.0, 1.0, 0.0, 0.0]];
    let b = array![[0.0, 1.0, 1.0, 1.0, 0.0]];
    let la = prefix_logdensities(&p, a.view(), &order, 0..2).unwrap();
    let lb = prefix_logdensities(&p, b.view(), &order, 0..2).unwrap();
    assert_eq!(la, lb);
}

/// `log p(targets | conditioned)` by summing the joint over every completion.
fn brute_query(p: &Parameters<f64>, q: &Query<f64>, order: &Ordering) -> f64 {
    let dim = p.dim();
    let xs = all_binary(dim);
    let joint = logdensities(p, xs.view(), order).unwrap();
    let agrees = |row: usize, set: &[(usize, f64)]| set.iter().all(|&(i, v)| xs[[row, i]] == v);
    let num: Vec<f64> = (0..xs.nrows())
        .filter(|&r| agrees(r, &q.conditioned) && agrees(r, &q.targets))
        .map(|r| joint[r])
        .collect();
    let den: Vec<f64> = (0..xs.nrows()).filter(|&r| agrees(r, &q.conditioned)).map(|r| joint[r]).collect();
    log_sum_exp(&num) - log_sum_exp(&den)
}

#[test]
fn query_matches_enumeration() {
    let cfg = ModelConfig::binary(6, &[8, 6]);
    let p = jittered(&cfg, 9, 0.4);
    let mut rng = Rng::new(21);
    let queries = [
        Query::new(vec![(1, 1.0), (4, 0.0)], vec![(0, 1.0), (5, 1.0)]),
        Query::new(vec![], vec![(2, 0.0), (3, 1.0)]),
        Query::new(vec![(0, 0.0)], vec![(1, 1.0)]),
        Query::new(vec![(2, 1.0), (3, 1.0), (5, 0.0)], vec![(0, 0.0), (1, 0.0), (4, 1.0)]),
    ];
    for q in &queries {
        let order = q.ordering(6, &mut rng).unwrap();
        let fast = query_logdensity_with(&p, q, &order).unwrap().0;
        let slow = brute_query(&p, q, &order);
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    }
}

#[test]
fn query_rejects_overlap_and_wrong_order() {
    let cfg = ModelConfig::binary(4, &[3]);
    let p = jittered(&cfg, 1, 0.1);
    let bad = Query::new(vec![(1, 1.0)], vec![(1, 0.0)]);
    assert!(query_logdensity(&p, &bad, &mut Rng::new(0)).is_err());
    let q = Query::new(vec![(1, 1.0)], vec![(2, 0.0)]);
    let order = Ordering::new(vec![2, 1, 0, 3]).unwrap();
    assert!(query_logdensity_with(&p, &q, &order).is_err());
    let empty = Query::new(vec![(0, 1.0)], vec![]);
    assert_eq!(query_logdensity(&p, &empty, &mut Rng::new(0)).unwrap().0, 0.0);
}

#[test]
fn impute_marginal_matches_enumeration() {
    let cfg = ModelConfig::binary(6, &[7]);
    let p = jittered(&cfg, 12, 0.5);
    let x = array![1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let observed = [4, 0, 2];
    let mut rng = Rng::new(3);
    let imp = impute(&p, x.view(), &observed, &mut rng, 50).unwrap();
    let q = Query::new(vec![], observed.iter().map(|&i| (i, x[i])).collect());
    let slow = brute_query(&p, &q, &imp.ordering);
    assert!((imp.marginal.0 - slow).abs() < 1e-10);
    assert_eq!(imp.completions.nrows(), 50);
    for row in imp.completions.rows() {
        for &i in &observed {
            assert_eq!(row[i], x[i]);
        }
        assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
    }
}

#[test]
fn impute_with_nothing_missing_returns_the_input() {
    let cfg = ModelConfig::mog(3, &[4], 2);
    let p = jittered(&cfg, 2, 0.2);
    let x = array![0.1, -0.7, 1.3];
    let imp = impute(&p, x.view(), &[0, 1, 2], &mut Rng::new(1), 3).unwrap();
    let full = logdensity(&p, x.view(), &imp.ordering).unwrap().0;
    assert!((imp.marginal.0 - full).abs() < 1e-12);
    for row in imp.completions.rows() {
        assert_eq!(row, x);
    }
}

#[test]
fn sampler_frequencies_match_density() {
    let cfg = ModelConfig::binary(3, &[5]);
    let p = jittered(&cfg, 17, 1.0);
    let order = Ordering::new(vec![2, 0, 1]).unwrap();
    let n = 40_000;
    let samples = sample_n(&p, &order, n, &mut Rng::new(99)).unwrap();
    let mut counts = [0usize; 8];
    for row in samples.rows() {
        counts[(row[0] + 2.0 * row[1] + 4.0 * row[2]) as usize] += 1;
    }
    let xs = all_binary(3);
    let probs = logdensities(&p, xs.view(), &order).unwrap().mapv(f64::exp);
    for k in 0..8 {
        let freq = counts[k] as f64 / n as f64;
        let se = (probs[k] * (1.0 - probs[k]) / n as f64).sqrt();
        assert!((freq - probs[k]).abs() < 4.0 * se + 1e-12, "{k}: {freq} vs {}", probs[k]);
    }
}

#[test]
fn zero_model_samples_fair_bits() {
    let cfg = ModelConfig::binary(4, &[3]);
    let p = Parameters::<f64>::zeros(&cfg).unwrap();
    let order = Ordering::identity(4);
    let samples = sample_n(&p, &order, 25_000, &mut Rng::new(4)).unwrap();
    let ones = samples.iter().filter(|&&v| v == 1.0).count() as f64 / 100_000.0;
    assert!((0.494..=0.506).contains(&ones), "{ones}");
}

#[test]
fn mog_density_integrates_to_one() {
    let cfg = ModelConfig::mog(1, &[4], 3);
    let p = jittered(&cfg, 7, 0.3);
    let order = Ordering::identity(1);
    let (lo, hi, n) = (-30.0, 30.0, 60_000);
    let h = (hi - lo) / n as f64;
    let grid = Array2::from_shape_fn((n + 1, 1), |(i, _)| lo + h * i as f64);
    let dens = logdensities(&p, grid.view(), &order).unwrap().mapv(f64::exp);
    let simpson: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * dens[i]
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((simpson - 1.0).abs() < 1e-6, "{simpson}");
}

#[test]
fn mog_prefix_equals_integrated_joint() {
    let cfg = ModelConfig::mog(2, &[5], 2);
    let p = jittered(&cfg, 13, 0.3);
    let order = Ordering::new(vec![1, 0]).unwrap();
    let x1 = 0.4;
    let (lo, hi, n) = (-30.0, 30.0, 60_000);
    let h = (hi - lo) / n as f64;
    let grid = Array2::from_shape_fn((n + 1, 2), |(i, c)| if c == 1 { x1 } else { lo + h * i as f64 });
    let dens = logdensities(&p, grid.view(), &order).unwrap().mapv(f64::exp);
    let integral: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * dens[i]
        })
        .sum::<f64>()
        * h
        / 3.0;
    let marginal = prefix_logdensities(&p, grid.view(), &order, 0..1).unwrap()[0].exp();
    assert!((integral - marginal).abs() < 1e-5, "{integral} vs {marginal}");
}

#[test]
fn ensemble_dominates_mean_of_orderings() {
    let cfg = ModelConfig::binary(6, &[5]);
    let p = jittered(&cfg, 23, 0.8);
    let mut rng = Rng::new(8);
    let xs = Array2::from_shape_fn((40, 6), |_| rng.below(2) as f64);
    let report = avg_test_loglik(&p, xs.view(), 8, &mut rng).unwrap();
    assert!(report.ensemble >= report.mean);
    let per_example = mix_logliks(report.logliks.view());
    for n in 0..40 {
        let col = report.logliks.column(n);
        assert!(per_example[n] >= col.mean().unwrap() - 1e-12);
    }
    assert!((report.ensemble_of(8) - report.ensemble).abs() < 1e-12);
}

#[test]
fn ensemble_of_repeated_ordering_is_that_ordering() {
    let cfg = ModelConfig::binary(4, &[3]);
    let p = jittered(&cfg, 1, 0.5);
    let o = Ordering::new(vec![3, 1, 0, 2]).unwrap();
    let spec = EnsembleSpec::new(vec![o.clone(), o.clone(), o.clone()], 0).unwrap();
    let x = array![1.0, 1.0, 0.0, 1.0];
    let e = ensemble_logdensity(&p, x.view(), &spec).unwrap().0;
    let s = logdensity(&p, x.view(), &o).unwrap().0;
    assert!((e - s).abs() < 1e-12);
}

#[test]
fn report_statistics_by_hand() {
    let logliks = array![[-1.0, -3.0], [-2.0, -4.0], [-3.0, -2.0]];
    let r = EvalReport::from_logliks(0, vec![], logliks);
    assert_eq!(r.per_ordering, vec![-2.0, -3.0, -2.5]);
    assert!((r.mean + 2.5).abs() < 1e-15);
    assert!((r.ordering_sd - 0.5).abs() < 1e-15);
    let single = EvalReport::from_logliks(0, vec![], array![[-1.0, -2.0]]);
    assert_eq!(single.ordering_sd, 0.0);
    assert_eq!(single.ensemble, single.mean);
}

#[test]
fn ensemble_sampling_records_picks() {
    let cfg = ModelConfig::binary(3, &[2]);
    let p = jittered(&cfg, 3, 0.2);
    let mut rng = Rng::new(1);
    let orderings: Vec<Ordering> = (0..4).map(|_| sample_permutation(&mut rng, 3)).collect();
    let (xs, picks) = sample_ensemble(&p, &orderings, 200, &mut rng).unwrap();
    assert_eq!(xs.nrows(), 200);
    assert!(picks.iter().all(|&k| k < 4));
    assert!((0..4).all(|k| picks.contains(&k)));
}
