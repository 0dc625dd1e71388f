use ndarray::{s, Array1, Array2, Axis};
use oanade::data::{apply_stats, binarize, destandardize, format_matrix, parse_matrix, split, standardize, DataKind, Dataset};
use oanade::inference::{avg_test_loglik, impute, logdensities, query_logdensity_with, sample_n, Query};
use oanade::model::{ModelConfig, Ordering, Parameters};
use oanade::numerics::{log_sum_exp, sample_permutation, Rng};
use oanade::training::{pretrain_deep, train, TrainConfig};
use oanade::{Parameters32, Parameters64};

fn quick(seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: 4,
        updates_per_iteration: 50,
        minibatch_size: 20,
        initial_lr: 0.02,
        seed,
        ..TrainConfig::default()
    }
}

/// Two clusters of bit patterns with a little noise.
fn clustered_bits(n: usize, rng: &mut Rng) -> Dataset {
    let proto = [[1.0, 1.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 1.0, 1.0, 0.0, 1.0]];
    let values = Array2::from_shape_fn((n, 6), |(r, c)| {
        let bit = proto[r % 2][c];
        if rng.bernoulli(0.1) {
            1.0 - bit
        } else {
            bit
        }
    });
    Dataset::new(values, DataKind::Binary, "clusters").unwrap()
}

#[test]
fn binary_pipeline_beats_independent_bits() {
    let mut rng = Rng::new(1);
    let data = clustered_bits(600, &mut rng);
    let parts = split(&data, &[0.7, 0.15, 0.15], &mut Rng::new(2)).unwrap();
    let cfg = TrainConfig { iterations: 10, ..quick(3) };
    let out = train(&ModelConfig::binary(6, &[16]), parts[0].values.view(), parts[1].values.view(), &cfg).unwrap();
    let report = avg_test_loglik(&out.params, parts[2].values.view(), 4, &mut Rng::new(4)).unwrap();

    // each bit is exactly fair marginally, so independent bits score 6 ln 0.5
    assert!(report.mean > 6.0 * 0.5f64.ln() + 1.0, "{}", report.mean);
    assert!(report.ensemble >= report.mean);

    let first = out.history.rows[0].valid;
    let best = out.history.rows[out.best_iteration - 1].valid;
    assert!(best < first);
}

#[test]
fn text_round_trip_feeds_training() {
    let mut rng = Rng::new(5);
    let data = clustered_bits(40, &mut rng);
    let text = format_matrix(&data.values);
    let back = parse_matrix(&text).unwrap();
    assert_eq!(back, data.values);
    let reloaded = Dataset::new(back, DataKind::Binary, "text").unwrap();
    let out = train(&ModelConfig::binary(6, &[4]), reloaded.values.view(), reloaded.values.view(), &quick(6)).unwrap();
    assert_eq!(out.history.len(), 4);
}

#[test]
fn real_valued_pipeline_in_original_units() {
    let mut rng = Rng::new(7);
    let raw = Array2::from_shape_fn((400, 3), |(_, c)| 100.0 * (c + 1) as f64 + 5.0 * rng.normal());
    let data = Dataset::new(raw, DataKind::Real, "gaussian").unwrap();
    let parts = split(&data, &[0.8, 0.2], &mut Rng::new(8)).unwrap();
    let (train_set, stats) = standardize(&parts[0]).unwrap();
    let valid = apply_stats(&parts[1], &stats).unwrap();
    let cfg = TrainConfig { iterations: 6, initial_lr: 0.005, ..quick(9) };
    let out = train(&ModelConfig::mog(3, &[10], 3), train_set.values.view(), valid.values.view(), &cfg).unwrap();

    let report = avg_test_loglik(&out.params, valid.values.view(), 3, &mut Rng::new(10)).unwrap();
    // a standard normal per dimension scores about -1.42 nats each
    assert!(report.mean > -3.0 * 1.42 - 0.5, "{}", report.mean);

    let order = sample_permutation(&mut Rng::new(11), 3);
    let draws = sample_n(&out.params, &order, 2000, &mut Rng::new(12)).unwrap();
    let draws = Dataset::new(draws, DataKind::Real, "samples").unwrap();
    let original = destandardize(&draws, &stats).unwrap();
    let means = original.values.mean_axis(Axis(0)).unwrap();
    for (c, m) in means.iter().enumerate() {
        assert!((m - 100.0 * (c + 1) as f64).abs() < 2.0, "column {c}: {m}");
    }
}

#[test]
fn deep_model_trains_after_pretraining() {
    let mut rng = Rng::new(13);
    let data = clustered_bits(300, &mut rng);
    let cfg = TrainConfig { pretrain_iterations: 2, ..quick(14) };
    let model = ModelConfig::binary(6, &[8, 8, 6]);
    let out = pretrain_deep(&model, data.values.view(), data.values.slice(s![..60, ..]), &cfg).unwrap();
    assert_eq!(out.pretraining.len(), 2);
    assert_eq!(out.params.config(), &model);
    let total: f64 = logdensities(&out.params, all_bits(6).view(), &Ordering::identity(6))
        .unwrap()
        .iter()
        .map(|v| v.exp())
        .sum();
    assert!((total - 1.0).abs() < 1e-10);
}

fn all_bits(dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((1 << dim, dim), |(r, c)| ((r >> c) & 1) as f64)
}

#[test]
fn f32_model_tracks_f64() {
    let params: Parameters64 = Parameters::init(&ModelConfig::binary(6, &[10, 5]), &mut Rng::new(15)).unwrap();
    let narrow: Parameters32 = params.cast();
    let xs = all_bits(6);
    let order = sample_permutation(&mut Rng::new(16), 6);
    let wide = logdensities(&params, xs.view(), &order).unwrap();
    let short = logdensities(&narrow, xs.mapv(|v| v as f32).view(), &order).unwrap();
    for (a, b) in wide.iter().zip(short.iter()) {
        assert!((a - f64::from(*b)).abs() < 1e-4);
    }
}

#[test]
fn inpainting_agrees_with_query() {
    let params = Parameters::<f64>::init(&ModelConfig::binary(5, &[7]), &mut Rng::new(17)).unwrap();
    let x = Array1::from(vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    let filled = impute(&params, x.view(), &[0, 2], &mut Rng::new(18), 4).unwrap();
    assert_eq!(filled.completions.nrows(), 4);
    for row in filled.completions.rows() {
        assert_eq!((row[0], row[2]), (1.0, 1.0));
    }

    // the marginal is a query of the observed values with nothing conditioned
    let q = Query::new(vec![], vec![(0, 1.0), (2, 1.0)]);
    let direct = query_logdensity_with(&params, &q, &filled.ordering).unwrap();
    assert!((filled.marginal.nats() - direct.nats()).abs() < 1e-12);
    let joint = logdensities(&params, all_bits(5).view(), &filled.ordering).unwrap();
    let matching: Vec<f64> = (0..32).filter(|r| r & 1 == 1 && r >> 2 & 1 == 1).map(|r| joint[r]).collect();
    assert!((filled.marginal.nats() - log_sum_exp(&matching)).abs() < 1e-10);
}

#[test]
fn binarized_text_data_validates() {
    let raw = parse_matrix("0 5 9\n12 3 8\n").unwrap();
    let data = Dataset::new(raw, DataKind::Real, "raw").unwrap();
    let bits = binarize(&data, 8.0);
    assert_eq!(bits.values, ndarray::array![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]]);
    assert!(Dataset::new(ndarray::array![[0.5]], DataKind::Binary, "bad").is_err());
}
