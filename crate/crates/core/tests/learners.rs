use bicog::data::{Example, ExampleId, OracleTable};
use bicog::learners::{
    knn_predict, samples_of, BaseLearner, CentroidLearner, KnnLearner, LearnerError,
    LogisticConfig, LogisticLearner, NoisyOracleConfig, NoisyOracleLearner, Query, Sample, View,
};
use bicog::rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_examples(seed: u64, n: usize, dim: usize, classes: usize) -> Vec<Example<f64>> {
    let mut r = rng::stream(seed, &[]);
    (0..n)
        .map(|i| {
            let y = i % classes;
            let x = (0..dim)
                .map(|d| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z + if d % classes == y { 2.0 } else { 0.0 }
                })
                .collect();
            Example::labeled(i as u64, x, y)
        })
        .collect()
}

fn logistic_with_random_weights(
    seed: u64,
    classes: usize,
    dim: usize,
    l2: f64,
) -> LogisticLearner<f64> {
    let cfg = LogisticConfig {
        l2,
        ..Default::default()
    };
    let mut model = LogisticLearner::new(classes, dim, &cfg);
    let mut r = rng::stream(seed, &[1]);
    let w = (0..classes * dim)
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    let b = (0..classes).map(|_| r.random_range(-1.0..1.0)).collect();
    model.set_parameters(w, b).unwrap();
    model
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-6;
    for seed in 0..5u64 {
        let (classes, dim) = (3 + seed as usize % 2, 4);
        let data = random_examples(seed, 12, dim, classes);
        let train = samples_of(&data);
        let model = logistic_with_random_weights(seed, classes, dim, 0.05);
        let g = model.loss_and_gradient(&train).unwrap();
        let (w0, b0) = (model.weights().to_vec(), model.bias().to_vec());
        let loss_at = |w: Vec<f64>, b: Vec<f64>| {
            let mut m = model.clone();
            m.set_parameters(w, b).unwrap();
            m.loss_and_gradient(&train).unwrap().loss
        };
        for i in 0..w0.len() {
            let (mut up, mut down) = (w0.clone(), w0.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (loss_at(up, b0.clone()) - loss_at(down, b0.clone())) / (2.0 * h);
            assert!(
                relative_error(fd, g.weights[i]) <= 1e-5,
                "weight {i}: fd {fd} vs {}",
                g.weights[i]
            );
        }
        for i in 0..b0.len() {
            let (mut up, mut down) = (b0.clone(), b0.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (loss_at(w0.clone(), up) - loss_at(w0.clone(), down)) / (2.0 * h);
            assert!(
                relative_error(fd, g.bias[i]) <= 1e-5,
                "bias {i}: fd {fd} vs {}",
                g.bias[i]
            );
        }
    }
}

#[test]
fn small_steps_never_raise_the_loss() {
    let data = random_examples(7, 40, 5, 3);
    let train = samples_of(&data);
    let mut model = logistic_with_random_weights(7, 3, 5, 0.01);
    let losses = model.fit(&train, 200, 1e-2).unwrap();
    for pair in losses.windows(2) {
        assert!(
            pair[1] <= pair[0],
            "loss rose from {} to {}",
            pair[0],
            pair[1]
        );
    }
    assert!(losses.last().unwrap() < &losses[0]);
}

fn brute_force_knn(train: &[Sample<'_, f64>], x: &[f64], k: usize, classes: usize) -> usize {
    let mut all: Vec<(f64, u64, usize)> = train
        .iter()
        .map(|s| {
            let d: f64 = s
                .features
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, s.id.0, s.label)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0; classes];
    for &(_, _, y) in &all[..k] {
        votes[y] += 1;
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best).unwrap()
}

#[test]
fn knn_agrees_with_exhaustive_scan() {
    let mut r = rng::stream(11, &[]);
    // Integer grid points so distance ties actually occur.
    let data: Vec<Example<f64>> = (0..60)
        .map(|i| {
            let x = vec![r.random_range(0..6) as f64, r.random_range(0..6) as f64];
            Example::labeled(i, x, r.random_range(0..4))
        })
        .collect();
    let train = samples_of(&data);
    let mut learner = KnnLearner::new(4, 2, 5);
    learner.pretrain(&train).unwrap();
    for q in 0..200u64 {
        let x = vec![r.random_range(-1..7) as f64, r.random_range(-1..7) as f64];
        let want = brute_force_knn(&train, &x, 5, 4);
        assert_eq!(knn_predict(&train, &x, 5, 4).unwrap(), want);
        let query = Query {
            id: ExampleId(1000 + q),
            features: &x,
            round: 0,
            view: View::Original,
        };
        assert_eq!(learner.predict(&query), want, "query {x:?}");
    }
}

#[test]
fn knn_rejects_bad_k() {
    let data = random_examples(1, 3, 2, 2);
    let train = samples_of(&data);
    assert_eq!(
        knn_predict(&train, &[0.0, 0.0], 4, 2),
        Err(LearnerError::KTooLarge { k: 4, size: 3 })
    );
    assert_eq!(
        knn_predict(&train, &[0.0, 0.0], 0, 2),
        Err(LearnerError::ZeroK)
    );
}

#[test]
fn centroid_of_two_points() {
    let data = vec![
        Example::labeled(0, vec![0.0, 0.0], 0),
        Example::labeled(1, vec![2.0, 0.0], 0),
        Example::labeled(2, vec![5.0, 5.0], 1),
    ];
    let mut c = CentroidLearner::new(2, 2);
    c.pretrain(&samples_of(&data)).unwrap();
    assert_eq!(c.centroid(0).unwrap(), &[1.0, 0.0]);
}

fn oracle(classes: usize, data: &[Example<f64>]) -> NoisyOracleLearner {
    let truth = OracleTable::from_pairs(data.iter().map(|e| (e.id, e.label.unwrap())));
    NoisyOracleLearner::new(
        classes,
        NoisyOracleConfig {
            accuracy: vec![0.8],
            seed: 3,
            ..Default::default()
        },
        truth,
    )
}

fn fitted_family_members(data: &[Example<f64>]) -> Vec<Box<dyn BaseLearner<f64>>> {
    let train = samples_of(data);
    let mut out: Vec<Box<dyn BaseLearner<f64>>> = vec![
        Box::new(LogisticLearner::new(3, 4, &LogisticConfig::default())),
        Box::new(CentroidLearner::new(3, 4)),
        Box::new(KnnLearner::new(3, 4, 3)),
        Box::new(oracle(3, data)),
    ];
    for l in out.iter_mut() {
        l.pretrain(&train).unwrap();
    }
    out
}

#[test]
fn batch_prediction_is_elementwise() {
    let data = random_examples(5, 30, 4, 3);
    let queries: Vec<_> = data
        .iter()
        .flat_map(|e| {
            [View::Original, View::Weak, View::Strong].map(|view| Query {
                id: e.id,
                features: &e.features,
                round: 2,
                view,
            })
        })
        .collect();
    for learner in fitted_family_members(&data) {
        let batch = learner.predict_batch(&queries);
        let single: Vec<usize> = queries.iter().map(|q| learner.predict(q)).collect();
        assert_eq!(batch, single, "{:?}", learner.family());
    }
}

#[test]
fn snapshot_restores_predictions() {
    let data = random_examples(9, 30, 4, 3);
    let shifted = random_examples(10, 30, 4, 3)
        .into_iter()
        .map(|mut e| {
            e.label = e.label.map(|y| (y + 1) % 3);
            e
        })
        .collect::<Vec<_>>();
    let queries: Vec<_> = data.iter().map(|e| Query::original(e, 0)).collect();
    for mut learner in fitted_family_members(&data) {
        let before = learner.predict_batch(&queries);
        let snap = learner.snapshot();
        learner.fine_tune(&samples_of(&shifted), 50, 0.5).unwrap();
        learner.restore(snap.as_ref()).unwrap();
        assert_eq!(
            learner.predict_batch(&queries),
            before,
            "{:?}",
            learner.family()
        );
    }
    let mut logistic = LogisticLearner::<f64>::new(3, 4, &LogisticConfig::default());
    let centroid = CentroidLearner::<f64>::new(3, 4);
    assert_eq!(
        logistic.restore(&centroid),
        Err(LearnerError::SnapshotMismatch)
    );
}

#[test]
fn oracle_accuracy_within_binomial_bound() {
    let n = 10_000u64;
    let truth = OracleTable::from_pairs((0..n).map(|i| (ExampleId(i), (i % 5) as usize)));
    let learner = NoisyOracleLearner::new(
        5,
        NoisyOracleConfig {
            accuracy: vec![0.9],
            seed: 42,
            ..Default::default()
        },
        truth,
    );
    let correct = (0..n)
        .filter(|&i| {
            learner.predict_for_truth((i % 5) as usize, i, 1, View::Original) == (i % 5) as usize
        })
        .count();
    let rate = correct as f64 / n as f64;
    let sigma = (0.9 * 0.1 / n as f64).sqrt();
    assert!((rate - 0.9).abs() <= 3.0 * sigma, "accuracy {rate}");
}
