use std::any::Any;
use std::collections::BTreeSet;

use bicog::learners::{
    BaseLearner, LearnerError, LearnerFamily, LogisticConfig, LogisticLearner, NoisyOracleConfig,
    NoisyOracleLearner, Query, Sample, View,
};
use bicog::orchestrator::{self, Outcome, RoundMode};
use bicog::state::StateError;
use bicog::{AugmentConfig, Augmentor, Dataset, EnsembleState, Example, RunConfig};

/// Reads its answers from the example id. Labeled ids below `wrong[round]`
/// are answered with the next class; the strong view always flips.
#[derive(Clone)]
struct Scripted {
    classes: usize,
    labeled: u64,
    wrong: Vec<u64>,
}

impl Scripted {
    fn truth(&self, id: u64) -> usize {
        id as usize % self.classes
    }
}

impl BaseLearner<f64> for Scripted {
    fn family(&self) -> LearnerFamily {
        LearnerFamily::NoisyOracle
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn pretrain(&mut self, _: &[Sample<'_, f64>]) -> Result<(), LearnerError> {
        Ok(())
    }

    fn fine_tune(&mut self, _: &[Sample<'_, f64>], _: usize, _: f64) -> Result<(), LearnerError> {
        Ok(())
    }

    fn predict(&self, q: &Query<'_, f64>) -> usize {
        let id = q.id.0;
        let y = self.truth(id);
        let wrong = self.wrong[(q.round as usize).min(self.wrong.len() - 1)];
        let base = if id < self.labeled && id < wrong {
            (y + 1) % self.classes
        } else {
            y
        };
        match q.view {
            View::Strong => (base + 1) % self.classes,
            _ => base,
        }
    }

    fn snapshot(&self) -> Box<dyn BaseLearner<f64>> {
        Box::new(self.clone())
    }

    fn restore(&mut self, s: &dyn BaseLearner<f64>) -> Result<(), LearnerError> {
        *self = s
            .as_any()
            .downcast_ref::<Self>()
            .ok_or(LearnerError::SnapshotMismatch)?
            .clone();
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Ids `0..labeled` are labeled, the next `unlabeled` are not, then 20 test rows.
fn dataset(classes: usize, labeled: u64, unlabeled: u64) -> Dataset<f64> {
    let row = |id: u64| Example::labeled(id, vec![id as f64], id as usize % classes);
    let l: Vec<_> = (0..labeled).map(row).collect();
    let u: Vec<_> = (labeled..labeled + unlabeled).map(row).collect();
    let t: Vec<_> = (labeled + unlabeled..labeled + unlabeled + 20)
        .map(row)
        .collect();
    Dataset::try_from_splits(1, classes, (0..classes).collect::<BTreeSet<_>>(), l, u, t).unwrap()
}

fn scripted_state(classes: usize, labeled: u64, wrong: Vec<u64>) -> EnsembleState<f64> {
    let learners: Vec<Box<dyn BaseLearner<f64>>> = (0..3)
        .map(|_| {
            Box::new(Scripted {
                classes,
                labeled,
                wrong: wrong.clone(),
            }) as Box<dyn BaseLearner<f64>>
        })
        .collect();
    EnsembleState::new(learners).unwrap()
}

fn oracle_state(d: &Dataset<f64>, configs: Vec<NoisyOracleConfig>) -> EnsembleState<f64> {
    let truth = d
        .oracle_access()
        .extend_from(d.labeled())
        .extend_from(d.test());
    let learners = configs
        .into_iter()
        .map(|c| {
            Box::new(NoisyOracleLearner::new(d.num_classes(), c, truth.clone()))
                as Box<dyn BaseLearner<f64>>
        })
        .collect();
    EnsembleState::new(learners).unwrap()
}

fn oracle_cfg(seed: u64, accuracy: f64, schedule: Option<Vec<f64>>) -> NoisyOracleConfig {
    NoisyOracleConfig {
        accuracy: vec![accuracy],
        schedule,
        seed,
        ..Default::default()
    }
}

fn identity_augmentor() -> Augmentor<f64> {
    let cfg = AugmentConfig {
        weak_noise_sigma: 0.0,
        strong_noise_sigma: 0.0,
        strong_dropout_prob: 0.0,
        seed: 0,
    };
    Augmentor::absolute(cfg, 1).unwrap()
}

fn warmed(mut state: EnsembleState<f64>, d: &Dataset<f64>, cfg: &RunConfig) -> EnsembleState<f64> {
    orchestrator::warmup(&mut state, d, cfg).unwrap();
    state
}

#[test]
fn warmup_resets_bookkeeping() {
    let d = dataset(4, 20, 40);
    let cfg = RunConfig::default();
    let mut state = warmed(scripted_state(4, 20, vec![2]), &d, &cfg);
    assert_eq!(state.round, 0);
    assert!(state
        .prev_error
        .iter()
        .all(|e| *e.numer() * 2 == *e.denom()));
    assert!(state.prev_count.iter().all(|&l| l == 0));
    orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
    orchestrator::warmup(&mut state, &d, &cfg).unwrap();
    assert_eq!((state.round, state.prev_count.clone()), (0, vec![0, 0, 0]));
}

#[test]
fn zero_warmup_leaves_learners_unchanged() {
    let rows: Vec<_> = (0..12u64)
        .map(|i| Example::labeled(i, vec![i as f64, 1.0], (i % 3) as usize))
        .collect();
    let d = Dataset::from_splits(
        2,
        3,
        (0..3).collect(),
        rows[..6].to_vec(),
        rows[6..].to_vec(),
        vec![],
    );
    let learners: Vec<Box<dyn BaseLearner<f64>>> = (0..3)
        .map(|_| {
            Box::new(LogisticLearner::new(3, 2, &LogisticConfig::default()))
                as Box<dyn BaseLearner<f64>>
        })
        .collect();
    let mut state = EnsembleState::new(learners).unwrap();
    let cfg = RunConfig {
        warmup_epochs: 0,
        ..Default::default()
    };
    orchestrator::warmup(&mut state, &d, &cfg).unwrap();
    for l in &state.learners {
        let w = l.as_any().downcast_ref::<LogisticLearner<f64>>().unwrap();
        assert!(w.weights().iter().chain(w.bias()).all(|&v| v == 0.0));
    }
}

#[test]
fn bootstrap_from_half_to_one_fifth() {
    // Every peer pair is wrong on 2 of 10 labeled rows, so the estimate is 0.2.
    let d = dataset(3, 10, 10);
    let cfg = RunConfig::default();
    let mut state = warmed(scripted_state(3, 10, vec![2]), &d, &cfg);
    let history = orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
    assert_eq!(history.len(), 2);
    for m in &history[0].models {
        assert_eq!(m.outcome, Outcome::Updated);
        assert_eq!(m.measured_error, Some(0.2));
        assert!(m.bootstrapped);
        // floor(0.2 / 0.3) + 1 = 1, then ceil(2.5 * 1 - 1) = 2.
        assert_eq!(
            (m.count_floor, m.budget, m.selected_size),
            (Some(1), Some(2), Some(2))
        );
        assert_eq!(
            (m.inter_size, m.intra_size, m.pl_size),
            (Some(10), Some(10), Some(10))
        );
        assert_eq!(m.pseudo_label_accuracy, Some(1.0));
    }
    assert!(history[1]
        .models
        .iter()
        .all(|m| m.outcome == Outcome::ErrorNotImproved));
    assert_eq!(state.prev_count, vec![2, 2, 2]);
}

#[test]
fn bootstrap_floor_must_be_exceeded() {
    // Estimate 0.4: floor(0.4 / 0.1) + 1 = 5 and ceil(1.25 * 5 - 1) = 6.
    let cfg = RunConfig::default();
    let d = dataset(3, 10, 10);
    let mut state = warmed(scripted_state(3, 10, vec![4]), &d, &cfg);
    let history = orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
    let m = &history[0].models[0];
    assert_eq!(
        (m.count_floor, m.budget, m.selected_size),
        (Some(5), Some(6), Some(6))
    );

    let small = dataset(3, 10, 5);
    let mut state = warmed(scripted_state(3, 10, vec![4]), &small, &cfg);
    let history = orchestrator::run(&mut state, &small, &cfg, &identity_augmentor()).unwrap();
    assert_eq!(history.len(), 1);
    assert!(history[0]
        .models
        .iter()
        .all(|m| m.outcome == Outcome::BudgetNotAbove));
    assert_eq!(state.prev_count, vec![0, 0, 0]);
}

#[test]
fn rising_error_skips_selection() {
    let d = dataset(3, 10, 10);
    let cfg = RunConfig::default();
    let mut state = warmed(scripted_state(3, 10, vec![2, 2, 3]), &d, &cfg);
    let history = orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
    assert_eq!(history.len(), 2);
    for m in &history[1].models {
        assert_eq!(m.outcome, Outcome::ErrorNotImproved);
        assert_eq!(m.measured_error, Some(0.3));
        assert_eq!(
            (m.budget, m.inter_size, m.selected_size),
            (None, None, None)
        );
    }
}

#[test]
fn static_oracles_stop_after_two_rounds() {
    let d = dataset(4, 200, 1000);
    for seeds in [[1, 2, 3], [10, 20, 30], [7, 8, 9]] {
        let cfg = RunConfig::default();
        let state = oracle_state(
            &d,
            seeds.iter().map(|&s| oracle_cfg(s, 0.9, None)).collect(),
        );
        let mut state = warmed(state, &d, &cfg);
        let history = orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
        assert_eq!(history.len(), 2);
        assert_eq!(history[0].updates, 3);
        assert_eq!(history[1].updates, 0);
        assert!(history[1]
            .models
            .iter()
            .all(|m| m.outcome == Outcome::ErrorNotImproved));
    }
}

#[test]
fn improving_schedule_gives_four_rounds() {
    let d = dataset(4, 1000, 2000);
    let schedule = Some(vec![0.6, 0.7, 0.8, 0.9]);
    for seeds in [[1, 2, 3], [4, 5, 6], [11, 12, 13]] {
        let cfg = RunConfig::default();
        let state = oracle_state(
            &d,
            seeds
                .iter()
                .map(|&s| oracle_cfg(s, 0.5, schedule.clone()))
                .collect(),
        );
        let mut state = warmed(state, &d, &cfg);
        let history = orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap();
        let updates: Vec<usize> = history.iter().map(|r| r.updates).collect();
        assert_eq!(updates, vec![3, 3, 3, 0], "seeds {seeds:?}");
    }
}

#[test]
fn snapshot_mode_matches_sequential_for_fixed_learners() {
    let d = dataset(4, 200, 1000);
    let schedule = Some(vec![0.6, 0.7, 0.8, 0.9]);
    let run = |mode: RoundMode| {
        let cfg = RunConfig {
            round_mode: mode,
            ..Default::default()
        };
        let state = oracle_state(
            &d,
            (1..=3)
                .map(|s| oracle_cfg(s, 0.5, schedule.clone()))
                .collect(),
        );
        let mut state = warmed(state, &d, &cfg);
        orchestrator::run(&mut state, &d, &cfg, &identity_augmentor()).unwrap()
    };
    assert_eq!(run(RoundMode::Sequential), run(RoundMode::Snapshot));
}

#[test]
fn max_rounds_zero_is_empty() {
    let d = dataset(3, 10, 10);
    let cfg = RunConfig {
        max_rounds: 0,
        ..Default::default()
    };
    let mut state = warmed(scripted_state(3, 10, vec![2]), &d, &cfg);
    assert!(
        orchestrator::run(&mut state, &d, &cfg, &identity_augmentor())
            .unwrap()
            .is_empty()
    );
}

#[test]
fn fewer_than_three_models_rejected() {
    let two: Vec<Box<dyn BaseLearner<f64>>> = (0..2)
        .map(|_| {
            Box::new(LogisticLearner::new(2, 1, &LogisticConfig::default()))
                as Box<dyn BaseLearner<f64>>
        })
        .collect();
    assert!(matches!(
        EnsembleState::new(two),
        Err(StateError::TooFewModels(2))
    ));
    let cfg = RunConfig {
        k: 2,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
    let d = dataset(3, 10, 10);
    let mut state = scripted_state(3, 10, vec![2]);
    let four = RunConfig {
        k: 4,
        ..Default::default()
    };
    assert!(orchestrator::warmup(&mut state, &d, &four).is_err());
}

fn blob_like(seed: u64) -> Dataset<f64> {
    use rand::Rng;
    let mut r = bicog::rng::stream(seed, &[]);
    let mut rows = Vec::new();
    for id in 0..300u64 {
        let y = (id % 3) as usize;
        let x = vec![
            y as f64 * 2.0 + r.random_range(-1.5..1.5),
            r.random_range(-1.0..1.0),
        ];
        rows.push(Example::labeled(id, x, y));
    }
    let test = rows.split_off(240);
    let unlabeled = rows.split_off(12);
    Dataset::from_splits(2, 3, (0..3).collect(), rows, unlabeled, test)
}

fn logistic_run(seed: u64, mode: RoundMode) -> Vec<bicog::RoundRecord> {
    let d = blob_like(seed);
    let cfg = RunConfig {
        round_mode: mode,
        warmup_epochs: 10,
        selftrain_epochs: 10,
        seed,
        ..Default::default()
    };
    let learners = (0..3)
        .map(|j| {
            let mut l = LogisticLearner::new(3, 2, &LogisticConfig::default());
            let pre: Vec<Sample<'_, f64>> = d
                .labeled()
                .iter()
                .skip(j)
                .step_by(2)
                .filter_map(Sample::from_example)
                .collect();
            l.pretrain(&pre).unwrap();
            Box::new(l) as Box<dyn BaseLearner<f64>>
        })
        .collect();
    let mut state = warmed(EnsembleState::new(learners).unwrap(), &d, &cfg);
    let aug = Augmentor::fitted(AugmentConfig::default(), d.unlabeled(), 2).unwrap();
    orchestrator::run(&mut state, &d, &cfg, &aug).unwrap()
}

#[test]
fn identical_seeds_replay_exactly() {
    for mode in [RoundMode::Sequential, RoundMode::Snapshot] {
        let a = logistic_run(5, mode);
        assert!(!a.is_empty());
        assert_eq!(a, logistic_run(5, mode));
    }
}
