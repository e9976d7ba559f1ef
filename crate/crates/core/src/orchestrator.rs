//! The self-training loop.
//!
//! Each round, every model `j` in turn measures the error of its peers'
//! majority on the labeled set. If that error improved on the one recorded
//! at `j`'s last update, the peers propose pseudo-labels, the error-aware
//! gate checks the lower bound and computes the budget, and `j` is
//! fine-tuned on the labeled set plus a subsample of the proposals. The loop
//! stops after a round without updates or at `max_rounds`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::Augmentor;
use crate::data::{Dataset, ExampleId};
use crate::learners::{samples_of, BaseLearner, LearnerError, Query, Sample};
use crate::metrics::{self, EvalReport, MetricsError};
use crate::pseudo::PseudoLabeledSet;
use crate::rng::{self, tag};
use crate::scalar::{Field, Real};
use crate::selector::{
    bootstrap_count, budget, inter_consistency, intersect, intra_from_views, lower_bound_ok,
    measure_error_from_predictions, predict_views, subsample, AugmentedViews, BudgetError,
    BudgetMode, ErrorPolicy, SelectError, ViewPredictions, VoteMode,
};
use crate::state::EnsembleState;

#[derive(Debug, Error, PartialEq)]
pub enum OrchestratorError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("config asks for {expected} models but the ensemble has {found}")]
    EnsembleSize { expected: usize, found: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundMode {
    /// Later models see peers already updated in the same round.
    #[default]
    Sequential,
    /// All models select against round-start peers.
    Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub k: usize,
    pub alpha: f64,
    pub warmup_epochs: usize,
    pub selftrain_epochs: usize,
    pub learning_rate: f64,
    pub max_rounds: u32,
    pub round_mode: RoundMode,
    pub vote_mode: VoteMode,
    pub budget_mode: BudgetMode,
    pub stratified: bool,
    pub error_policy: ErrorPolicy,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 3,
            alpha: 1.0,
            warmup_epochs: 20,
            selftrain_epochs: 20,
            learning_rate: 0.1,
            max_rounds: 50,
            round_mode: RoundMode::Sequential,
            vote_mode: VoteMode::Paper,
            budget_mode: BudgetMode::Theorem,
            stratified: false,
            error_policy: ErrorPolicy::ExcludeNoConsensus,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let fail = |m: String| Err(OrchestratorError::Config(m));
        if self.k < 3 {
            return fail(format!("k must be at least 3, got {}", self.k));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Updated,
    /// Peer error did not drop below `e'_j`.
    ErrorNotImproved,
    /// No labeled example had an accepted majority.
    NoConsensus,
    LowerBoundFailed,
    /// `min(budget, |D_PL|)` did not exceed the count floor.
    BudgetNotAbove,
}

/// One model's step within a round. Selection fields are `None` when the
/// gate stopped before selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRound {
    pub model: usize,
    pub outcome: Outcome,
    pub measured_error: Option<f64>,
    pub floor_applied: bool,
    pub prev_error: f64,
    pub prev_count: u64,
    /// `L'_j`, or the bootstrap value when `L'_j = 0`.
    pub count_floor: Option<u64>,
    pub bootstrapped: bool,
    pub budget: Option<u64>,
    pub inter_size: Option<usize>,
    pub intra_size: Option<usize>,
    pub pl_size: Option<usize>,
    pub selected_size: Option<usize>,
    pub inter_class_counts: Option<Vec<usize>>,
    pub pl_class_counts: Option<Vec<usize>>,
    pub selected_class_counts: Option<Vec<usize>>,
    pub pseudo_label_accuracy: Option<f64>,
    /// Mean accuracy of the individual peers on the selected examples.
    pub peer_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

impl ModelRound {
    fn new(model: usize, prev_error: Ratio<u64>, prev_count: u64) -> Self {
        Self {
            model,
            outcome: Outcome::ErrorNotImproved,
            measured_error: None,
            floor_applied: false,
            prev_error: *prev_error.numer() as f64 / *prev_error.denom() as f64,
            prev_count,
            count_floor: None,
            bootstrapped: false,
            budget: None,
            inter_size: None,
            intra_size: None,
            pl_size: None,
            selected_size: None,
            inter_class_counts: None,
            pl_class_counts: None,
            selected_class_counts: None,
            pseudo_label_accuracy: None,
            peer_accuracy: None,
            test_accuracy: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub models: Vec<ModelRound>,
    pub updates: usize,
    pub ensemble: EvalReport,
}

struct Predictions {
    labeled: Vec<usize>,
    views: ViewPredictions,
}

struct Plan {
    record: ModelRound,
    update: Option<(PseudoLabeledSet, Ratio<u64>)>,
}

struct RoundContext<'a, T: Real> {
    dataset: &'a Dataset<T>,
    cfg: &'a RunConfig,
    views: AugmentedViews<T>,
    truth: Vec<usize>,
    ids: Vec<ExampleId>,
    position: HashMap<ExampleId, usize>,
    round: u32,
}

fn exact(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl<'a, T: Real> RoundContext<'a, T> {
    fn new(
        dataset: &'a Dataset<T>,
        cfg: &'a RunConfig,
        augmentor: &Augmentor<T>,
        round: u32,
    ) -> Self {
        let ids: Vec<ExampleId> = dataset.unlabeled().iter().map(|e| e.id).collect();
        Self {
            dataset,
            cfg,
            views: AugmentedViews::build(augmentor, dataset.unlabeled(), round),
            truth: dataset.labeled().iter().filter_map(|e| e.label).collect(),
            position: ids.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
            ids,
            round,
        }
    }

    fn predict(&self, learner: &dyn BaseLearner<T>) -> Predictions {
        let queries: Vec<_> = self
            .dataset
            .labeled()
            .iter()
            .map(|e| Query::original(e, self.round))
            .collect();
        Predictions {
            labeled: learner.predict_batch(&queries),
            views: predict_views(learner, self.dataset.unlabeled(), &self.views),
        }
    }

    fn select(
        &self,
        j: usize,
        cache: &[Predictions],
        prev_error: Ratio<u64>,
        prev_count: u64,
    ) -> Result<Plan, OrchestratorError> {
        let cfg = self.cfg;
        let c = self.dataset.num_classes();
        let t = self.round;
        let mut record = ModelRound::new(j, prev_error, prev_count);
        let plan = |record: ModelRound| {
            Ok(Plan {
                record,
                update: None,
            })
        };
        let peers: Vec<&Predictions> = cache
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, p)| p)
            .collect();

        let peer_labeled: Vec<Vec<usize>> = peers.iter().map(|p| p.labeled.clone()).collect();
        let est = match measure_error_from_predictions(
            &self.truth,
            &peer_labeled,
            c,
            cfg.vote_mode,
            cfg.error_policy,
        ) {
            Ok(est) => est,
            Err(SelectError::NoConsensus) => {
                record.outcome = Outcome::NoConsensus;
                return plan(record);
            }
            Err(e) => return Err(e.into()),
        };
        record.measured_error = Some(est.rate_f64());
        record.floor_applied = est.floor_applied;
        if est.error_rate >= prev_error {
            record.outcome = Outcome::ErrorNotImproved;
            return plan(record);
        }

        let e_prev = exact(prev_error);
        let e_cur = exact(est.error_rate);
        let alpha = cfg.alpha.to_exact().ok_or(BudgetError::NotFinite)?;
        let floor = if prev_count == 0 {
            record.bootstrapped = true;
            bootstrap_count(e_prev.clone(), e_cur.clone(), t, alpha.clone())?
        } else if lower_bound_ok(e_prev.clone(), e_cur.clone(), t, alpha.clone(), prev_count) {
            prev_count
        } else {
            record.outcome = Outcome::LowerBoundFailed;
            return plan(record);
        };
        record.count_floor = Some(floor);
        let cap = budget(e_prev, e_cur, t, alpha, floor, cfg.budget_mode)?;
        record.budget = Some(cap);

        let originals: Vec<Vec<usize>> = peers.iter().map(|p| p.views.original.clone()).collect();
        let inter = inter_consistency(&self.ids, &originals, cfg.k, c, cfg.vote_mode)?;
        let view_refs: Vec<&ViewPredictions> = peers.iter().map(|p| &p.views).collect();
        let intra = intra_from_views(&self.ids, &view_refs);
        let pl = intersect(&inter, &intra);
        record.inter_size = Some(inter.len());
        record.intra_size = Some(intra.len());
        record.pl_size = Some(pl.len());
        record.inter_class_counts = Some(inter.class_counts(c));
        record.pl_class_counts = Some(pl.class_counts(c));

        let n = cap.min(pl.len() as u64);
        if n <= floor {
            record.outcome = Outcome::BudgetNotAbove;
            return plan(record);
        }
        let seed = rng::derive_seed(cfg.seed, &[tag::SUBSAMPLE, j as u64, t as u64]);
        let selected = subsample(&pl, n as usize, seed, cfg.stratified);
        record.selected_size = Some(selected.len());
        record.selected_class_counts = Some(selected.class_counts(c));
        record.pseudo_label_accuracy = metrics::pseudo_label_accuracy(&selected, self.dataset)?;

        let chosen: Vec<ExampleId> = selected.iter().map(|(id, _)| id).collect();
        let mut peer_total = 0.0;
        for p in &peers {
            let preds: Vec<usize> = chosen
                .iter()
                .map(|id| p.views.original[self.position[id]])
                .collect();
            peer_total += metrics::hidden_accuracy(&chosen, &preds, self.dataset)?.unwrap_or(0.0);
        }
        record.peer_accuracy = (!chosen.is_empty()).then(|| peer_total / peers.len() as f64);
        record.outcome = Outcome::Updated;
        Ok(Plan {
            record,
            update: Some((selected, est.error_rate)),
        })
    }

    fn fine_tune(
        &self,
        learner: &mut dyn BaseLearner<T>,
        selected: &PseudoLabeledSet,
    ) -> Result<(), LearnerError> {
        let unlabeled = self.dataset.unlabeled();
        let mut train = samples_of(self.dataset.labeled());
        train.extend(selected.iter().map(|(id, label)| Sample {
            id,
            features: &unlabeled[self.position[&id]].features,
            label,
        }));
        learner.fine_tune(
            &train,
            self.cfg.selftrain_epochs,
            T::from_f64_lossy(self.cfg.learning_rate),
        )
    }
}

fn check_size<T: Real>(state: &EnsembleState<T>, cfg: &RunConfig) -> Result<(), OrchestratorError> {
    cfg.validate()?;
    if state.k() != cfg.k {
        return Err(OrchestratorError::EnsembleSize {
            expected: cfg.k,
            found: state.k(),
        });
    }
    Ok(())
}

/// Fine-tunes every learner on the labeled set for `warmup_epochs` and resets
/// the bookkeeping.
pub fn warmup<T: Real>(
    state: &mut EnsembleState<T>,
    dataset: &Dataset<T>,
    cfg: &RunConfig,
) -> Result<(), OrchestratorError> {
    check_size(state, cfg)?;
    let train = samples_of(dataset.labeled());
    let lr = T::from_f64_lossy(cfg.learning_rate);
    state
        .learners
        .par_iter_mut()
        .try_for_each(|l| l.fine_tune(&train, cfg.warmup_epochs, lr))?;
    state.reset_bookkeeping();
    Ok(())
}

pub fn run_round<T: Real>(
    state: &mut EnsembleState<T>,
    dataset: &Dataset<T>,
    cfg: &RunConfig,
    augmentor: &Augmentor<T>,
) -> Result<RoundRecord, OrchestratorError> {
    check_size(state, cfg)?;
    state.round += 1;
    state.update_flags.fill(false);
    let ctx = RoundContext::new(dataset, cfg, augmentor, state.round);
    let mut cache: Vec<Predictions> = state
        .learners
        .par_iter()
        .map(|l| ctx.predict(l.as_ref()))
        .collect();
    let mut models = Vec::with_capacity(cfg.k);

    let apply = |state: &mut EnsembleState<T>, j: usize, plan: &Plan| {
        if let Some((selected, err)) = &plan.update {
            state.prev_error[j] = *err;
            state.prev_count[j] = selected.len() as u64;
            state.update_flags[j] = true;
        }
    };

    match cfg.round_mode {
        RoundMode::Sequential => {
            for j in 0..cfg.k {
                let plan = ctx.select(j, &cache, state.prev_error[j], state.prev_count[j])?;
                if let Some((selected, _)) = &plan.update {
                    ctx.fine_tune(state.learners[j].as_mut(), selected)?;
                    cache[j] = ctx.predict(state.learners[j].as_ref());
                }
                apply(state, j, &plan);
                models.push(plan.record);
            }
        }
        RoundMode::Snapshot => {
            let plans = (0..cfg.k)
                .into_par_iter()
                .map(|j| ctx.select(j, &cache, state.prev_error[j], state.prev_count[j]))
                .collect::<Result<Vec<_>, _>>()?;
            state
                .learners
                .par_iter_mut()
                .zip(plans.par_iter())
                .try_for_each(|(l, plan)| match &plan.update {
                    Some((selected, _)) => ctx.fine_tune(l.as_mut(), selected),
                    None => Ok(()),
                })?;
            for (j, plan) in plans.into_iter().enumerate() {
                apply(state, j, &plan);
                models.push(plan.record);
            }
        }
    }

    let t = state.round;
    for (m, l) in models.iter_mut().zip(&state.learners) {
        m.test_accuracy = metrics::evaluate_model(l.as_ref(), dataset, t)?.overall_accuracy;
    }
    let ensemble = metrics::evaluate_ensemble(&state.learner_refs(), dataset, t)?;
    Ok(RoundRecord {
        round: t,
        updates: state.update_flags.iter().filter(|&&u| u).count(),
        models,
        ensemble,
    })
}

/// Rounds until one makes no update or `max_rounds` is reached.
pub fn run<T: Real>(
    state: &mut EnsembleState<T>,
    dataset: &Dataset<T>,
    cfg: &RunConfig,
    augmentor: &Augmentor<T>,
) -> Result<Vec<RoundRecord>, OrchestratorError> {
    check_size(state, cfg)?;
    let mut history = Vec::new();
    while state.round < cfg.max_rounds {
        let record = run_round(state, dataset, cfg, augmentor)?;
        let done = record.updates == 0;
        history.push(record);
        if done {
            break;
        }
    }
    Ok(history)
}
