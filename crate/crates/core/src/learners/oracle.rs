use std::any::Any;

use serde::{Deserialize, Serialize};

use super::{restore_from, BaseLearner, LearnerError, LearnerFamily, Query, Sample, View};
use crate::data::OracleTable;
use crate::rng::{self, tag};
use crate::scalar::Real;

/// Where a wrong prediction lands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Uniform over the `C - 1` other classes.
    #[default]
    Uniform,
    /// Row `y` weights the wrong labels for true class `y`; the diagonal is ignored.
    Confusion(Vec<Vec<f64>>),
}

impl ErrorModel {
    /// Draws a wrong label for truth `y` from a uniform variate `u`.
    pub fn wrong_label(&self, y: usize, num_classes: usize, u: f64) -> usize {
        if num_classes < 2 {
            return y;
        }
        if let ErrorModel::Confusion(rows) = self {
            if let Some(row) = rows.get(y) {
                let total: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(c, &w)| c != y && c < num_classes && w > 0.0)
                    .map(|(_, &w)| w)
                    .sum();
                if total > 0.0 {
                    let mut target = u * total;
                    let mut last = y;
                    for (c, &w) in row.iter().enumerate().take(num_classes) {
                        if c == y || w <= 0.0 {
                            continue;
                        }
                        last = c;
                        if target < w {
                            return c;
                        }
                        target -= w;
                    }
                    return last;
                }
            }
        }
        let k = ((u * (num_classes - 1) as f64) as usize).min(num_classes - 2);
        if k >= y {
            k + 1
        } else {
            k
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoisyOracleConfig {
    /// Per-class accuracy `p_c`. A single entry applies to every class.
    pub accuracy: Vec<f64>,
    pub error_model: ErrorModel,
    /// Optional per-round accuracy for all classes; the last entry repeats.
    pub schedule: Option<Vec<f64>>,
    /// Probability that the weak view reproduces the original prediction.
    pub weak_keep: f64,
    /// Accuracy multiplier on the strong view.
    pub strong_scale: f64,
    pub seed: u64,
}

impl Default for NoisyOracleConfig {
    fn default() -> Self {
        Self {
            accuracy: vec![0.9],
            error_model: ErrorModel::Uniform,
            schedule: None,
            weak_keep: 0.95,
            strong_scale: 0.5,
            seed: 0,
        }
    }
}

/// Simulated learner that reads ground truth and errs at a controlled rate.
///
/// For truth `y` it predicts `y` with probability `p_y`. Draws use fixed
/// uniform variates per `(seed, id, view)`, so a round only changes a
/// prediction through the accuracy schedule; improving the schedule turns
/// wrong answers right and never the reverse. The weak view repeats the
/// original answer with probability `weak_keep`; the strong view is a fresh
/// draw at accuracy `p_y * strong_scale`.
#[derive(Clone, Debug)]
pub struct NoisyOracleLearner {
    num_classes: usize,
    config: NoisyOracleConfig,
    truth: OracleTable,
}

impl NoisyOracleLearner {
    pub fn new(num_classes: usize, config: NoisyOracleConfig, truth: OracleTable) -> Self {
        Self {
            num_classes,
            config,
            truth,
        }
    }

    pub fn config(&self) -> &NoisyOracleConfig {
        &self.config
    }

    pub fn accuracy(&self, class: usize, round: u32) -> f64 {
        if let Some(s) = self.config.schedule.as_ref().filter(|s| !s.is_empty()) {
            return s[(round as usize).min(s.len() - 1)];
        }
        match self.config.accuracy.len() {
            0 => 1.0,
            1 => self.config.accuracy[0],
            _ => self.config.accuracy.get(class).copied().unwrap_or(1.0),
        }
    }

    fn draw(&self, y: usize, p: f64, id: u64, view: View) -> usize {
        let seed = self.config.seed;
        let u = rng::unit(seed, &[tag::ORACLE, id, view.key(), 0]);
        if u < p {
            return y;
        }
        let w = rng::unit(seed, &[tag::ORACLE, id, view.key(), 1]);
        self.config.error_model.wrong_label(y, self.num_classes, w)
    }

    /// Prediction for a known truth label, without the lookup table.
    pub fn predict_for_truth(&self, y: usize, id: u64, round: u32, view: View) -> usize {
        let p = self.accuracy(y, round);
        match view {
            View::Original => self.draw(y, p, id, View::Original),
            View::Weak => {
                let keep = rng::unit(self.config.seed, &[tag::ORACLE, id, View::Weak.key(), 2]);
                if keep < self.config.weak_keep {
                    self.draw(y, p, id, View::Original)
                } else {
                    self.draw(y, p, id, View::Weak)
                }
            }
            View::Strong => self.draw(y, p * self.config.strong_scale, id, View::Strong),
        }
    }
}

impl<T: Real> BaseLearner<T> for NoisyOracleLearner {
    fn family(&self) -> LearnerFamily {
        LearnerFamily::NoisyOracle
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn pretrain(&mut self, _sample: &[Sample<'_, T>]) -> Result<(), LearnerError> {
        Ok(())
    }

    fn fine_tune(
        &mut self,
        _train: &[Sample<'_, T>],
        _epochs: usize,
        _learning_rate: T,
    ) -> Result<(), LearnerError> {
        Ok(())
    }

    fn predict(&self, query: &Query<'_, T>) -> usize {
        match self.truth.label(query.id) {
            Some(y) => self.predict_for_truth(y, query.id.0, query.round, query.view),
            None => 0,
        }
    }

    fn snapshot(&self) -> Box<dyn BaseLearner<T>> {
        Box::new(self.clone())
    }

    fn restore(&mut self, snapshot: &dyn BaseLearner<T>) -> Result<(), LearnerError> {
        restore_from::<T, _>(self, snapshot)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn uses_oracle(&self) -> bool {
        true
    }
}
