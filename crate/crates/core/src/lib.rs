//! Ensemble self-training with bi-consistency pseudo-label selection.
//!
//! `K >= 3` base learners take turns as the target model. Its peers propose
//! pseudo-labels that they agree on by majority vote and that are stable under
//! weak augmentation but sensitive to strong augmentation. An error-aware gate
//! derived from a noisy-label PAC bound decides whether the target updates and
//! how many pseudo-labels it may use.
//!
//! ```no_run
//! use bicog::{orchestrator, Augmentor, AugmentConfig, EnsembleState, RunConfig};
//! # fn demo(dataset: bicog::DatasetF64, learners: Vec<Box<dyn bicog::BaseLearner<f64>>>) {
//! let cfg = RunConfig::default();
//! let augmentor = Augmentor::fitted(AugmentConfig::default(), dataset.labeled(), dataset.dim()).unwrap();
//! let mut state = EnsembleState::new(learners).unwrap();
//! orchestrator::warmup(&mut state, &dataset, &cfg).unwrap();
//! let history = orchestrator::run(&mut state, &dataset, &cfg, &augmentor).unwrap();
//! # let _ = history;
//! # }
//! ```

pub mod augment;
pub mod data;
pub mod learners;
pub mod metrics;
pub mod orchestrator;
pub mod pseudo;
pub mod rng;
pub mod scalar;
pub mod selector;
pub mod state;
pub mod theory;

pub use augment::{AugmentConfig, Augmentor};
pub use data::{
    make_open_world_split, validate_dataset, Dataset, Example, ExampleId, LabeledPool, OracleTable,
};
pub use learners::{BaseLearner, CentroidLearner, KnnLearner, LogisticLearner, NoisyOracleLearner};
pub use orchestrator::{RoundRecord, RunConfig};
pub use pseudo::{PseudoLabeledSet, Stage};
pub use scalar::{Field, Real};
pub use state::EnsembleState;

pub type Exact = num_rational::BigRational;

pub type ExampleF32 = Example<f32>;
pub type ExampleF64 = Example<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type DatasetF64 = Dataset<f64>;
pub type EnsembleF32 = EnsembleState<f32>;
pub type EnsembleF64 = EnsembleState<f64>;
pub type AugmentorF64 = Augmentor<f64>;
pub type LogisticF64 = LogisticLearner<f64>;
