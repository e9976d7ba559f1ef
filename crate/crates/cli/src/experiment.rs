//! Per-seed experiment execution and report writing.

use std::path::{Path, PathBuf};

use bicog::data::{make_open_world_split, Example, LabeledPool};
use bicog::learners::{
    samples_of, BaseLearner, CentroidLearner, KnnLearner, LearnerFamily, LogisticLearner,
    NoisyOracleLearner, Sample,
};
use bicog::metrics::{self, EvalReport};
use bicog::rng::{self, tag};
use bicog::{orchestrator, Augmentor, Dataset, EnsembleState, RoundRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{DatasetSpec, ExperimentConfig, LearnerSlot};
use crate::csv_load::{read_csv, CsvTable};
use crate::generators::Generator;
use crate::reports::{self, Aggregate, SeedSummary};
use crate::CliError;

/// Loaded data source, shared by all seeds.
pub enum Source {
    Generator(Generator),
    Csv(CsvTable),
}

impl Source {
    pub fn load(cfg: &ExperimentConfig, seed: u64) -> Result<Self, CliError> {
        match &cfg.dataset {
            DatasetSpec::Generator { generator, params } => Ok(Source::Generator(
                Generator::new(*generator, params.clone(), seed)
                    .map_err(|e| CliError::Data(e.to_string()))?,
            )),
            DatasetSpec::Csv {
                path,
                feature_columns,
                label_column,
                split_column,
                ..
            } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let table = read_csv(file, feature_columns, label_column, split_column.as_deref())
                    .map_err(|e| CliError::Data(e.to_string()))?;
                Ok(Source::Csv(table))
            }
        }
    }

    pub fn label_names(&self) -> Option<Vec<String>> {
        match self {
            Source::Generator(_) => None,
            Source::Csv(t) => Some(t.label_names.clone()),
        }
    }
}

/// Moves a seeded `fraction` of the pool's training rows into its test split.
pub fn holdout(pool: &LabeledPool<f64>, fraction: f64, seed: u64) -> LabeledPool<f64> {
    let mut order: Vec<usize> = (0..pool.train.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::SPLIT_SHOTS, u64::MAX]));
    let n_test = (pool.train.len() as f64 * fraction).round() as usize;
    let test_rows: std::collections::HashSet<usize> = order[..n_test].iter().copied().collect();
    let (mut train, mut test) = (Vec::new(), pool.test.clone());
    for (i, ex) in pool.train.iter().enumerate() {
        if test_rows.contains(&i) {
            test.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    LabeledPool {
        dim: pool.dim,
        num_classes: pool.num_classes,
        train,
        test,
    }
}

pub fn build_dataset(
    cfg: &ExperimentConfig,
    source: &Source,
    seed: u64,
) -> Result<Dataset<f64>, CliError> {
    let data_err = |e: bicog::data::DataError| CliError::Data(e.to_string());
    let pool = match (source, &cfg.dataset) {
        (Source::Generator(g), _) => g.pool(seed),
        (
            Source::Csv(t),
            DatasetSpec::Csv {
                split_column,
                test_fraction,
                ..
            },
        ) => {
            if split_column.is_some() {
                let d = t
                    .dataset_from_split_column()
                    .ok_or_else(|| CliError::Data("split column missing values".into()))?;
                let violations = bicog::validate_dataset(&d);
                if !violations.is_empty() {
                    return Err(data_err(bicog::data::DataError::Invalid(violations)));
                }
                return Ok(d);
            }
            holdout(&t.pool(), *test_fraction, seed)
        }
        (Source::Csv(_), _) => return Err(CliError::Data("csv source without csv config".into())),
    };
    make_open_world_split(
        &pool,
        cfg.split.base_fraction,
        cfg.split.shots_per_class,
        seed,
    )
    .map_err(data_err)
}

fn pretrain_corpus(
    cfg: &ExperimentConfig,
    source: &Source,
    dataset: &Dataset<f64>,
    j: usize,
    seed: u64,
) -> Vec<Example<f64>> {
    match source {
        Source::Generator(g) => {
            let c = g.params().num_classes;
            let first_id = (1u64 << 40) + ((j as u64) << 24);
            let mut corpus = g.sample(
                &vec![cfg.pretrain.per_class; c],
                &[3, j as u64],
                seed,
                first_id,
            );
            let mut r = rng::stream(seed, &[tag::PRETRAIN, j as u64]);
            for ex in &mut corpus {
                if r.random::<f64>() < cfg.pretrain.label_noise {
                    ex.label = Some(r.random_range(0..c));
                }
            }
            corpus
        }
        Source::Csv(_) => dataset.labeled().to_vec(),
    }
}

fn make_learner(
    slot: &LearnerSlot,
    dataset: &Dataset<f64>,
    j: usize,
    seed: u64,
) -> Result<Box<dyn BaseLearner<f64>>, CliError> {
    let (c, d) = (dataset.num_classes(), dataset.dim());
    Ok(match slot.family {
        LearnerFamily::Logistic => Box::new(LogisticLearner::new(c, d, &slot.logistic)),
        LearnerFamily::Centroid => Box::new(CentroidLearner::new(c, d)),
        LearnerFamily::Knn => Box::new(KnnLearner::new(c, d, slot.knn_k)),
        LearnerFamily::NoisyOracle => {
            let mut oc = slot.oracle.clone();
            oc.seed = rng::derive_seed(seed, &[tag::ORACLE, j as u64, slot.oracle.seed]);
            let truth = dataset
                .oracle_access()
                .extend_from(dataset.labeled())
                .extend_from(dataset.test());
            Box::new(NoisyOracleLearner::new(c, oc, truth))
        }
    })
}

/// Pretrained ensemble for one seed.
pub fn build_ensemble(
    cfg: &ExperimentConfig,
    source: &Source,
    dataset: &Dataset<f64>,
    seed: u64,
) -> Result<EnsembleState<f64>, CliError> {
    let mut learners = Vec::with_capacity(cfg.run.k);
    for (j, slot) in cfg.expanded_learners().into_iter().enumerate() {
        let mut learner = make_learner(slot, dataset, j, seed)?;
        let corpus = pretrain_corpus(cfg, source, dataset, j, seed);
        let samples: Vec<Sample<'_, f64>> = samples_of(&corpus);
        learner
            .pretrain(&samples)
            .map_err(|e| CliError::Run(format!("pretraining model {j}: {e}")))?;
        learners.push(learner);
    }
    EnsembleState::new(learners).map_err(|e| CliError::Config(e.to_string()))
}

pub struct SeedRun {
    pub seed: u64,
    pub dataset: Dataset<f64>,
    pub baseline: EvalReport,
    pub baseline_models: Vec<f64>,
    pub history: Vec<RoundRecord>,
    pub final_report: EvalReport,
    pub final_models: Vec<f64>,
}

impl SeedRun {
    pub fn summary(&self) -> SeedSummary {
        SeedSummary {
            seed: self.seed,
            rounds: self.history.len(),
            baseline: self.baseline.clone(),
            final_report: self.final_report.clone(),
            baseline_model_accuracy: self.baseline_models.clone(),
            final_model_accuracy: self.final_models.clone(),
        }
    }
}

fn model_accuracies(
    state: &EnsembleState<f64>,
    dataset: &Dataset<f64>,
    round: u32,
) -> Result<Vec<f64>, CliError> {
    state
        .learners
        .iter()
        .map(|l| {
            metrics::evaluate_model(l.as_ref(), dataset, round)
                .map(|r| r.overall_accuracy)
                .map_err(|e| CliError::Run(e.to_string()))
        })
        .collect()
}

/// Warm-up, baseline evaluation and the self-training loop for one seed.
pub fn run_seed(cfg: &ExperimentConfig, source: &Source, seed: u64) -> Result<SeedRun, CliError> {
    let reseeded;
    let source = match source {
        Source::Generator(g) => {
            reseeded = Source::Generator(g.reseeded(seed));
            &reseeded
        }
        other => other,
    };
    let run_err = |e: orchestrator::OrchestratorError| CliError::Run(e.to_string());
    let dataset = build_dataset(cfg, source, seed)?;
    let mut state = build_ensemble(cfg, source, &dataset, seed)?;
    let mut run_cfg = cfg.run.clone();
    run_cfg.seed = seed;
    let mut aug_cfg = cfg.augment.clone();
    aug_cfg.seed = rng::derive_seed(seed, &[tag::AUG_WEAK, cfg.augment.seed]);
    let visible: Vec<Example<f64>> = dataset
        .labeled()
        .iter()
        .chain(dataset.unlabeled())
        .cloned()
        .collect();
    let augmentor = Augmentor::fitted(aug_cfg, &visible, dataset.dim())
        .map_err(|e| CliError::Config(e.to_string()))?;

    orchestrator::warmup(&mut state, &dataset, &run_cfg).map_err(run_err)?;
    let baseline = metrics::evaluate_ensemble(&state.learner_refs(), &dataset, 0)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let baseline_models = model_accuracies(&state, &dataset, 0)?;
    let history = orchestrator::run(&mut state, &dataset, &run_cfg, &augmentor).map_err(run_err)?;
    let final_report = history
        .last()
        .map(|r| r.ensemble.clone())
        .unwrap_or_else(|| baseline.clone());
    let final_models = model_accuracies(&state, &dataset, state.round)?;
    Ok(SeedRun {
        seed,
        dataset,
        baseline,
        baseline_models,
        history,
        final_report,
        final_models,
    })
}

#[derive(Debug)]
pub struct ExperimentSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub aggregate: Aggregate,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Runs every seed and writes `seed-<s>/history.jsonl`, `seed-<s>/plot.json`
/// and `aggregate.json` under `out`. Nothing is written if validation fails.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary, CliError> {
    cfg.validate()?;
    let source = Source::load(cfg, 0)?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed(cfg, &source, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut files = Vec::new();
    for run in &runs {
        let dir = seed_dir(out, run.seed);
        let history = dir.join("history.jsonl");
        reports::write_file(&history, &reports::history_jsonl(run.seed, &run.history)?)?;
        let plot = dir.join("plot.json");
        let data = reports::plot_data(run.seed, &run.history, cfg.run.k, cfg.run.alpha);
        reports::write_file(&plot, &reports::to_json(&data)?)?;
        files.push(history);
        files.push(plot);
    }
    let aggregate = Aggregate::new(
        runs.iter().map(SeedRun::summary).collect(),
        source.label_names(),
    );
    let agg_path = out.join("aggregate.json");
    reports::write_file(&agg_path, &reports::to_json(&aggregate)?)?;
    files.push(agg_path);
    Ok(ExperimentSummary {
        out_dir: out.to_path_buf(),
        files,
        aggregate,
    })
}
