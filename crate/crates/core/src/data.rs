//! Examples, datasets and splits.
//!
//! Ground truth of unlabeled examples lives in a private table. Inside the
//! crate only the metrics module reads it. Oracle learners receive an
//! explicit copy through [`Dataset::oracle_access`], and every report built
//! from an ensemble that contains one is flagged.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExampleId(pub u64);

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example<T> {
    pub id: ExampleId,
    pub features: Vec<T>,
    pub label: Option<usize>,
}

impl<T> Example<T> {
    pub fn labeled(id: u64, features: Vec<T>, label: usize) -> Self {
        Self {
            id: ExampleId(id),
            features,
            label: Some(label),
        }
    }

    pub fn unlabeled(id: u64, features: Vec<T>) -> Self {
        Self {
            id: ExampleId(id),
            features,
            label: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("class {class} has {available} examples, {needed} required")]
    InsufficientClassSamples {
        class: usize,
        needed: usize,
        available: usize,
    },
    #[error("pool must cover at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("shots_per_class must be at least 1")]
    ZeroShots,
    #[error("base fraction {0} outside (0, 1]")]
    InvalidBaseFraction(f64),
    #[error("invalid dataset: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A fully labeled pool, the input of split construction.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPool<T> {
    pub dim: usize,
    pub num_classes: usize,
    pub train: Vec<Example<T>>,
    pub test: Vec<Example<T>>,
}

/// Labeled, unlabeled and test splits with hidden truth for the unlabeled part.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    dim: usize,
    num_classes: usize,
    base_classes: BTreeSet<usize>,
    labeled: Vec<Example<T>>,
    unlabeled: Vec<Example<T>>,
    test: Vec<Example<T>>,
    hidden: BTreeMap<ExampleId, usize>,
}

impl<T: Clone> Dataset<T> {
    /// Builds a dataset without validation.
    ///
    /// Labels on `unlabeled` are moved into the hidden truth table and
    /// stripped from the visible examples. Use [`validate_dataset`] or
    /// [`Dataset::try_from_splits`] to check invariants.
    pub fn from_splits(
        dim: usize,
        num_classes: usize,
        base_classes: BTreeSet<usize>,
        labeled: Vec<Example<T>>,
        unlabeled: Vec<Example<T>>,
        test: Vec<Example<T>>,
    ) -> Self {
        let mut hidden = BTreeMap::new();
        let unlabeled = unlabeled
            .into_iter()
            .map(|mut ex| {
                if let Some(y) = ex.label.take() {
                    hidden.insert(ex.id, y);
                }
                ex
            })
            .collect();
        Self {
            dim,
            num_classes,
            base_classes,
            labeled,
            unlabeled,
            test,
            hidden,
        }
    }

    pub fn try_from_splits(
        dim: usize,
        num_classes: usize,
        base_classes: BTreeSet<usize>,
        labeled: Vec<Example<T>>,
        unlabeled: Vec<Example<T>>,
        test: Vec<Example<T>>,
    ) -> Result<Self, DataError> {
        let ds = Self::from_splits(dim, num_classes, base_classes, labeled, unlabeled, test);
        let violations = validate_dataset(&ds);
        if violations.is_empty() {
            Ok(ds)
        } else {
            Err(DataError::Invalid(violations))
        }
    }
}

impl<T> Dataset<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn base_classes(&self) -> &BTreeSet<usize> {
        &self.base_classes
    }

    /// True when some class never appears among the labeled examples' label space.
    pub fn is_open_world(&self) -> bool {
        self.base_classes.len() < self.num_classes
    }

    pub fn labeled(&self) -> &[Example<T>] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[Example<T>] {
        &self.unlabeled
    }

    pub fn test(&self) -> &[Example<T>] {
        &self.test
    }

    pub fn unlabeled_ids(&self) -> impl Iterator<Item = ExampleId> + '_ {
        self.unlabeled.iter().map(|e| e.id)
    }

    pub(crate) fn hidden_label(&self, id: ExampleId) -> Option<usize> {
        self.hidden.get(&id).copied()
    }

    /// Ground truth for every split, for oracle learners only.
    pub fn oracle_access(&self) -> OracleTable {
        let mut table: HashMap<ExampleId, usize> =
            self.hidden.iter().map(|(k, v)| (*k, *v)).collect();
        for ex in self.labeled.iter().chain(&self.test) {
            if let Some(y) = ex.label {
                table.insert(ex.id, y);
            }
        }
        OracleTable(Arc::new(table))
    }
}

/// Shared ground-truth lookup granted to oracle learners.
#[derive(Clone, Debug, Default)]
pub struct OracleTable(Arc<HashMap<ExampleId, usize>>);

impl OracleTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ExampleId, usize)>) -> Self {
        Self(Arc::new(pairs.into_iter().collect()))
    }

    pub fn label(&self, id: ExampleId) -> Option<usize> {
        self.0.get(&id).copied()
    }

    pub fn extend_from<T>(&self, examples: &[Example<T>]) -> Self {
        let mut map = (*self.0).clone();
        for ex in examples {
            if let Some(y) = ex.label {
                map.insert(ex.id, y);
            }
        }
        Self(Arc::new(map))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Labeled,
    Unlabeled,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Labeled => "labeled",
            Split::Unlabeled => "unlabeled",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    DuplicateId(ExampleId),
    DimensionMismatch {
        id: ExampleId,
        expected: usize,
        found: usize,
    },
    LabelOutOfRange {
        id: ExampleId,
        label: usize,
        num_classes: usize,
    },
    MissingLabel {
        id: ExampleId,
        split: Split,
    },
    LabelOutsideBase {
        id: ExampleId,
        label: usize,
    },
    MissingHiddenTruth(ExampleId),
    BaseClassOutOfRange(usize),
    EmptyLabeledSplit,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Violation::DimensionMismatch {
                id,
                expected,
                found,
            } => {
                write!(f, "example {id} has {found} features, expected {expected}")
            }
            Violation::LabelOutOfRange {
                id,
                label,
                num_classes,
            } => {
                write!(
                    f,
                    "example {id} label {label} out of range [0, {num_classes})"
                )
            }
            Violation::MissingLabel { id, split } => write!(f, "{split} example {id} has no label"),
            Violation::LabelOutsideBase { id, label } => {
                write!(f, "labeled example {id} uses non-base class {label}")
            }
            Violation::MissingHiddenTruth(id) => {
                write!(f, "unlabeled example {id} has no hidden truth")
            }
            Violation::BaseClassOutOfRange(c) => write!(f, "base class {c} out of range"),
            Violation::EmptyLabeledSplit => write!(f, "labeled split is empty"),
        }
    }
}

/// Lists every violated dataset invariant. Empty iff the dataset is valid.
pub fn validate_dataset<T>(d: &Dataset<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let c = d.num_classes;
    if d.labeled.is_empty() {
        out.push(Violation::EmptyLabeledSplit);
    }
    for &b in &d.base_classes {
        if b >= c {
            out.push(Violation::BaseClassOutOfRange(b));
        }
    }
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    let splits = [
        (Split::Labeled, &d.labeled),
        (Split::Unlabeled, &d.unlabeled),
        (Split::Test, &d.test),
    ];
    for (split, examples) in splits {
        for ex in examples.iter() {
            if !seen.insert(ex.id) && reported.insert(ex.id) {
                out.push(Violation::DuplicateId(ex.id));
            }
            if ex.features.len() != d.dim {
                out.push(Violation::DimensionMismatch {
                    id: ex.id,
                    expected: d.dim,
                    found: ex.features.len(),
                });
            }
            let label = match split {
                Split::Unlabeled => match d.hidden.get(&ex.id) {
                    Some(&y) => Some(y),
                    None => {
                        out.push(Violation::MissingHiddenTruth(ex.id));
                        None
                    }
                },
                _ => match ex.label {
                    Some(y) => Some(y),
                    None => {
                        out.push(Violation::MissingLabel { id: ex.id, split });
                        None
                    }
                },
            };
            if let Some(y) = label {
                if y >= c {
                    out.push(Violation::LabelOutOfRange {
                        id: ex.id,
                        label: y,
                        num_classes: c,
                    });
                } else if split == Split::Labeled && !d.base_classes.contains(&y) {
                    out.push(Violation::LabelOutsideBase {
                        id: ex.id,
                        label: y,
                    });
                }
            }
        }
    }
    out
}

/// Number of base classes for a fraction of `num_classes`, rounded up.
pub fn base_class_count(base_fraction: f64, num_classes: usize) -> usize {
    // Absorb products like 0.3 * 10 = 3.0000000000000004.
    let raw = (base_fraction * num_classes as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(num_classes)
}

/// Base/novel split with a fixed number of labeled shots per base class.
///
/// Base classes are the first `ceil(base_fraction * C)` entries of a seeded
/// shuffle of the class indices. Every pool example not drawn as a shot
/// becomes unlabeled, including all novel-class examples. The pool's test
/// split passes through unchanged.
pub fn make_open_world_split<T: Clone>(
    pool: &LabeledPool<T>,
    base_fraction: f64,
    shots_per_class: usize,
    seed: u64,
) -> Result<Dataset<T>, DataError> {
    let c = pool.num_classes;
    if c < 2 {
        return Err(DataError::TooFewClasses(c));
    }
    if shots_per_class == 0 {
        return Err(DataError::ZeroShots);
    }
    if !(base_fraction > 0.0 && base_fraction <= 1.0) {
        return Err(DataError::InvalidBaseFraction(base_fraction));
    }
    let mut classes: Vec<usize> = (0..c).collect();
    classes.shuffle(&mut rng::stream(seed, &[tag::SPLIT_CLASSES]));
    let base: BTreeSet<usize> = classes[..base_class_count(base_fraction, c)]
        .iter()
        .copied()
        .collect();

    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ex) in pool.train.iter().enumerate() {
        if let Some(y) = ex.label {
            by_class.entry(y).or_default().push(i);
        }
    }
    let mut chosen = HashSet::new();
    for &b in &base {
        let mut members = by_class.get(&b).cloned().unwrap_or_default();
        if members.len() < shots_per_class {
            return Err(DataError::InsufficientClassSamples {
                class: b,
                needed: shots_per_class,
                available: members.len(),
            });
        }
        members.shuffle(&mut rng::stream(seed, &[tag::SPLIT_SHOTS, b as u64]));
        chosen.extend(members.into_iter().take(shots_per_class));
    }

    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (i, ex) in pool.train.iter().enumerate() {
        if chosen.contains(&i) {
            labeled.push(ex.clone());
        } else {
            unlabeled.push(ex.clone());
        }
    }
    Ok(Dataset::from_splits(
        pool.dim,
        c,
        base,
        labeled,
        unlabeled,
        pool.test.clone(),
    ))
}
