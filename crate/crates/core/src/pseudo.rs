use std::collections::btree_map::{self, BTreeMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, ExampleId};

/// Which selection step produced a pseudo-labeled set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Inter,
    Intra,
    Intersection,
    Final,
}

#[derive(Debug, Error, PartialEq)]
pub enum PseudoLabelError {
    #[error("example {id} assigned both {first} and {second}")]
    ConflictingLabel {
        id: ExampleId,
        first: usize,
        second: usize,
    },
    #[error("example {0} is not an unlabeled example of the dataset")]
    NotUnlabeled(ExampleId),
}

/// At most one class label per unlabeled example id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoLabeledSet {
    stage: Stage,
    entries: BTreeMap<ExampleId, usize>,
}

impl PseudoLabeledSet {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_pairs(
        stage: Stage,
        pairs: impl IntoIterator<Item = (ExampleId, usize)>,
    ) -> Result<Self, PseudoLabelError> {
        let mut set = Self::new(stage);
        for (id, label) in pairs {
            set.insert(id, label)?;
        }
        Ok(set)
    }

    /// Inserts a pair. Re-inserting the same label is a no-op.
    pub fn insert(&mut self, id: ExampleId, label: usize) -> Result<(), PseudoLabelError> {
        match self.entries.entry(id) {
            btree_map::Entry::Vacant(v) => {
                v.insert(label);
                Ok(())
            }
            btree_map::Entry::Occupied(o) if *o.get() == label => Ok(()),
            btree_map::Entry::Occupied(o) => Err(PseudoLabelError::ConflictingLabel {
                id,
                first: *o.get(),
                second: label,
            }),
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ExampleId) -> Option<usize> {
        self.entries.get(&id).copied()
    }

    pub fn contains(&self, id: ExampleId, label: usize) -> bool {
        self.get(id) == Some(label)
    }

    /// Pairs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (ExampleId, usize)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &y in self.entries.values() {
            if y < num_classes {
                counts[y] += 1;
            }
        }
        counts
    }

    /// Checks that every id belongs to the dataset's unlabeled split.
    pub fn check_against<T>(&self, dataset: &Dataset<T>) -> Result<(), PseudoLabelError> {
        for id in self.entries.keys() {
            if dataset.hidden_label(*id).is_none() {
                return Err(PseudoLabelError::NotUnlabeled(*id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_label_per_id() {
        let mut s = PseudoLabeledSet::new(Stage::Inter);
        s.insert(ExampleId(1), 2).unwrap();
        s.insert(ExampleId(1), 2).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s.insert(ExampleId(1), 3),
            Err(PseudoLabelError::ConflictingLabel {
                id: ExampleId(1),
                first: 2,
                second: 3
            })
        );
    }

    #[test]
    fn counts_by_class() {
        let s = PseudoLabeledSet::from_pairs(
            Stage::Final,
            [(ExampleId(4), 1), (ExampleId(2), 1), (ExampleId(9), 0)],
        )
        .unwrap();
        assert_eq!(s.class_counts(3), vec![1, 2, 0]);
        let ids: Vec<_> = s.iter().map(|(id, _)| id.0).collect();
        assert_eq!(ids, vec![2, 4, 9]);
    }
}
