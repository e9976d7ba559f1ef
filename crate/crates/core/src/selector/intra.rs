use crate::augment::Augmentor;
use crate::data::{Example, ExampleId};
use crate::learners::{BaseLearner, Query, View};
use crate::pseudo::{PseudoLabeledSet, Stage};
use crate::scalar::Real;

/// Weak and strong views of a batch for one round, shared by all models.
#[derive(Clone, Debug)]
pub struct AugmentedViews<T> {
    pub round: u32,
    pub weak: Vec<Vec<T>>,
    pub strong: Vec<Vec<T>>,
}

impl<T: Real> AugmentedViews<T> {
    pub fn build(augmentor: &Augmentor<T>, examples: &[Example<T>], round: u32) -> Self {
        Self {
            round,
            weak: examples
                .iter()
                .map(|e| augmentor.weak(&e.features, e.id, round))
                .collect(),
            strong: examples
                .iter()
                .map(|e| augmentor.strong(&e.features, e.id, round))
                .collect(),
        }
    }
}

/// One model's labels on the original, weak and strong views.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewPredictions {
    pub original: Vec<usize>,
    pub weak: Vec<usize>,
    pub strong: Vec<usize>,
}

impl ViewPredictions {
    /// Stable under the weak view and changed under the strong view.
    pub fn passes(&self, i: usize) -> bool {
        self.original[i] == self.weak[i] && self.original[i] != self.strong[i]
    }
}

pub fn predict_views<T: Real>(
    learner: &dyn BaseLearner<T>,
    examples: &[Example<T>],
    views: &AugmentedViews<T>,
) -> ViewPredictions {
    let run = |view: View, feats: &[&[T]]| -> Vec<usize> {
        let queries: Vec<_> = examples
            .iter()
            .zip(feats)
            .map(|(e, f)| Query {
                id: e.id,
                features: f,
                round: views.round,
                view,
            })
            .collect();
        learner.predict_batch(&queries)
    };
    let original: Vec<&[T]> = examples.iter().map(|e| e.features.as_slice()).collect();
    let weak: Vec<&[T]> = views.weak.iter().map(Vec::as_slice).collect();
    let strong: Vec<&[T]> = views.strong.iter().map(Vec::as_slice).collect();
    ViewPredictions {
        original: run(View::Original, &original),
        weak: run(View::Weak, &weak),
        strong: run(View::Strong, &strong),
    }
}

/// Intersection over peers of `{(x, f_k(x)) : f_k(x) = f_k(weak(x)), f_k(x) != f_k(strong(x))}`.
pub fn intra_from_views(ids: &[ExampleId], peers: &[&ViewPredictions]) -> PseudoLabeledSet {
    let mut out = PseudoLabeledSet::new(Stage::Intra);
    if peers.is_empty() {
        return out;
    }
    for (i, &id) in ids.iter().enumerate() {
        let label = peers[0].original[i];
        if peers.iter().all(|p| p.passes(i) && p.original[i] == label) {
            out.insert(id, label).expect("ids are unique");
        }
    }
    out
}

pub fn intra_consistency<T: Real>(
    unlabeled: &[Example<T>],
    peers: &[&dyn BaseLearner<T>],
    augmentor: &Augmentor<T>,
    round: u32,
) -> PseudoLabeledSet {
    let views = AugmentedViews::build(augmentor, unlabeled, round);
    let preds: Vec<ViewPredictions> = peers
        .iter()
        .map(|p| predict_views(*p, unlabeled, &views))
        .collect();
    let refs: Vec<&ViewPredictions> = preds.iter().collect();
    let ids: Vec<ExampleId> = unlabeled.iter().map(|e| e.id).collect();
    intra_from_views(&ids, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp(o: &[usize], w: &[usize], s: &[usize]) -> ViewPredictions {
        ViewPredictions {
            original: o.to_vec(),
            weak: w.to_vec(),
            strong: s.to_vec(),
        }
    }

    #[test]
    fn predicate_cases() {
        let ids = [ExampleId(0)];
        let good = vp(&[1], &[1], &[0]);
        let out = intra_from_views(&ids, &[&good, &good]);
        assert_eq!(out.get(ExampleId(0)), Some(1));

        let flips_weak = vp(&[1], &[2], &[0]);
        assert!(intra_from_views(&ids, &[&good, &flips_weak]).is_empty());

        let stable_strong = vp(&[1], &[1], &[1]);
        assert!(intra_from_views(&ids, &[&good, &stable_strong]).is_empty());

        let other_label = vp(&[2], &[2], &[0]);
        assert!(intra_from_views(&ids, &[&good, &other_label]).is_empty());
    }
}
