use std::collections::BTreeMap;

use rand::seq::index;

use crate::data::ExampleId;
use crate::pseudo::{PseudoLabeledSet, Stage};
use crate::rng;

/// Reduces `set` to `n` entries, deterministic per `seed`.
///
/// Uniform sampling without replacement by default. Stratified mode splits
/// `n` into per-class quotas proportional to class counts (largest remainder,
/// ties to the lower class) and samples uniformly within each class.
pub fn subsample(
    set: &PseudoLabeledSet,
    n: usize,
    seed: u64,
    stratified: bool,
) -> PseudoLabeledSet {
    if n >= set.len() {
        return set.clone().with_stage(Stage::Final);
    }
    let pairs: Vec<(ExampleId, usize)> = set.iter().collect();
    let chosen: Vec<(ExampleId, usize)> = if stratified {
        stratified_pick(&pairs, n, seed)
    } else {
        let mut r = rng::stream(seed, &[]);
        index::sample(&mut r, pairs.len(), n)
            .into_iter()
            .map(|i| pairs[i])
            .collect()
    };
    PseudoLabeledSet::from_pairs(Stage::Final, chosen).expect("subset of a valid set")
}

fn stratified_pick(pairs: &[(ExampleId, usize)], n: usize, seed: u64) -> Vec<(ExampleId, usize)> {
    let mut by_class: BTreeMap<usize, Vec<(ExampleId, usize)>> = BTreeMap::new();
    for &p in pairs {
        by_class.entry(p.1).or_default().push(p);
    }
    let total = pairs.len();
    let mut quotas: Vec<(usize, usize, usize)> = by_class
        .iter()
        .map(|(&class, members)| {
            let scaled = n * members.len();
            (class, scaled / total, scaled % total)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        quotas[b]
            .2
            .cmp(&quotas[a].2)
            .then(quotas[a].0.cmp(&quotas[b].0))
    });
    for &i in order.iter().take(n - assigned) {
        quotas[i].1 += 1;
    }
    let mut out = Vec::with_capacity(n);
    for (class, quota, _) in quotas {
        let members = &by_class[&class];
        let mut r = rng::stream(seed, &[class as u64]);
        out.extend(
            index::sample(&mut r, members.len(), quota)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    out
}
