//! Synthetic classification data.

use bicog::data::{Example, LabeledPool};
use bicog::rng::{self, tag};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorName {
    Blobs,
    Rings,
    BiasedBlobs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub num_classes: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Scale of the class centres (blobs) or ring spacing (rings).
    pub separation: f64,
    /// Within-class standard deviation.
    pub spread: f64,
    /// Class with the inflated prior in `biased_blobs`.
    pub bias_class: usize,
    /// Size multiplier for `bias_class` in `biased_blobs`.
    pub bias_factor: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            num_classes: 4,
            dim: 8,
            train_per_class: 100,
            test_per_class: 50,
            separation: 1.0,
            spread: 1.0,
            bias_class: 0,
            bias_factor: 3.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

fn gauss(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

/// A fixed class geometry that can be sampled repeatedly.
#[derive(Clone, Debug)]
pub struct Generator {
    name: GeneratorName,
    params: GeneratorParams,
    centres: Vec<Vec<f64>>,
}

impl Generator {
    pub fn new(
        name: GeneratorName,
        params: GeneratorParams,
        seed: u64,
    ) -> Result<Self, GeneratorError> {
        let p = &params;
        let bad = |m: &str| Err(GeneratorError::InvalidParams(m.to_string()));
        if p.num_classes < 2 {
            return bad("num_classes must be at least 2");
        }
        if p.dim == 0 || (name == GeneratorName::Rings && p.dim < 2) {
            return bad("dim too small for generator");
        }
        if !(p.separation.is_finite() && p.separation >= 0.0) {
            return bad("separation must be finite and non-negative");
        }
        if !(p.spread.is_finite() && p.spread >= 0.0) {
            return bad("spread must be finite and non-negative");
        }
        if name == GeneratorName::BiasedBlobs
            && (p.bias_class >= p.num_classes || !(p.bias_factor > 0.0))
        {
            return bad("bias_class must be a class index and bias_factor positive");
        }
        let centres = Self::centres(&params, seed);
        Ok(Self {
            name,
            params,
            centres,
        })
    }

    fn centres(p: &GeneratorParams, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, &[tag::GENERATOR, 0]);
        (0..p.num_classes)
            .map(|_| (0..p.dim).map(|_| p.separation * gauss(&mut r)).collect())
            .collect()
    }

    /// Same parameters with the class geometry drawn from `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            name: self.name,
            params: self.params.clone(),
            centres: Self::centres(&self.params, seed),
        }
    }

    pub fn params(&self) -> &GeneratorParams {
        &self.params
    }

    /// Per-class counts for a nominal `per_class`, after any bias.
    pub fn class_sizes(&self, per_class: usize) -> Vec<usize> {
        (0..self.params.num_classes)
            .map(|c| {
                if self.name == GeneratorName::BiasedBlobs && c == self.params.bias_class {
                    (per_class as f64 * self.params.bias_factor).round() as usize
                } else {
                    per_class
                }
            })
            .collect()
    }

    fn point(&self, class: usize, r: &mut impl Rng) -> Vec<f64> {
        let p = &self.params;
        let mut noise = || p.spread * gauss(&mut *r);
        match self.name {
            GeneratorName::Blobs | GeneratorName::BiasedBlobs => {
                self.centres[class].iter().map(|c| c + noise()).collect()
            }
            GeneratorName::Rings => {
                let radius = 1.0 + p.separation * class as f64;
                let angle = std::f64::consts::TAU * r.random::<f64>();
                let mut v = vec![radius * angle.cos() + p.spread * gauss(&mut *r)];
                v.push(radius * angle.sin() + p.spread * gauss(&mut *r));
                v.extend((2..p.dim).map(|_| p.spread * gauss(&mut *r)));
                v
            }
        }
    }

    /// Labeled examples, class by class, with ids from `first_id`.
    pub fn sample(
        &self,
        sizes: &[usize],
        keys: &[u64],
        seed: u64,
        first_id: u64,
    ) -> Vec<Example<f64>> {
        let mut out = Vec::with_capacity(sizes.iter().sum());
        let mut id = first_id;
        for (class, &n) in sizes.iter().enumerate() {
            let mut k = vec![tag::GENERATOR];
            k.extend_from_slice(keys);
            k.push(class as u64);
            let mut r = rng::stream(seed, &k);
            for _ in 0..n {
                out.push(Example::labeled(id, self.point(class, &mut r), class));
                id += 1;
            }
        }
        out
    }

    /// Train and test splits. Ids are dense from 0, train first.
    pub fn pool(&self, seed: u64) -> LabeledPool<f64> {
        let p = &self.params;
        let train = self.sample(&self.class_sizes(p.train_per_class), &[1], seed, 0);
        let test = self.sample(
            &self.class_sizes(p.test_per_class),
            &[2],
            seed,
            train.len() as u64,
        );
        LabeledPool {
            dim: p.dim,
            num_classes: p.num_classes,
            train,
            test,
        }
    }
}

/// Pool for one generator call.
pub fn generate_dataset(
    name: GeneratorName,
    params: &GeneratorParams,
    seed: u64,
) -> Result<LabeledPool<f64>, GeneratorError> {
    Ok(Generator::new(name, params.clone(), seed)?.pool(seed))
}
