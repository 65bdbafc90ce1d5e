//! Synthetic confounded corpora.
//!
//! The vocabulary is laid out as `[y-terms | z-terms | background terms]`.
//! The first half (rounded up) of the y-terms indicate `y = 1`, the rest
//! `y = 0`; z-terms are split the same way. An indicative term fires with
//! `p_on_indicative` when the instance's label matches the term's designated
//! value and with `p_on_background` otherwise. Background terms always fire
//! with `p_on_background`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub vocab_size_y: usize,
    pub vocab_size_z: usize,
    pub vocab_size_noise: usize,
    pub p_on_indicative: f64,
    pub p_on_background: f64,
    pub doc_count: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            vocab_size_y: 50,
            vocab_size_z: 50,
            vocab_size_noise: 200,
            p_on_indicative: 0.30,
            p_on_background: 0.05,
            doc_count: 4000,
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size_y + self.vocab_size_z + self.vocab_size_noise
    }

    /// Index range of the z-indicative terms.
    pub fn z_terms(&self) -> std::ops::Range<usize> {
        self.vocab_size_y..self.vocab_size_y + self.vocab_size_z
    }

    pub fn y_terms(&self) -> std::ops::Range<usize> {
        0..self.vocab_size_y
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(name, format!("= {p} must lie in [0, 1]")))
            }
        };
        prob("p_on_indicative", self.p_on_indicative)?;
        prob("p_on_background", self.p_on_background)?;
        if self.p_on_indicative <= self.p_on_background {
            return Err(Error::config(
                "p_on_indicative",
                "must exceed p_on_background",
            ));
        }
        for (name, v) in [
            ("vocab_size_y", self.vocab_size_y),
            ("vocab_size_z", self.vocab_size_z),
            ("vocab_size_noise", self.vocab_size_noise),
        ] {
            if v < 1 {
                return Err(Error::config(name, "must be >= 1"));
            }
        }
        if self.doc_count < 4 {
            return Err(Error::config("doc_count", "must be >= 4"));
        }
        Ok(())
    }
}

/// Draws `doc_count` instances with `(y, z)` spread evenly over the four cells.
pub fn generate_pool(config: &CorpusConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rng::derived_rng(config.seed, &[0xC0DE]);
    let mut cells: Vec<u8> = (0..config.doc_count).map(|i| (i % 4) as u8).collect();
    cells.shuffle(&mut rng);

    let (vy, vz) = (config.vocab_size_y, config.vocab_size_z);
    let (y_split, z_split) = (vy.div_ceil(2), vz.div_ceil(2));
    let fire = |on: bool, rng: &mut rng::Rng| {
        let p = if on {
            config.p_on_indicative
        } else {
            config.p_on_background
        };
        rng.gen_bool(p)
    };
    let instances = cells
        .into_iter()
        .map(|cell| {
            let (y, z) = (cell >> 1, cell & 1);
            let mut features = Vec::new();
            for j in 0..vy {
                let designated = (j < y_split) as u8;
                if fire(designated == y, &mut rng) {
                    features.push(j as u32);
                }
            }
            for j in 0..vz {
                let designated = (j < z_split) as u8;
                if fire(designated == z, &mut rng) {
                    features.push((vy + j) as u32);
                }
            }
            for j in vy + vz..config.vocab_size() {
                if fire(false, &mut rng) {
                    features.push(j as u32);
                }
            }
            Instance::new(features, y, z)
        })
        .collect();
    Ok(Dataset {
        vocab_size: config.vocab_size(),
        instances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub b_train: f64,
    pub b_test: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub p_y: f64,
    pub p_z: f64,
}

impl BiasSpec {
    pub fn uniform(b_train: f64, b_test: f64, n_train: usize, n_test: usize) -> Self {
        BiasSpec {
            b_train,
            b_test,
            n_train,
            n_test,
            p_y: 0.5,
            p_z: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("b_train", self.b_train),
            ("b_test", self.b_test),
            ("p_y", self.p_y),
            ("p_z", self.p_z),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    name,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }
}

/// `b = p(y=1 | z=1)` giving phi correlation `r` under uniform marginals.
pub fn bias_for_correlation(r: f64) -> f64 {
    (r + 1.0) / 2.0
}

/// Phi correlation implied by `b` under uniform marginals.
pub fn correlation_for_bias(b: f64) -> f64 {
    2.0 * b - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Per-cell sample sizes indexed `[y][z]`.
///
/// The `z = 1` and `y = 1` totals are rounded first so both marginals are
/// exact at the count level; `n(y=1, z=1)` is then the nearest integer to
/// `b · n(z=1)`.
pub fn cell_counts(n: usize, b: f64, p_y: f64, p_z: f64) -> Result<[[usize; 2]; 2]> {
    let nz1 = (n as f64 * p_z).round() as usize;
    let ny1 = (n as f64 * p_y).round() as usize;
    let n11 = (b * nz1 as f64).round() as usize;
    let lo = (ny1 + nz1).saturating_sub(n);
    let hi = ny1.min(nz1);
    if n11 < lo || n11 > hi {
        return Err(Error::config(
            "b",
            format!("= {b} incompatible with p_y = {p_y}, p_z = {p_z} at n = {n}"),
        ));
    }
    let n01 = nz1 - n11;
    let n10 = ny1 - n11;
    let n00 = n - nz1 - n10;
    Ok([[n00, n01], [n10, n11]])
}

/// Pool indices already handed out to an earlier sample.
pub type Exclusion = BTreeSet<usize>;

/// Samples without replacement from `pool` so that `p(y=1|z=1)`, `p(y)` and
/// `p(z)` hold at the count level. Indices taken are added to `exclude`.
pub fn biased_sample(
    pool: &Dataset,
    spec: &BiasSpec,
    which: Split,
    seed: u64,
    exclude: &mut Exclusion,
) -> Result<Dataset> {
    let idx = biased_sample_indices(pool, spec, which, seed, exclude)?;
    Ok(pool.subset(&idx))
}

pub fn biased_sample_indices(
    pool: &Dataset,
    spec: &BiasSpec,
    which: Split,
    seed: u64,
    exclude: &mut Exclusion,
) -> Result<Vec<usize>> {
    spec.validate()?;
    let (b, n, tag) = match which {
        Split::Train => (spec.b_train, spec.n_train, 1),
        Split::Test => (spec.b_test, spec.n_test, 2),
    };
    let counts = cell_counts(n, b, spec.p_y, spec.p_z)?;
    let mut rng = rng::derived_rng(seed, &[0x5A3B, tag]);

    let mut by_cell: [[Vec<usize>; 2]; 2] = Default::default();
    for (i, inst) in pool.instances.iter().enumerate() {
        if !exclude.contains(&i) {
            by_cell[inst.y as usize][inst.z_true as usize].push(i);
        }
    }
    let mut chosen = Vec::with_capacity(n);
    for y in 0..2 {
        for z in 0..2 {
            let need = counts[y][z];
            let cands = &mut by_cell[y][z];
            if cands.len() < need {
                return Err(Error::Infeasible {
                    y: y as u8,
                    z: z as u8,
                    needed: need,
                    available: cands.len(),
                });
            }
            let (picked, _) = cands.partial_shuffle(&mut rng, need);
            chosen.extend_from_slice(picked);
        }
    }
    chosen.shuffle(&mut rng);
    exclude.extend(chosen.iter().copied());
    Ok(chosen)
}

/// Flips each label independently with probability `p_flip`.
pub fn inject_noise(z_labels: &[u8], p_flip: f64, seed: u64) -> Result<Vec<u8>> {
    if !(0.0..=0.5).contains(&p_flip) {
        return Err(Error::Range {
            name: "p_flip",
            value: p_flip,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let mut rng = rng::derived_rng(seed, &[0x0015E]);
    Ok(z_labels
        .iter()
        .map(|&z| if rng.gen_bool(p_flip) { 1 - z } else { z })
        .collect())
}

/// Copy of `data` whose `z_true` column has been flipped with `p_flip`.
pub fn inject_noise_dataset(data: &Dataset, p_flip: f64, seed: u64) -> Result<Dataset> {
    let noisy = inject_noise(&data.zs(), p_flip, seed)?;
    data.with_z_true(&noisy)
}

/// Shuffles pool indices and splits them into two disjoint parts, the first
/// holding `ratio` of the pool.
pub fn split_pool(pool_len: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pool_len).collect();
    idx.shuffle(&mut rng::derived_rng(seed, &[0x5711]));
    let cut = ((pool_len as f64) * ratio).round() as usize;
    let second = idx.split_off(cut.min(pool_len));
    (idx, second)
}
