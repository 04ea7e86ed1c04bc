//! Stratified sampling at a target class proportion and 60/20/20 splitting.
//!
//! A sample of size `n` at proportion `p` holds exactly `floor(n * p)`
//! positives; the rest are negatives. Split sizes are the largest-remainder
//! allocation of `n` over `(0.6, 0.2, 0.2)`, and each class is then
//! distributed over the splits by largest remainder in proportion to the
//! split sizes, so every split mirrors the sample's prevalence to within one
//! document. Nothing is ever rebalanced.

use rand::seq::index;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::rng::seeded;

/// Train, validation and test shares.
pub const SPLIT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

// Guards floor() against products such as 0.29 * 100 = 28.999999999999996.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("insufficient class {class} documents: need {needed}, have {available} (short by {})", needed - available)]
    Insufficient {
        class: u8,
        needed: usize,
        available: usize,
    },
    #[error("class proportion {0} is outside [0, 1]")]
    BadProportion(String),
}

/// Distributes `total` units over `weights` by the largest-remainder
/// (Hamilton) method. Ties in the fractional parts go to the lower index.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut alloc: Vec<usize> = quotas
        .iter()
        .map(|q| (q + FLOOR_SLACK).floor() as usize)
        .collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - alloc[a] as f64;
        let rb = quotas[b] - alloc[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        alloc[i] += 1;
    }
    alloc
}

/// Number of positives in a sample of `n` at proportion `prop_pos`.
pub fn positive_target(n: usize, prop_pos: f64) -> usize {
    ((n as f64 * prop_pos + FLOOR_SLACK).floor() as usize).min(n)
}

/// A stratified draw. Members are positions in the source corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub members: Vec<usize>,
    pub labels: Vec<u8>,
    pub n: usize,
    pub prop_pos: f64,
    pub actual_pos: usize,
    pub seed: u64,
}

impl Sample {
    pub fn doc_ids<'a>(&self, corpus: &'a Corpus) -> Vec<&'a str> {
        self.members
            .iter()
            .map(|&i| corpus.documents()[i].id.as_str())
            .collect()
    }
}

/// Draws `floor(n * prop_pos)` positives and the remainder as negatives,
/// uniformly without replacement within each class.
pub fn draw_sample(corpus: &Corpus, n: usize, prop_pos: f64, seed: u64) -> Result<Sample, SampleError> {
    if !(0.0..=1.0).contains(&prop_pos) {
        return Err(SampleError::BadProportion(prop_pos.to_string()));
    }
    let n_pos = positive_target(n, prop_pos);
    let n_neg = n - n_pos;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, d) in corpus.documents().iter().enumerate() {
        by_class[d.label as usize].push(i);
    }
    for (class, needed) in [(1u8, n_pos), (0u8, n_neg)] {
        let available = by_class[class as usize].len();
        if available < needed {
            return Err(SampleError::Insufficient {
                class,
                needed,
                available,
            });
        }
    }
    let mut rng = seeded(seed);
    let mut members = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, needed) in [(1u8, n_pos), (0u8, n_neg)] {
        let pool = &by_class[class as usize];
        for k in index::sample(&mut rng, pool.len(), needed) {
            members.push(pool[k]);
            labels.push(class);
        }
    }
    Ok(Sample {
        members,
        labels,
        n,
        prop_pos,
        actual_pos: n_pos,
        seed,
    })
}

/// One partition of a sample.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitPart {
    pub members: Vec<usize>,
    pub labels: Vec<u8>,
}

impl SplitPart {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    pub fn has_both_classes(&self) -> bool {
        self.n_pos() > 0 && self.n_neg() > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSet {
    pub train: SplitPart,
    pub val: SplitPart,
    pub test: SplitPart,
}

impl SplitSet {
    pub fn parts(&self) -> [&SplitPart; 3] {
        [&self.train, &self.val, &self.test]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStatus {
    Ok,
    Degenerate,
}

/// Splits a sample 60/20/20 with class counts mirrored in every split.
pub fn split(sample: &Sample, seed: u64) -> SplitSet {
    let sizes = largest_remainder(sample.n, &SPLIT_RATIOS);
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let n_pos = sample.labels.iter().filter(|&&l| l == 1).count();
    let pos_alloc = largest_remainder(n_pos, &weights);

    let mut rng = seeded(seed);
    let mut parts: [SplitPart; 3] = Default::default();
    for class in [1u8, 0u8] {
        let mut pool: Vec<usize> = sample
            .members
            .iter()
            .zip(&sample.labels)
            .filter(|(_, &l)| l == class)
            .map(|(&m, _)| m)
            .collect();
        pool.shuffle(&mut rng);
        let mut rest = pool.as_slice();
        for (k, part) in parts.iter_mut().enumerate() {
            let take = if class == 1 {
                pos_alloc[k]
            } else {
                sizes[k] - pos_alloc[k]
            };
            let (head, tail) = rest.split_at(take);
            part.members.extend_from_slice(head);
            part.labels.extend(std::iter::repeat(class).take(take));
            rest = tail;
        }
        debug_assert!(rest.is_empty());
    }
    let [train, val, test] = parts;
    SplitSet { train, val, test }
}

/// Degenerate iff some split lacks one of the two classes.
pub fn check_degenerate(splits: &SplitSet) -> SplitStatus {
    if splits.parts().iter().all(|p| p.has_both_classes()) {
        SplitStatus::Ok
    } else {
        SplitStatus::Degenerate
    }
}
