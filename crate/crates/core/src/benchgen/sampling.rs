use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset_io::{LabeledDataset, SubsetRecord};
use crate::error::{Error, Result};

/// Items drawn per class for a human-study subset.
pub const PER_CLASS: usize = 10;

/// A class-balanced random draw from a source dataset.
#[derive(Debug, Clone)]
pub struct HumanSubset {
    pub seed: u64,
    pub disjoint_from_seed: Option<u64>,
    /// Source indices, in presentation order.
    pub indices: Vec<usize>,
    pub dataset: LabeledDataset,
}

impl HumanSubset {
    pub fn record(&self) -> SubsetRecord {
        SubsetRecord {
            seed: self.seed,
            disjoint_from_seed: self.disjoint_from_seed,
            per_class: PER_CLASS,
            source_indices: self.indices.clone(),
        }
    }
}

/// Draws [`PER_CLASS`] items of every class, then shuffles the whole draw.
/// The same seed always yields the same subset in the same order.
pub fn sample_human_subset(dataset: &LabeledDataset, seed: u64) -> Result<HumanSubset> {
    draw(dataset, seed, &HashSet::new(), None)
}

/// Like [`sample_human_subset`], but disjoint from the draw made with
/// `exclude_seed` ("another distinct" set of the same size).
pub fn sample_human_subset_excluding(dataset: &LabeledDataset, seed: u64, exclude_seed: u64) -> Result<HumanSubset> {
    let first = sample_human_subset(dataset, exclude_seed)?;
    let excluded: HashSet<usize> = first.indices.into_iter().collect();
    draw(dataset, seed, &excluded, Some(exclude_seed))
}

fn draw(dataset: &LabeledDataset, seed: u64, excluded: &HashSet<usize>, disjoint_from_seed: Option<u64>) -> Result<HumanSubset> {
    let classes = dataset.class_names().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(classes * PER_CLASS);
    for class in 0..classes {
        let mut pool: Vec<usize> = dataset
            .labels()
            .enumerate()
            .filter(|&(i, l)| l == class && !excluded.contains(&i))
            .map(|(i, _)| i)
            .collect();
        if pool.len() < PER_CLASS {
            return Err(Error::param(format!(
                "class `{}` has {} eligible items, need {PER_CLASS}",
                dataset.class_names()[class],
                pool.len()
            )));
        }
        pool.shuffle(&mut rng);
        indices.extend_from_slice(&pool[..PER_CLASS]);
    }
    indices.shuffle(&mut rng);
    let dataset = dataset.select(&indices, format!("{}#subset(seed={seed})", dataset.source()));
    Ok(HumanSubset {
        seed,
        disjoint_from_seed,
        indices,
        dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::digit_class_names;
    use crate::image::GrayImage;

    fn dataset(per_class: usize) -> LabeledDataset {
        let mut ds = LabeledDataset::empty(2, 2, digit_class_names(), "t");
        for i in 0..per_class * 10 {
            ds.push(GrayImage::filled(2, 2, (i % 256) as f32 / 255.0), (i * 7) % 10).unwrap();
        }
        ds
    }

    #[test]
    fn ten_per_digit() {
        let ds = dataset(30);
        let s = sample_human_subset(&ds, 1).unwrap();
        assert_eq!(s.indices.len(), 100);
        let mut hist = [0; 10];
        for l in s.dataset.labels() {
            hist[l] += 1;
        }
        assert_eq!(hist, [10; 10]);
        for (pos, &src) in s.indices.iter().enumerate() {
            assert_eq!(s.dataset.items()[pos], ds.items()[src]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = dataset(30);
        assert_eq!(sample_human_subset(&ds, 5).unwrap().indices, sample_human_subset(&ds, 5).unwrap().indices);
        assert_ne!(sample_human_subset(&ds, 5).unwrap().indices, sample_human_subset(&ds, 6).unwrap().indices);
    }

    #[test]
    fn excluding_draw_is_disjoint() {
        let ds = dataset(20);
        let a = sample_human_subset(&ds, 1).unwrap();
        let b = sample_human_subset_excluding(&ds, 2, 1).unwrap();
        let a: HashSet<_> = a.indices.into_iter().collect();
        assert!(b.indices.iter().all(|i| !a.contains(i)));
        assert_eq!(b.record().disjoint_from_seed, Some(1));
    }

    #[test]
    fn short_class_is_an_error() {
        assert!(sample_human_subset(&dataset(9), 1).is_err());
        // 15 per class leaves only 5 after excluding the first draw.
        assert!(sample_human_subset_excluding(&dataset(15), 2, 1).is_err());
    }
}
