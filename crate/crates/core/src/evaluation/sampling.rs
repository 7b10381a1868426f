use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::datacube::LabelMap;
use crate::error::{Error, Result};

/// Seeded generator used for every training draw.
///
/// xoshiro256** seeded from a single `u64` through SplitMix64. Bounded
/// integers use rejection sampling on the full 64-bit output: draw `x`,
/// reject while `x >= 2^64 - (2^64 mod n)`, return `x mod n`. Any
/// implementation following these three rules reproduces the same draws.
pub struct DrawRng(Xoshiro256StarStar);

impl DrawRng {
    pub fn new(seed: u64) -> Self {
        DrawRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform `k`-subset of `items` by partial Fisher–Yates; returned in draw order.
    pub fn choose<T: Copy>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut pool = items.to_vec();
        let k = k.min(pool.len());
        for i in 0..k {
            let j = i + self.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Per-class proportional training draw with a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingScheme {
    pub proportion: f64,
    pub min_per_class: usize,
    pub seed: u64,
}

impl SamplingScheme {
    pub fn new(proportion: f64, min_per_class: usize, seed: u64) -> Result<Self> {
        if !(proportion > 0.0 && proportion <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "training proportion must lie in (0, 1], got {proportion}"
            )));
        }
        if min_per_class == 0 {
            return Err(Error::InvalidArgument("min_per_class must be at least 1".into()));
        }
        Ok(SamplingScheme {
            proportion,
            min_per_class,
            seed,
        })
    }

    /// `max(min_per_class, round(proportion · available))`, capped at `available`.
    /// Rounding is half away from zero.
    pub fn class_quota(&self, available: usize) -> usize {
        let target = (self.proportion * available as f64).round() as usize;
        target.max(self.min_per_class).min(available)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    /// Ascending pixel indices.
    pub train: Vec<usize>,
    /// Ascending pixel indices: labeled pixels not in `train`.
    pub test: Vec<usize>,
    /// Classes with fewer than `min_per_class` pixels, taken whole.
    pub undersized: Vec<u16>,
}

/// Draws the training pixels class by class (ascending label, each class's
/// pixels in raster order) from one generator stream seeded by `scheme.seed`.
pub fn draw_training_set(labels: &LabelMap, scheme: &SamplingScheme) -> Result<TrainTestSplit> {
    let by_class = labels.indices_by_class();
    if let Some(missing) = (1..=labels.class_count()).find(|c| !by_class.contains_key(c)) {
        return Err(Error::Degenerate(format!("class {missing} has no labeled pixels")));
    }
    if by_class.is_empty() {
        return Err(Error::Degenerate("label map has no labeled pixels".into()));
    }
    let mut rng = DrawRng::new(scheme.seed);
    let mut train = Vec::new();
    let mut undersized = Vec::new();
    for (&class, pixels) in &by_class {
        if pixels.len() < scheme.min_per_class {
            log::warn!(
                "class {class} has only {} labeled pixels (< {}); using all for training",
                pixels.len(),
                scheme.min_per_class
            );
            undersized.push(class);
        }
        let quota = scheme.class_quota(pixels.len());
        train.extend(rng.choose(pixels, quota));
    }
    train.sort_unstable();
    let mut in_train = vec![false; labels.labels().len()];
    for &i in &train {
        in_train[i] = true;
    }
    let test = labels
        .labeled_indices()
        .into_iter()
        .filter(|&i| !in_train[i])
        .collect();
    Ok(TrainTestSplit {
        train,
        test,
        undersized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme(p: f64) -> SamplingScheme {
        SamplingScheme::new(p, 3, 7).unwrap()
    }

    #[test]
    fn quotas_from_class_counts() {
        // Oats (20 px) at 1%: max(3, round(0.2)) = 3
        assert_eq!(scheme(0.01).class_quota(20), 3);
        // Corn-no till (1428 px) at 5%: round(71.4) = 71
        assert_eq!(scheme(0.05).class_quota(1428), 71);
        // Alfalfa (46 px) at 5%: round(2.3) = 2 → floor 3
        assert_eq!(scheme(0.05).class_quota(46), 3);
        // half away from zero: 0.125 · 28 = 3.5 → 4
        assert_eq!(scheme(0.125).class_quota(28), 4);
        assert_eq!(scheme(0.10).class_quota(2), 2);
        assert_eq!(scheme(1.0).class_quota(17), 17);
    }

    #[test]
    fn scheme_validation() {
        assert!(SamplingScheme::new(0.0, 3, 0).is_err());
        assert!(SamplingScheme::new(1.01, 3, 0).is_err());
        assert!(SamplingScheme::new(0.5, 0, 0).is_err());
    }

    #[test]
    fn below_is_in_range_and_deterministic() {
        let mut a = DrawRng::new(42);
        let mut b = DrawRng::new(42);
        for n in [1u64, 2, 3, 7, 1000, u64::MAX] {
            let x = a.below(n);
            assert!(x < n);
            assert_eq!(x, b.below(n));
        }
    }

    #[test]
    fn reference_stream() {
        // Frozen from an independent SplitMix64 + xoshiro256** implementation.
        let mut r = DrawRng::new(0);
        let first: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(first, vec![11091344671253066420, 13793997310169335082, 1900383378846508768]);
        let mut r = DrawRng::new(42);
        assert_eq!(r.next_u64(), 1546998764402558742);
        let mut r = DrawRng::new(7);
        assert_eq!(r.choose(&(0..10).collect::<Vec<usize>>(), 4), vec![4, 6, 8, 0]);
    }

    #[test]
    fn full_proportion_trains_on_everything() {
        let labels = LabelMap::new(2, 3, vec![1, 2, 0, 1, 2, 2], None).unwrap();
        let split = draw_training_set(&labels, &scheme(1.0)).unwrap();
        assert_eq!(split.train, labels.labeled_indices());
        assert!(split.test.is_empty());
    }

    #[test]
    fn small_classes_are_taken_whole() {
        let labels = LabelMap::new(1, 6, vec![1, 1, 2, 2, 2, 2], None).unwrap();
        let split = draw_training_set(&labels, &SamplingScheme::new(0.1, 3, 1).unwrap()).unwrap();
        assert_eq!(split.undersized, vec![1]);
        assert!(split.train.contains(&0) && split.train.contains(&1));
        assert_eq!(split.train.len(), 5);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn missing_declared_class_is_an_error() {
        let labels = LabelMap::new(1, 3, vec![1, 3, 3], None).unwrap();
        assert!(matches!(draw_training_set(&labels, &scheme(0.5)), Err(Error::Degenerate(_))));
        let empty = LabelMap::new(1, 3, vec![0, 0, 0], None).unwrap();
        assert!(draw_training_set(&empty, &scheme(0.5)).is_err());
    }
}
