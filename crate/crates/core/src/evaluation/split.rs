//! Train/test partitions over data units (segments or subjects).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    /// First 70% of units train, last 30% test.
    Chrono,
    /// Stratified random 70/30, repeated.
    Random,
    /// Stratified k-fold.
    Kfold,
}

impl SplitStrategy {
    pub const ALL: [SplitStrategy; 3] = [SplitStrategy::Chrono, SplitStrategy::Random, SplitStrategy::Kfold];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::Chrono => "chrono",
            SplitStrategy::Random => "random",
            SplitStrategy::Kfold => "kfold",
        }
    }
}

impl std::fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a split partitions. `Subject` keeps all segments of a recording on
/// one side and is the leakage-safe choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitUnit {
    Segment,
    Subject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub unit: SplitUnit,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            strategy: SplitStrategy::Kfold,
            repeats: 10,
            folds: 10,
            seed: 0,
            unit: SplitUnit::Segment,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        Ok(())
    }

    pub fn with_strategy(self, strategy: SplitStrategy) -> Self {
        Self { strategy, ..self }
    }
}

/// Sorted, disjoint index sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `floor(0.7·n)` leading units train, the rest test.
pub fn split_chrono_7030(n_units: usize) -> Result<Partition> {
    if n_units < 2 {
        return Err(Error::OutOfRange {
            what: "unit count for a chronological split",
            value: n_units,
            min: 2,
            max: usize::MAX,
        });
    }
    let cut = 7 * n_units / 10;
    Ok(Partition {
        train: (0..cut).collect(),
        test: (cut..n_units).collect(),
    })
}

fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for repeat/fold/split `i` of master seed `seed`.
pub fn derived_seed(seed: u64, i: usize) -> u64 {
    mix(seed, i as u64 + 1)
}

fn units_by_class(labels: &[ClassLabel]) -> [Vec<usize>; 2] {
    let mut by = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by[l.index()].push(i);
    }
    by
}

/// Stratified 70/30 partitions, one per repeat. Each class contributes
/// `floor(0.7·n_c)` train units, clamped so both sides get at least one.
pub fn split_random_7030_repeated(labels: &[ClassLabel], repeats: usize, seed: u64) -> Result<Vec<Partition>> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let by_class = units_by_class(labels);
    for class in ClassLabel::ALL {
        let n = by_class[class.index()].len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "class {class} has {n} unit(s); stratified 70/30 needs at least 2"
            )));
        }
    }
    Ok((0..repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, r));
            let mut train = Vec::new();
            let mut test = Vec::new();
            for units in &by_class {
                let mut units = units.clone();
                units.shuffle(&mut rng);
                let n_train = (7 * units.len() / 10).clamp(1, units.len() - 1);
                train.extend_from_slice(&units[..n_train]);
                test.extend_from_slice(&units[n_train..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Partition { train, test }
        })
        .collect())
}

/// Stratified k-fold. Units of each class are shuffled and dealt round-robin
/// into folds; the dealing position carries over between classes so total
/// fold sizes also differ by at most one.
pub fn split_kfold(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Vec<Partition>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("folds must be at least 2, got {k}")));
    }
    let by_class = units_by_class(labels);
    for class in ClassLabel::ALL {
        let n = by_class[class.index()].len();
        if n < k {
            return Err(Error::InvalidParameter(format!(
                "class {class} has {n} unit(s), fewer than the {k} folds"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, 0));
    let mut fold_of = vec![0usize; labels.len()];
    let mut offset = 0;
    for units in &by_class {
        let mut units = units.clone();
        units.shuffle(&mut rng);
        for (pos, &u) in units.iter().enumerate() {
            fold_of[u] = (offset + pos) % k;
        }
        offset += units.len();
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&u| fold_of[u] == f);
            Partition { train, test }
        })
        .collect())
}

/// Unit labels in canonical order, and the segment indices of each unit.
/// Segment units follow dataset order (recording order, then start
/// sample); subject units follow recording order.
pub fn units(ds: &Dataset, unit: SplitUnit) -> (Vec<ClassLabel>, Vec<Vec<usize>>) {
    match unit {
        SplitUnit::Segment => (ds.segment_labels(), (0..ds.segments.len()).map(|i| vec![i]).collect()),
        SplitUnit::Subject => {
            let mut members = vec![Vec::new(); ds.recordings.len()];
            for (i, s) in ds.segments.iter().enumerate() {
                members[s.recording].push(i);
            }
            let keep: Vec<usize> = (0..members.len()).filter(|&r| !members[r].is_empty()).collect();
            (
                keep.iter().map(|&r| ds.recordings[r].label).collect(),
                keep.into_iter().map(|r| std::mem::take(&mut members[r])).collect(),
            )
        }
    }
}

/// Partitions of segment indices for `plan`.
pub fn plan_splits(ds: &Dataset, plan: &SplitPlan) -> Result<Vec<Partition>> {
    plan.validate()?;
    if ds.segments.is_empty() {
        return Err(Error::Empty("dataset has no segments"));
    }
    let (labels, members) = units(ds, plan.unit);
    let unit_parts = match plan.strategy {
        SplitStrategy::Chrono => vec![split_chrono_7030(labels.len())?],
        SplitStrategy::Random => split_random_7030_repeated(&labels, plan.repeats, plan.seed)?,
        SplitStrategy::Kfold => split_kfold(&labels, plan.folds, plan.seed)?,
    };
    let expand = |idx: &[usize]| {
        let mut out: Vec<usize> = idx.iter().flat_map(|&u| members[u].iter().copied()).collect();
        out.sort_unstable();
        out
    };
    Ok(unit_parts
        .iter()
        .map(|p| Partition {
            train: expand(&p.train),
            test: expand(&p.test),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(adhd: usize, hc: usize) -> Vec<ClassLabel> {
        let mut v = vec![ClassLabel::Adhd; adhd];
        v.extend(vec![ClassLabel::Hc; hc]);
        v
    }

    #[test]
    fn chrono_cut_points() {
        let p = split_chrono_7030(10).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (7, 3));
        let p = split_chrono_7030(3).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (2, 1));
        assert_eq!(split_chrono_7030(3).unwrap(), p);
        assert!(split_chrono_7030(1).is_err());
    }

    #[test]
    fn kfold_sizes() {
        let folds = split_kfold(&labels(10, 10), 10, 1).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 2 && f.train.len() == 18));
        let folds = split_kfold(&labels(2, 2), 2, 1).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 2));
        assert!(split_kfold(&labels(3, 20), 4, 1).is_err());
        assert!(split_kfold(&labels(3, 3), 1, 1).is_err());
    }

    #[test]
    fn random_stratification() {
        let ls = labels(10, 20);
        let parts = split_random_7030_repeated(&ls, 10, 42).unwrap();
        assert_eq!(parts.len(), 10);
        assert_eq!(parts, split_random_7030_repeated(&ls, 10, 42).unwrap());
        for p in &parts {
            let adhd = p.train.iter().filter(|&&u| ls[u] == ClassLabel::Adhd).count();
            assert_eq!((adhd, p.train.len() - adhd), (7, 14));
        }
        assert_ne!(parts[0], parts[1]);
        assert!(split_random_7030_repeated(&labels(1, 5), 1, 0).is_err());
    }
}
