//! Histogram entropy per channel and the two channel rankings: plain entropy
//! over all training samples, and the absolute difference between the
//! ADHD-pooled and HC-pooled entropies (EnD).

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Dataset, Segment};

pub const DEFAULT_ENTROPY_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingMethod {
    /// Highest pooled entropy first.
    En,
    /// Largest |H_ADHD − H_HC| first.
    End,
}

impl RankingMethod {
    pub const ALL: [RankingMethod; 2] = [RankingMethod::En, RankingMethod::End];

    pub fn as_str(self) -> &'static str {
        match self {
            RankingMethod::En => "en",
            RankingMethod::End => "end",
        }
    }
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub channel_index: usize,
    pub channel_name: String,
    /// Bits.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRanking {
    pub method: RankingMethod,
    pub n_bins: usize,
    /// Sorted by descending score, ties by ascending channel index.
    pub scores: Vec<ChannelScore>,
}

impl ChannelRanking {
    pub fn order(&self) -> Vec<usize> {
        self.scores.iter().map(|s| s.channel_index).collect()
    }
}

fn check_samples<'a>(samples: impl IntoIterator<Item = &'a f64>) -> Result<(f64, f64, usize)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0usize;
    for (i, &x) in samples.into_iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(i));
        }
        lo = lo.min(x);
        hi = hi.max(x);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("no samples to estimate a distribution from"));
    }
    Ok((lo, hi, n))
}

fn check_bins(n_bins: usize) -> Result<()> {
    if n_bins < 2 {
        return Err(Error::OutOfRange {
            what: "histogram bin count",
            value: n_bins,
            min: 2,
            max: usize::MAX,
        });
    }
    Ok(())
}

/// Equal-width histogram counts over `[min, max]` of the samples. The top
/// edge belongs to the last bin; a constant input puts everything in bin 0.
fn histogram<'a, I>(samples: I, n_bins: usize) -> Result<(Vec<u64>, usize)>
where
    I: IntoIterator<Item = &'a f64> + Clone,
{
    check_bins(n_bins)?;
    let (lo, hi, n) = check_samples(samples.clone())?;
    let mut counts = vec![0u64; n_bins];
    let width = hi - lo;
    if width == 0.0 {
        counts[0] = n as u64;
        return Ok((counts, n));
    }
    let scale = n_bins as f64 / width;
    for &x in samples {
        let bin = (((x - lo) * scale) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    Ok((counts, n))
}

fn entropy_of_counts(counts: &[u64], total: usize) -> f64 {
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    // -0.0 from a single occupied bin
    h.max(0.0)
}

/// Probability mass function from an equal-width histogram.
pub fn estimate_pmf(samples: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    let (counts, n) = histogram(samples.iter(), n_bins)?;
    Ok(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// Shannon entropy in bits of a probability vector, with 0·log 0 = 0.
pub fn entropy_of_pmf(pmf: &[f64]) -> f64 {
    pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Histogram entropy of a sample sequence, in bits.
pub fn channel_entropy(samples: &[f64], n_bins: usize) -> Result<f64> {
    let (counts, n) = histogram(samples.iter(), n_bins)?;
    Ok(entropy_of_counts(&counts, n))
}

fn pooled_entropy<'a>(
    segments: impl Iterator<Item = &'a Segment> + Clone,
    channel: usize,
    n_bins: usize,
) -> Result<f64> {
    let pooled = segments.flat_map(move |s| s.data.row(channel).into_iter());
    let (counts, n) = histogram(pooled, n_bins)?;
    Ok(entropy_of_counts(&counts, n))
}

fn sorted_ranking(ds: &Dataset, method: RankingMethod, n_bins: usize, raw: Vec<f64>) -> ChannelRanking {
    let names = ds.channel_names();
    let mut scores: Vec<ChannelScore> = raw
        .into_iter()
        .enumerate()
        .map(|(i, score)| ChannelScore {
            channel_index: i,
            channel_name: names.get(i).cloned().unwrap_or_else(|| format!("ch{i}")),
            score,
        })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.channel_index.cmp(&b.channel_index)));
    ChannelRanking { method, n_bins, scores }
}

/// Rank channels by the entropy of all training samples of both classes.
pub fn rank_by_entropy(train: &Dataset, n_bins: usize) -> Result<ChannelRanking> {
    rank_segments_by_entropy(train, &all_indices(train), n_bins)
}

/// Rank channels by |H_ADHD − H_HC| with each class's training samples
/// pooled per channel.
pub fn rank_by_end(train: &Dataset, n_bins: usize) -> Result<ChannelRanking> {
    rank_segments_by_end(train, &all_indices(train), n_bins)
}

pub fn rank(train: &Dataset, method: RankingMethod, n_bins: usize) -> Result<ChannelRanking> {
    rank_segments(train, &all_indices(train), method, n_bins)
}

fn all_indices(ds: &Dataset) -> Vec<usize> {
    (0..ds.segments.len()).collect()
}

/// Rank using only the segments at `train_idx`.
pub fn rank_segments(
    ds: &Dataset,
    train_idx: &[usize],
    method: RankingMethod,
    n_bins: usize,
) -> Result<ChannelRanking> {
    match method {
        RankingMethod::En => rank_segments_by_entropy(ds, train_idx, n_bins),
        RankingMethod::End => rank_segments_by_end(ds, train_idx, n_bins),
    }
}

fn rank_segments_by_entropy(ds: &Dataset, train_idx: &[usize], n_bins: usize) -> Result<ChannelRanking> {
    check_bins(n_bins)?;
    if train_idx.is_empty() {
        return Err(Error::Empty("training set has no segments"));
    }
    let segs = train_idx.iter().map(|&i| &ds.segments[i]);
    let raw = (0..ds.n_channels())
        .into_par_iter()
        .map(|c| pooled_entropy(segs.clone(), c, n_bins))
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_ranking(ds, RankingMethod::En, n_bins, raw))
}

fn rank_segments_by_end(ds: &Dataset, train_idx: &[usize], n_bins: usize) -> Result<ChannelRanking> {
    check_bins(n_bins)?;
    for class in ClassLabel::ALL {
        if !train_idx.iter().any(|&i| ds.segments[i].label == class) {
            return Err(Error::MissingClass(class));
        }
    }
    let of_class = |class: ClassLabel| {
        train_idx
            .iter()
            .map(|&i| &ds.segments[i])
            .filter(move |s| s.label == class)
    };
    let raw = (0..ds.n_channels())
        .into_par_iter()
        .map(|c| {
            let h_adhd = pooled_entropy(of_class(ClassLabel::Adhd), c, n_bins)?;
            let h_hc = pooled_entropy(of_class(ClassLabel::Hc), c, n_bins)?;
            Ok((h_adhd - h_hc).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_ranking(ds, RankingMethod::End, n_bins, raw))
}

/// The first `n` channel indices of a ranking.
pub fn select_channels(ranking: &ChannelRanking, n: usize) -> Result<Vec<usize>> {
    let max = ranking.scores.len();
    if n == 0 || n > max {
        return Err(Error::OutOfRange {
            what: "selected channel count",
            value: n,
            min: 1,
            max,
        });
    }
    Ok(ranking.scores[..n].iter().map(|s| s.channel_index).collect())
}
