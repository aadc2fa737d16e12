//! Per-segment feature vectors from the selected channels, z-scoring, and
//! chi-square feature selection.

use std::fmt;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dwt::dwt_multilevel;
use crate::emd::{emd_decompose_with, SiftConfig};
use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Segment};
use crate::slbp::{slbp_histogram, SlbpConfig};

pub const STAT_NAMES: [&str; 4] = ["entropy", "mean", "variance", "energy"];
pub const DEFAULT_CHI2_BINS: usize = 10;
pub const DEFAULT_KEEP_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extractor {
    Emd,
    Dwt,
    Slbp,
}

impl Extractor {
    pub const ALL: [Extractor; 3] = [Extractor::Emd, Extractor::Dwt, Extractor::Slbp];

    pub fn as_str(self) -> &'static str {
        match self {
            Extractor::Emd => "emd",
            Extractor::Dwt => "dwt",
            Extractor::Slbp => "slbp",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractorConfig {
    pub dwt_levels: usize,
    pub emd_imfs: usize,
    pub sift: SiftConfig,
    pub slbp: SlbpConfig,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            dwt_levels: 3,
            emd_imfs: 3,
            sift: SiftConfig::default(),
            slbp: SlbpConfig::default(),
        }
    }
}

impl ExtractorConfig {
    /// Features contributed by one channel.
    pub fn block_len(&self, extractor: Extractor) -> usize {
        match extractor {
            Extractor::Emd => 4 * self.emd_imfs,
            Extractor::Dwt => 4 * (self.dwt_levels + 1),
            Extractor::Slbp => self.slbp.n_bins(),
        }
    }

    pub fn block_names(&self, channel: &str, extractor: Extractor) -> Vec<String> {
        let tag = extractor.as_str();
        let components: Vec<String> = match extractor {
            Extractor::Emd => (1..=self.emd_imfs).map(|k| format!("imf{k}")).collect(),
            Extractor::Dwt => std::iter::once(format!("cA{}", self.dwt_levels))
                .chain((1..=self.dwt_levels).rev().map(|l| format!("cD{l}")))
                .collect(),
            Extractor::Slbp => {
                return (0..self.slbp.n_bins())
                    .map(|b| format!("{channel}/{tag}/code/b{b:02}"))
                    .collect()
            }
        };
        components
            .iter()
            .flat_map(|comp| STAT_NAMES.iter().map(move |s| format!("{channel}/{tag}/{comp}/{s}")))
            .collect()
    }
}

/// `(shannon_entropy, mean, variance, energy)` of one component.
///
/// Entropy uses the energy distribution `p_i = x_i² / Σ x_j²`; an all-zero
/// component has entropy 0. Variance is the population variance.
pub fn stat_features(component: &[f64]) -> Result<[f64; 4]> {
    if component.is_empty() {
        return Err(Error::Empty("component has no samples"));
    }
    let n = component.len() as f64;
    let mean = component.iter().sum::<f64>() / n;
    let variance = component.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let energy: f64 = component.iter().map(|x| x * x).sum();
    let entropy = if energy > 0.0 {
        component
            .iter()
            .map(|x| x * x / energy)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum::<f64>()
            .max(0.0)
    } else {
        0.0
    };
    Ok([entropy, mean, variance, energy])
}

/// Feature block of a single channel segment.
pub fn channel_block(signal: &[f64], extractor: Extractor, cfg: &ExtractorConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.block_len(extractor));
    match extractor {
        Extractor::Dwt => {
            let dec = dwt_multilevel(signal, cfg.dwt_levels)?;
            for band in &dec.subbands {
                out.extend(stat_features(band)?);
            }
        }
        Extractor::Emd => {
            let res = emd_decompose_with(signal, cfg.emd_imfs, &cfg.sift)?;
            if res.imfs.len() < cfg.emd_imfs {
                log::warn!(
                    "EMD produced {} of {} IMFs; padding with zero components",
                    res.imfs.len(),
                    cfg.emd_imfs
                );
            }
            for imf in &res.imfs {
                out.extend(stat_features(imf)?);
            }
            out.resize(cfg.block_len(extractor), 0.0);
        }
        Extractor::Slbp => {
            let hist = slbp_histogram(signal, &cfg.slbp)?;
            out.extend(hist.counts.iter().map(|&c| c as f64));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// Shape `(n_rows, n_features)`.
    pub values: Array2<f64>,
    pub labels: Vec<ClassLabel>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, values: Array2<f64>, labels: Vec<ClassLabel>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: values.ncols(),
            });
        }
        if labels.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: values.nrows(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { names, values, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// `[ADHD, HC]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn row(&self, i: usize) -> FeatureVector {
        FeatureVector {
            values: self.values.row(i).to_vec(),
            names: self.names.clone(),
            label: self.labels[i],
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            values: self.values.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// CSV text: a header of feature names plus `label`, one row per segment.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.names.join(","));
        out.push_str(",label\n");
        for (row, label) in self.values.rows().into_iter().zip(&self.labels) {
            for v in row {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out
    }
}

/// Concatenate per-channel blocks, in `channels` order, for every segment.
pub fn extract_features(
    segments: &[&Segment],
    channel_names: &[String],
    channels: &[usize],
    extractor: Extractor,
    cfg: &ExtractorConfig,
) -> Result<FeatureMatrix> {
    if channels.is_empty() {
        return Err(Error::Empty("no channels selected"));
    }
    if segments.is_empty() {
        return Err(Error::Empty("no segments to extract features from"));
    }
    for &c in channels {
        if c >= channel_names.len() {
            return Err(Error::OutOfRange {
                what: "channel index",
                value: c,
                min: 0,
                max: channel_names.len().saturating_sub(1),
            });
        }
    }
    let width = cfg.block_len(extractor) * channels.len();
    let rows = segments
        .par_iter()
        .enumerate()
        .map(|(si, seg)| {
            let mut row = Vec::with_capacity(width);
            for &c in channels {
                let signal = seg.channel(c).to_vec();
                let block = channel_block(&signal, extractor, cfg).map_err(|e| Error::Extraction {
                    segment: si,
                    channel: c,
                    source: Box::new(e),
                })?;
                row.extend(block);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let names = channels
        .iter()
        .flat_map(|&c| cfg.block_names(&channel_names[c], extractor))
        .collect();
    let values = Array2::from_shape_vec((rows.len(), width), rows.concat()).expect("rectangular rows");
    FeatureMatrix::new(names, values, segments.iter().map(|s| s.label).collect())
}

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features with zero spread; their std is replaced by 1.
    pub degenerate: Vec<bool>,
}

pub fn fit_standardizer(train: &FeatureMatrix) -> Result<Standardizer> {
    if train.n_rows() == 0 {
        return Err(Error::Empty("cannot fit a standardizer on zero rows"));
    }
    let n = train.n_rows() as f64;
    let mut mean = Vec::with_capacity(train.n_features());
    let mut std = Vec::with_capacity(train.n_features());
    let mut degenerate = Vec::with_capacity(train.n_features());
    for col in train.values.columns() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        mean.push(m);
        if s > 0.0 && s.is_finite() {
            std.push(s);
            degenerate.push(false);
        } else {
            std.push(1.0);
            degenerate.push(true);
        }
    }
    Ok(Standardizer { mean, std, degenerate })
}

pub fn apply_standardizer(s: &Standardizer, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if s.mean.len() != m.n_features() {
        return Err(Error::DimensionMismatch {
            expected: s.mean.len(),
            got: m.n_features(),
        });
    }
    let mut values = m.values.clone();
    for (j, mut col) in values.columns_mut().into_iter().enumerate() {
        let (mu, sd) = (s.mean[j], s.std[j]);
        col.mapv_inplace(|v| (v - mu) / sd);
    }
    Ok(FeatureMatrix {
        names: m.names.clone(),
        values,
        labels: m.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMask {
    /// Strictly increasing.
    pub kept_indices: Vec<usize>,
    /// χ² statistic of every input feature.
    pub statistics: Vec<f64>,
    pub n_bins: usize,
    pub keep_fraction: f64,
    pub feature_names: Vec<String>,
}

/// Equal-frequency bin index per value. Cut points are order statistics,
/// so bin membership depends only on ranks and equal values share a bin.
pub fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let cuts: Vec<f64> = (1..n_bins).map(|k| sorted[(k * n / n_bins).min(n - 1)]).collect();
    values.iter().map(|&v| cuts.partition_point(|&c| c <= v)).collect()
}

/// Pearson χ² of a contingency table (rows = bins, columns = classes);
/// cells with zero expected count are skipped.
pub fn chi_square_statistic(table: &[Vec<u64>]) -> f64 {
    let n_cols = table.first().map_or(0, Vec::len);
    let row_totals: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_totals: Vec<f64> = (0..n_cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_totals.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut chi2 = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &obs) in row.iter().enumerate() {
            let expected = row_totals[r] * col_totals[c] / total;
            if expected > 0.0 {
                let d = obs as f64 - expected;
                chi2 += d * d / expected;
            }
        }
    }
    chi2
}

/// Number of features kept for a given fraction, at least one.
pub fn keep_count(n_features: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n_features as f64 - 1e-9).ceil() as usize).clamp(1, n_features.max(1))
}

pub fn chi_square_select(train: &FeatureMatrix, n_bins: usize, keep_fraction: f64) -> Result<SelectionMask> {
    if n_bins < 2 {
        return Err(Error::OutOfRange {
            what: "chi-square bin count",
            value: n_bins,
            min: 2,
            max: usize::MAX,
        });
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let counts = train.class_counts();
    for class in ClassLabel::ALL {
        if counts[class.index()] == 0 {
            return Err(Error::MissingClass(class));
        }
    }
    if train.n_features() == 0 {
        return Err(Error::Empty("feature matrix has no columns"));
    }
    let statistics: Vec<f64> = (0..train.n_features())
        .into_par_iter()
        .map(|j| {
            let col = train.values.column(j).to_vec();
            let bins = equal_frequency_bins(&col, n_bins);
            let mut table = vec![vec![0u64; 2]; n_bins];
            for (b, label) in bins.iter().zip(&train.labels) {
                table[*b][label.index()] += 1;
            }
            chi_square_statistic(&table)
        })
        .collect();
    let mut order: Vec<usize> = (0..statistics.len()).collect();
    order.sort_by(|&a, &b| statistics[b].total_cmp(&statistics[a]).then(a.cmp(&b)));
    let mut kept_indices: Vec<usize> = order[..keep_count(statistics.len(), keep_fraction)].to_vec();
    kept_indices.sort_unstable();
    Ok(SelectionMask {
        kept_indices,
        statistics,
        n_bins,
        keep_fraction,
        feature_names: train.names.clone(),
    })
}

pub fn apply_mask(mask: &SelectionMask, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if mask.feature_names != m.names {
        return Err(Error::NameMismatch);
    }
    Ok(FeatureMatrix {
        names: mask.kept_indices.iter().map(|&j| m.names[j].clone()).collect(),
        values: m.values.select(Axis(1), &mask.kept_indices),
        labels: m.labels.clone(),
    })
}
