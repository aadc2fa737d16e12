//! Rank → select → extract → standardize → χ² mask → classify, refitted on
//! the training side of every split.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, mean_defined, ConfusionCounts, Metrics};
use super::split::{derived_seed, plan_splits, Partition, SplitPlan, SplitStrategy, SplitUnit};
use crate::classifiers::{self, ClassifierKind, ClassifierParams, TrainedModel};
use crate::error::{Error, Result};
use crate::features::{
    apply_mask, apply_standardizer, channel_block, chi_square_select, fit_standardizer, Extractor, ExtractorConfig,
    FeatureMatrix, SelectionMask, Standardizer, DEFAULT_CHI2_BINS, DEFAULT_KEEP_FRACTION,
};
use crate::ranking::{rank_segments, select_channels, ChannelRanking, RankingMethod, DEFAULT_ENTROPY_BINS};
use crate::signal::Dataset;

/// Column order of the selected channels' feature blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureOrder {
    /// Best-ranked channel first.
    Ranked,
    /// Ascending channel index, so equal channel sets give equal matrices
    /// whatever the ranking method.
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub method: RankingMethod,
    pub n_channels: usize,
    pub extractor: Extractor,
    pub classifier: ClassifierKind,
    pub classifier_params: ClassifierParams,
    pub features: ExtractorConfig,
    pub entropy_bins: usize,
    pub chi2_bins: usize,
    pub keep_fraction: f64,
    pub feature_order: FeatureOrder,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: RankingMethod::End,
            n_channels: 3,
            extractor: Extractor::Slbp,
            classifier: ClassifierKind::Knn,
            classifier_params: ClassifierParams::default(),
            features: ExtractorConfig::default(),
            entropy_bins: DEFAULT_ENTROPY_BINS,
            chi2_bins: DEFAULT_CHI2_BINS,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            feature_order: FeatureOrder::Ranked,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, n_channels_available: usize) -> Result<()> {
        if self.n_channels == 0 || self.n_channels > n_channels_available {
            return Err(Error::OutOfRange {
                what: "n_channels",
                value: self.n_channels,
                min: 1,
                max: n_channels_available,
            });
        }
        if self.entropy_bins < 2 {
            return Err(Error::InvalidParameter("entropy_bins must be at least 2".into()));
        }
        if self.chi2_bins < 2 {
            return Err(Error::InvalidParameter("chi2_bins must be at least 2".into()));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "keep_fraction must lie in (0, 1], got {}",
                self.keep_fraction
            )));
        }
        if self.features.dwt_levels == 0 || self.features.emd_imfs == 0 {
            return Err(Error::InvalidParameter(
                "dwt_levels and emd_imfs must be positive".into(),
            ));
        }
        Ok(())
    }
}

type BlockKey = (Extractor, usize);

/// Per-channel feature blocks for every segment, computed once and shared
/// by all splits and configurations. Each block depends on one segment
/// only, so caching across splits leaks nothing.
pub struct FeatureBank<'a> {
    ds: &'a Dataset,
    cfg: ExtractorConfig,
    blocks: Mutex<HashMap<BlockKey, Arc<Array2<f64>>>>,
}

impl<'a> FeatureBank<'a> {
    pub fn new(ds: &'a Dataset, cfg: ExtractorConfig) -> Self {
        Self {
            ds,
            cfg,
            blocks: Mutex::new(HashMap::new()),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.cfg
    }

    fn cached(&self, key: BlockKey) -> Option<Arc<Array2<f64>>> {
        self.blocks.lock().expect("feature bank lock").get(&key).cloned()
    }

    /// Compute any missing `(extractor, channel)` blocks.
    pub fn prefetch(&self, extractor: Extractor, channels: &[usize]) -> Result<()> {
        let missing: Vec<usize> = channels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|&c| self.cached((extractor, c)).is_none())
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let n_ch = self.ds.n_channels();
        if let Some(&c) = missing.iter().find(|&&c| c >= n_ch) {
            return Err(Error::OutOfRange {
                what: "channel index",
                value: c,
                min: 0,
                max: n_ch.saturating_sub(1),
            });
        }
        let width = self.cfg.block_len(extractor);
        let n_seg = self.ds.segments.len();
        let jobs: Vec<(usize, usize)> = missing.iter().flat_map(|&c| (0..n_seg).map(move |s| (c, s))).collect();
        let rows = jobs
            .par_iter()
            .map(|&(c, s)| {
                let signal = self.ds.segments[s].channel(c).to_vec();
                channel_block(&signal, extractor, &self.cfg).map_err(|e| Error::Extraction {
                    segment: s,
                    channel: c,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = self.blocks.lock().expect("feature bank lock");
        for (k, &c) in missing.iter().enumerate() {
            let flat = rows[k * n_seg..(k + 1) * n_seg].concat();
            let block = Array2::from_shape_vec((n_seg, width), flat).expect("rectangular block");
            blocks.entry((extractor, c)).or_insert_with(|| Arc::new(block));
        }
        Ok(())
    }

    /// Feature matrix of `rows` (segment indices) over `channels`, blocks
    /// concatenated in the given channel order.
    pub fn matrix(&self, rows: &[usize], channels: &[usize], extractor: Extractor) -> Result<FeatureMatrix> {
        if channels.is_empty() {
            return Err(Error::Empty("no channels selected"));
        }
        self.prefetch(extractor, channels)?;
        let names_all = self.ds.channel_names();
        let mut names = Vec::new();
        let mut parts = Vec::with_capacity(channels.len());
        for &c in channels {
            let block = self.cached((extractor, c)).expect("prefetched");
            parts.push(block.select(Axis(0), rows));
            names.extend(self.cfg.block_names(&names_all[c], extractor));
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        let values = ndarray::concatenate(Axis(1), &views).expect("row counts agree");
        let labels = rows.iter().map(|&r| self.ds.segments[r].label).collect();
        FeatureMatrix::new(names, values, labels)
    }
}

/// Everything learned from one training side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSplit {
    pub ranking: ChannelRanking,
    /// Channel indices in feature-block order.
    pub channels: Vec<usize>,
    pub standardizer: Standardizer,
    pub mask: SelectionMask,
    pub model: TrainedModel,
}

fn chosen_channels(ranking: &ChannelRanking, cfg: &PipelineConfig) -> Result<Vec<usize>> {
    let mut channels = select_channels(ranking, cfg.n_channels)?;
    if cfg.feature_order == FeatureOrder::Canonical {
        channels.sort_unstable();
    }
    Ok(channels)
}

/// Fit ranking, standardizer, mask and classifier on the `train` segments.
pub fn fit_split(bank: &FeatureBank, train: &[usize], cfg: &PipelineConfig, seed: u64) -> Result<FittedSplit> {
    let ranking = rank_segments(bank.dataset(), train, cfg.method, cfg.entropy_bins)?;
    fit_with_ranking(bank, train, ranking, cfg, seed)
}

fn fit_with_ranking(
    bank: &FeatureBank,
    train: &[usize],
    ranking: ChannelRanking,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<FittedSplit> {
    let channels = chosen_channels(&ranking, cfg)?;
    let raw = bank.matrix(train, &channels, cfg.extractor)?;
    let standardizer = fit_standardizer(&raw)?;
    let z = apply_standardizer(&standardizer, &raw)?;
    let mask = chi_square_select(&z, cfg.chi2_bins, cfg.keep_fraction)?;
    let x = apply_mask(&mask, &z)?;
    let model = classifiers::train(&x, cfg.classifier, &cfg.classifier_params, seed)?;
    Ok(FittedSplit {
        ranking,
        channels,
        standardizer,
        mask,
        model,
    })
}

impl FittedSplit {
    /// Standardized, masked features of `rows`.
    pub fn transform(&self, bank: &FeatureBank, rows: &[usize], extractor: Extractor) -> Result<FeatureMatrix> {
        let raw = bank.matrix(rows, &self.channels, extractor)?;
        apply_mask(&self.mask, &apply_standardizer(&self.standardizer, &raw)?)
    }

    pub fn score(&self, bank: &FeatureBank, test: &[usize], extractor: Extractor) -> Result<ConfusionCounts> {
        let x = self.transform(bank, test, extractor)?;
        let mut counts = ConfusionCounts::default();
        for (pred, truth) in self.model.predict_matrix(&x)?.iter().zip(&x.labels) {
            counts.record(*truth, pred.label);
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub channels: Vec<usize>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// One configuration evaluated under one split strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: RankingMethod,
    pub extractor: Extractor,
    pub classifier: ClassifierKind,
    pub n_channels: usize,
    pub strategy: SplitStrategy,
    /// Mean over splits.
    pub accuracy: f64,
    /// Mean over splits where defined.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Summed over splits.
    pub counts: ConfusionCounts,
    pub splits: Vec<SplitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub unit: SplitUnit,
    pub repeats: usize,
    pub folds: usize,
    /// Settings shared by every row; the row keys override the
    /// method, extractor, classifier and channel count.
    pub config: PipelineConfig,
    pub rows: Vec<ReportRow>,
}

/// Classifier seed of split `i`, independent of the partition seeds.
fn model_seed(seed: u64, i: usize) -> u64 {
    derived_seed(seed ^ 0xA5A5_5A5A_C3C3_3C3C, i)
}

fn rank_all(ds: &Dataset, parts: &[Partition], method: RankingMethod, bins: usize) -> Result<Vec<ChannelRanking>> {
    parts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            rank_segments(ds, &p.train, method, bins).map_err(|e| Error::Split {
                split: i,
                source: Box::new(e),
            })
        })
        .collect()
}

fn evaluate(
    bank: &FeatureBank,
    parts: &[Partition],
    rankings: &[ChannelRanking],
    cfg: &PipelineConfig,
    strategy: SplitStrategy,
    seed: u64,
) -> Result<ReportRow> {
    let channels: Vec<usize> = rankings
        .iter()
        .map(|r| chosen_channels(r, cfg))
        .collect::<Result<Vec<_>>>()?
        .concat();
    bank.prefetch(cfg.extractor, &channels)?;
    let splits = parts
        .par_iter()
        .zip(rankings)
        .enumerate()
        .map(|(i, (p, ranking))| {
            let run = || -> Result<SplitResult> {
                let fitted = fit_with_ranking(bank, &p.train, ranking.clone(), cfg, model_seed(seed, i))?;
                let counts = fitted.score(bank, &p.test, cfg.extractor)?;
                Ok(SplitResult {
                    index: i,
                    n_train: p.train.len(),
                    n_test: p.test.len(),
                    channels: fitted.channels,
                    metrics: compute_metrics(&counts)?,
                    counts,
                })
            };
            run().map_err(|e| Error::Split {
                split: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = ConfusionCounts::default();
    for s in &splits {
        counts.add(&s.counts);
    }
    Ok(ReportRow {
        method: cfg.method,
        extractor: cfg.extractor,
        classifier: cfg.classifier,
        n_channels: cfg.n_channels,
        strategy,
        accuracy: splits.iter().map(|s| s.metrics.accuracy).sum::<f64>() / splits.len() as f64,
        sensitivity: mean_defined(splits.iter().map(|s| s.metrics.sensitivity)),
        specificity: mean_defined(splits.iter().map(|s| s.metrics.specificity)),
        counts,
        splits,
    })
}

fn check_dataset(ds: &Dataset) -> Result<()> {
    if ds.segments.is_empty() {
        return Err(Error::Empty("dataset has no segments"));
    }
    Ok(())
}

/// Evaluate one configuration under `plan`.
pub fn run_pipeline(ds: &Dataset, plan: &SplitPlan, cfg: &PipelineConfig) -> Result<EvaluationReport> {
    check_dataset(ds)?;
    cfg.validate(ds.n_channels())?;
    let bank = FeatureBank::new(ds, cfg.features);
    run_pipeline_with(&bank, plan, cfg)
}

/// As [`run_pipeline`], reusing a feature bank.
pub fn run_pipeline_with(bank: &FeatureBank, plan: &SplitPlan, cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let ds = bank.dataset();
    cfg.validate(ds.n_channels())?;
    let parts = plan_splits(ds, plan)?;
    let rankings = rank_all(ds, &parts, cfg.method, cfg.entropy_bins)?;
    let row = evaluate(bank, &parts, &rankings, cfg, plan.strategy, plan.seed)?;
    Ok(EvaluationReport {
        seed: plan.seed,
        unit: plan.unit,
        repeats: plan.repeats,
        folds: plan.folds,
        config: cfg.clone(),
        rows: vec![row],
    })
}

/// Axes of a configuration grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub methods: Vec<RankingMethod>,
    pub extractors: Vec<Extractor>,
    pub classifiers: Vec<ClassifierKind>,
    pub n_channels: Vec<usize>,
    pub strategies: Vec<SplitStrategy>,
}

impl Default for GridSpec {
    /// The full 2 × 3 × 3 × 3 × 3 experiment grid.
    fn default() -> Self {
        Self {
            methods: RankingMethod::ALL.to_vec(),
            extractors: Extractor::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            n_channels: vec![1, 2, 3],
            strategies: SplitStrategy::ALL.to_vec(),
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.methods.len()
            * self.extractors.len()
            * self.classifiers.len()
            * self.n_channels.len()
            * self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluate every grid point. Rows are ordered method, extractor,
/// classifier, channel count, strategy. `base` supplies all other settings.
pub fn run_grid(ds: &Dataset, plan: &SplitPlan, base: &PipelineConfig, grid: &GridSpec) -> Result<EvaluationReport> {
    check_dataset(ds)?;
    if grid.is_empty() {
        return Err(Error::Empty("configuration grid has no points"));
    }
    for &n in &grid.n_channels {
        PipelineConfig {
            n_channels: n,
            ..base.clone()
        }
        .validate(ds.n_channels())?;
    }
    let bank = FeatureBank::new(ds, base.features);
    let mut rankings: HashMap<(SplitStrategy, RankingMethod), (Vec<Partition>, Vec<ChannelRanking>)> = HashMap::new();
    for &strategy in &grid.strategies {
        let parts = plan_splits(ds, &plan.with_strategy(strategy))?;
        for &method in &grid.methods {
            let r = rank_all(ds, &parts, method, base.entropy_bins)?;
            rankings.insert((strategy, method), (parts.clone(), r));
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &method in &grid.methods {
        for &extractor in &grid.extractors {
            for &classifier in &grid.classifiers {
                for &n in &grid.n_channels {
                    for &strategy in &grid.strategies {
                        let cfg = PipelineConfig {
                            method,
                            extractor,
                            classifier,
                            n_channels: n,
                            ..base.clone()
                        };
                        let (parts, ranks) = &rankings[&(strategy, method)];
                        log::info!("evaluating {method}/{extractor}/{classifier}/N={n}/{strategy}");
                        rows.push(evaluate(&bank, parts, ranks, &cfg, strategy, plan.seed)?);
                    }
                }
            }
        }
    }
    Ok(EvaluationReport {
        seed: plan.seed,
        unit: plan.unit,
        repeats: plan.repeats,
        folds: plan.folds,
        config: base.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: RankingMethod,
    pub extractor: Extractor,
    pub classifier: ClassifierKind,
    pub n_channels: usize,
    pub accuracy: f64,
}

/// Accuracy against channel count, N = 1..=all, for both ranking methods.
/// Feature blocks use canonical channel order so that the full-montage
/// points of both methods see identical matrices.
pub fn sweep_channels(
    ds: &Dataset,
    plan: &SplitPlan,
    base: &PipelineConfig,
    extractors: &[Extractor],
    classifiers: &[ClassifierKind],
) -> Result<Vec<SweepRow>> {
    let grid = GridSpec {
        methods: RankingMethod::ALL.to_vec(),
        extractors: extractors.to_vec(),
        classifiers: classifiers.to_vec(),
        n_channels: (1..=ds.n_channels()).collect(),
        strategies: vec![plan.strategy],
    };
    let base = PipelineConfig {
        feature_order: FeatureOrder::Canonical,
        ..base.clone()
    };
    let report = run_grid(ds, plan, &base, &grid)?;
    let mut rows: Vec<SweepRow> = report
        .rows
        .into_iter()
        .map(|r| SweepRow {
            method: r.method,
            extractor: r.extractor,
            classifier: r.classifier,
            n_channels: r.n_channels,
            accuracy: r.accuracy,
        })
        .collect();
    rows.sort_by_key(|r| (r.extractor, r.classifier, r.method, r.n_channels));
    Ok(rows)
}
