use std::fs;
use std::path::Path;

use anyhow::Context;
use endsel::evaluation::report::sweep_to_csv;
use endsel::evaluation::{run_grid, run_pipeline, sweep_channels};
use endsel::features::extract_features;
use endsel::ranking::{select_channels, ChannelRanking, RankingMethod};
use endsel::signal::{load_dataset, save_dataset, segment_dataset, Dataset, Segment, MONTAGE};
use endsel::synth::{synthesize_dataset, SynthSpec};
use log::info;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};

pub fn default_synth_spec() -> SynthSpec {
    SynthSpec {
        n_per_class: 20,
        n_samples: 4096,
        n_channels: MONTAGE.len(),
        planted_channels: vec![0, 2, 5],
        effect_size: 2.0,
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Create the output directory and echo the resolved configuration.
fn prepare_out(cfg: &RunConfig) -> anyhow::Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write(&cfg.out.join("config.json"), &cfg.to_json())
}

fn load_segments(cfg: &RunConfig) -> anyhow::Result<Dataset> {
    let ds = match (&cfg.dataset, &cfg.synth) {
        (Some(path), _) => load_dataset(path)?,
        (None, Some(spec)) => synthesize_dataset(spec, cfg.seed)?,
        (None, None) => return Err(ConfigError("no dataset manifest or synth spec given".into()).into()),
    };
    // the montage size is only known once the data is loaded
    cfg.pipeline.validate(ds.n_channels())?;
    let segments = segment_dataset(&ds, cfg.window_len)?;
    let [adhd, hc] = segments.segment_class_counts();
    info!(
        "{} recordings, {} segments ({adhd} ADHD, {hc} HC), {} channels",
        segments.recordings.len(),
        segments.segments.len(),
        segments.n_channels()
    );
    Ok(segments)
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.synth.as_ref().expect("synth spec resolved");
    prepare_out(cfg)?;
    let ds = synthesize_dataset(spec, cfg.seed)?;
    let manifest = save_dataset(&ds, &cfg.out)?;
    info!("wrote {} recordings and {}", ds.recordings.len(), manifest.display());
    let names: Vec<&str> = spec.planted_channels.iter().map(|&c| MONTAGE[c]).collect();
    let truth = json!({
        "seed": cfg.seed,
        "spec": spec,
        "planted_channels": spec.planted_channels,
        "planted_names": names,
    });
    write(&cfg.out.join("truth.json"), &serde_json::to_string_pretty(&truth)?)
}

fn ranking_csv(r: &ChannelRanking) -> String {
    let mut out = String::from("rank,channel_index,channel,score_bits\n");
    for (i, s) in r.scores.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            s.channel_index,
            s.channel_name,
            s.score
        ));
    }
    out
}

/// Rankings use every segment; the evaluation commands re-rank per split.
pub fn rank(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_segments(cfg)?;
    prepare_out(cfg)?;
    for method in RankingMethod::ALL {
        let r = endsel::ranking::rank(&ds, method, cfg.pipeline.entropy_bins)?;
        write(&cfg.out.join(format!("ranking_{method}.csv")), &ranking_csv(&r))?;
        write(
            &cfg.out.join(format!("ranking_{method}.json")),
            &serde_json::to_string_pretty(&r)?,
        )?;
    }
    Ok(())
}

pub fn extract(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_segments(cfg)?;
    prepare_out(cfg)?;
    let p = &cfg.pipeline;
    let ranking = endsel::ranking::rank(&ds, p.method, p.entropy_bins)?;
    let channels = select_channels(&ranking, p.n_channels)?;
    let segs: Vec<&Segment> = ds.segments.iter().collect();
    let m = extract_features(&segs, ds.channel_names(), &channels, p.extractor, &p.features)?;
    write(&cfg.out.join(format!("features_{}.csv", p.extractor)), &m.to_csv())
}

pub fn run(cfg: &RunConfig, grid: bool) -> anyhow::Result<()> {
    let ds = load_segments(cfg)?;
    prepare_out(cfg)?;
    let report = if grid {
        info!("evaluating {} configurations", cfg.grid.len());
        run_grid(&ds, &cfg.split, &cfg.pipeline, &cfg.grid)?
    } else {
        run_pipeline(&ds, &cfg.split, &cfg.pipeline)?
    };
    for row in &report.rows {
        info!(
            "{} {} {} N={} {}: accuracy {:.4}",
            row.method, row.extractor, row.classifier, row.n_channels, row.strategy, row.accuracy
        );
    }
    report.write(&cfg.out)?;
    info!("wrote report.csv and report.json to {}", cfg.out.display());
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_segments(cfg)?;
    prepare_out(cfg)?;
    let rows = sweep_channels(
        &ds,
        &cfg.split,
        &cfg.pipeline,
        &cfg.grid.extractors,
        &cfg.grid.classifiers,
    )?;
    write(&cfg.out.join("sweep.csv"), &sweep_to_csv(&rows))
}
