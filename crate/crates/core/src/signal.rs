//! Recordings, segments and dataset ingestion.
//!
//! Sample matrices are stored channel-major: `data[[channel, sample]]`.
//! Columns of the on-disk CSV files are channels, rows are samples.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default analysis window: 2048 samples, 16 s at 128 Hz.
pub const DEFAULT_WINDOW_LEN: usize = 2048;

/// The 19-electrode 10-20 montage in canonical column order.
pub const MONTAGE: [&str; 19] = [
    "Fz", "Cz", "Pz", "C3", "T7", "C4", "T8", "Fp1", "Fp2", "F3", "F4", "F7", "F8", "P3", "P4", "P7", "P8", "O1", "O2",
];

const ALIASES: [(&str, &str); 4] = [("T3", "T7"), ("T4", "T8"), ("T5", "P7"), ("T6", "P8")];

/// Resolve a channel name (old or new 10-20 nomenclature, case-insensitive)
/// to its position in [`MONTAGE`].
pub fn montage_index(name: &str) -> Option<usize> {
    let name = name.trim();
    let resolved = ALIASES
        .iter()
        .find(|(old, _)| old.eq_ignore_ascii_case(name))
        .map(|(_, new)| *new)
        .unwrap_or(name);
    MONTAGE.iter().position(|m| m.eq_ignore_ascii_case(resolved))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "ADHD")]
    Adhd,
    #[serde(rename = "HC")]
    Hc,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Adhd, ClassLabel::Hc];

    /// +1 for ADHD (the positive class), -1 for HC.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Adhd => 1.0,
            ClassLabel::Hc => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            ClassLabel::Adhd
        } else {
            ClassLabel::Hc
        }
    }

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Adhd => 0,
            ClassLabel::Hc => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ClassLabel::Adhd => ClassLabel::Hc,
            ClassLabel::Hc => ClassLabel::Adhd,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Adhd => "ADHD",
            ClassLabel::Hc => "HC",
        })
    }
}

/// One subject's multi-channel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub label: ClassLabel,
    pub sample_rate_hz: f64,
    pub channels: Vec<String>,
    /// Shape `(n_channels, n_samples)`.
    pub data: Array2<f64>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        label: ClassLabel,
        sample_rate_hz: f64,
        channels: Vec<String>,
        data: Array2<f64>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if channels.len() != data.nrows() {
            return Err(Error::DimensionMismatch {
                expected: channels.len(),
                got: data.nrows(),
            });
        }
        let mut seen = HashSet::new();
        for name in &channels {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateChannel(name.clone()));
            }
        }
        if data.ncols() == 0 {
            return Err(Error::Empty("recording has no samples"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            label,
            sample_rate_hz,
            channels,
            data,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }
}

/// A fixed-length window cut from one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub subject_id: String,
    /// Position of the parent recording in [`Dataset::recordings`].
    pub recording: usize,
    pub label: ClassLabel,
    pub start_sample: usize,
    /// Shape `(n_channels, window_len)`.
    pub data: Array2<f64>,
}

impl Segment {
    pub fn channel(&self, c: usize) -> ArrayView1<'_, f64> {
        self.data.row(c)
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<Recording>,
    pub segments: Vec<Segment>,
}

impl Dataset {
    /// Builds an unsegmented dataset. All recordings must share one channel
    /// list and sample rate, and subject ids must be unique.
    pub fn new(recordings: Vec<Recording>) -> Result<Self> {
        let mut ids = HashSet::new();
        for rec in &recordings {
            if !ids.insert(rec.subject_id.as_str()) {
                return Err(Error::DuplicateSubject(rec.subject_id.clone()));
            }
        }
        if let Some(first) = recordings.first() {
            for rec in &recordings[1..] {
                if rec.channels != first.channels {
                    return Err(Error::InvalidParameter(format!(
                        "recording `{}` has a different channel list than `{}`",
                        rec.subject_id, first.subject_id
                    )));
                }
                if rec.sample_rate_hz != first.sample_rate_hz {
                    return Err(Error::InvalidParameter(format!(
                        "recording `{}` has a different sample rate than `{}`",
                        rec.subject_id, first.subject_id
                    )));
                }
            }
        }
        Ok(Self {
            recordings,
            segments: Vec::new(),
        })
    }

    pub fn channel_names(&self) -> &[String] {
        self.recordings.first().map(|r| r.channels.as_slice()).unwrap_or(&[])
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names().len()
    }

    pub fn sample_rate_hz(&self) -> Option<f64> {
        self.recordings.first().map(|r| r.sample_rate_hz)
    }

    /// Recording counts as `[ADHD, HC]`.
    pub fn recording_class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for r in &self.recordings {
            counts[r.label.index()] += 1;
        }
        counts
    }

    /// Segment counts as `[ADHD, HC]`.
    pub fn segment_class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for s in &self.segments {
            counts[s.label.index()] += 1;
        }
        counts
    }

    pub fn segment_labels(&self) -> Vec<ClassLabel> {
        self.segments.iter().map(|s| s.label).collect()
    }
}

/// Cut every recording into non-overlapping windows starting at sample 0.
/// Trailing partial windows are dropped.
pub fn segment_dataset(ds: &Dataset, window_len: usize) -> Result<Dataset> {
    if window_len < 2 {
        return Err(Error::OutOfRange {
            what: "window length",
            value: window_len,
            min: 2,
            max: usize::MAX,
        });
    }
    let mut segments = Vec::new();
    for (ri, rec) in ds.recordings.iter().enumerate() {
        let n_windows = rec.n_samples() / window_len;
        for w in 0..n_windows {
            let start = w * window_len;
            segments.push(Segment {
                subject_id: rec.subject_id.clone(),
                recording: ri,
                label: rec.label,
                start_sample: start,
                data: rec.data.slice(s![.., start..start + window_len]).to_owned(),
            });
        }
    }
    Ok(Dataset {
        recordings: ds.recordings.clone(),
        segments,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub sample_rate_hz: f64,
    pub channels: Vec<String>,
    pub recordings: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: ClassLabel,
    pub path: PathBuf,
}

/// Load a manifest and all recording files it references.
///
/// Columns are reordered into [`MONTAGE`] order; legacy names (T3, T4,
/// T5, T6) are mapped to their current equivalents.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: manifest_path.to_path_buf(),
        source: e,
    })?;
    if manifest.recordings.is_empty() {
        return Err(Error::Empty("manifest lists no recordings"));
    }

    // file column -> montage position
    let mut montage_pos = Vec::with_capacity(manifest.channels.len());
    let mut seen = HashSet::new();
    for name in &manifest.channels {
        let idx = montage_index(name).ok_or_else(|| Error::UnknownChannel(name.clone()))?;
        if !seen.insert(idx) {
            return Err(Error::DuplicateChannel(name.clone()));
        }
        montage_pos.push(idx);
    }
    let mut order: Vec<usize> = (0..montage_pos.len()).collect();
    order.sort_by_key(|&col| montage_pos[col]);
    let channels: Vec<String> = order.iter().map(|&col| MONTAGE[montage_pos[col]].to_string()).collect();

    let mut ids = HashSet::new();
    for entry in &manifest.recordings {
        if !ids.insert(entry.subject_id.as_str()) {
            return Err(Error::DuplicateSubject(entry.subject_id.clone()));
        }
    }

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let recordings = manifest
        .recordings
        .par_iter()
        .map(|entry| {
            let path = base.join(&entry.path);
            let raw = read_recording_csv(&path, manifest.channels.len())?;
            let mut data = Array2::zeros((channels.len(), raw.ncols()));
            for (dst, &col) in order.iter().enumerate() {
                data.row_mut(dst).assign(&raw.row(col));
            }
            Recording::new(
                entry.subject_id.clone(),
                entry.label,
                manifest.sample_rate_hz,
                channels.clone(),
                data,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(recordings)
}

/// Read a headerless CSV (rows = samples, columns = channels) into a
/// channel-major matrix.
pub fn read_recording_csv(path: &Path, n_channels: usize) -> Result<Array2<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let mut samples: Vec<f64> = Vec::new();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(n_rows as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != n_channels {
            return Err(Error::ChannelCountMismatch {
                path: path.to_path_buf(),
                line,
                expected: n_channels,
                found: record.len(),
            });
        }
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message: format!("not a number: `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!("non-finite value `{cell}`"),
                });
            }
            samples.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            message: "file contains no samples".into(),
        });
    }
    // samples is row-major (sample, channel); transpose into channel-major
    let by_sample = Array2::from_shape_vec((n_rows, n_channels), samples).expect("row lengths validated above");
    Ok(by_sample.t().as_standard_layout().into_owned())
}

pub fn write_recording_csv(path: &Path, data: &Array2<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(std::io::BufWriter::new(file));
    let mut row = Vec::with_capacity(data.nrows());
    for t in 0..data.ncols() {
        row.clear();
        row.extend(data.column(t).iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: t as u64 + 1,
            message: e.to_string(),
        })?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn file_stem_for(subject_id: &str) -> String {
    subject_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Write `<dir>/manifest.json` plus one CSV per recording under
/// `<dir>/recordings/`. Returns the manifest path.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<PathBuf> {
    let rec_dir = dir.join("recordings");
    fs::create_dir_all(&rec_dir).map_err(|e| Error::io(&rec_dir, e))?;
    let mut entries = Vec::with_capacity(ds.recordings.len());
    let mut used = HashSet::new();
    for (i, rec) in ds.recordings.iter().enumerate() {
        let mut stem = file_stem_for(&rec.subject_id);
        if !used.insert(stem.clone()) {
            stem = format!("{stem}_{i}");
            used.insert(stem.clone());
        }
        let rel = PathBuf::from("recordings").join(format!("{stem}.csv"));
        write_recording_csv(&dir.join(&rel), &rec.data)?;
        entries.push(ManifestEntry {
            subject_id: rec.subject_id.clone(),
            label: rec.label,
            path: rel,
        });
    }
    let manifest = Manifest {
        sample_rate_hz: ds.sample_rate_hz().unwrap_or(128.0),
        channels: ds.channel_names().to_vec(),
        recordings: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
