//! Synthetic EEG-like recordings with class differences planted on chosen
//! channels.
//!
//! Every channel of every subject is an AR(1) background plus an alpha-band
//! rhythm with subject-specific amplitude, frequency and gain. On planted
//! channels, ADHD subjects additionally carry intermittent Hann-windowed
//! theta bursts whose amplitude is `effect_size` times the background
//! standard deviation. The bursts change the amplitude distribution (and so
//! its histogram entropy) as well as the local waveform shape.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Dataset, Recording, MONTAGE};

pub const SYNTH_SAMPLE_RATE_HZ: f64 = 128.0;

const AR_COEFF: f64 = 0.85;
const THETA_HZ: f64 = 6.0;
const SLOWING_PER_EFFECT: f64 = 0.065;
const AR_MAX: f64 = 0.98;
const SPIKE_GAIN: f64 = 4.0;
const SPIKE_LEN: usize = 16;
const SPIKE_GAP_MIN: usize = 192;
const SPIKE_GAP_MAX: usize = 320;

fn default_effect_size() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_per_class: usize,
    pub n_samples: usize,
    pub n_channels: usize,
    pub planted_channels: Vec<usize>,
    #[serde(default = "default_effect_size")]
    pub effect_size: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidParameter("n_per_class must be ≥ 1".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be ≥ 1".into()));
        }
        if self.n_channels == 0 || self.n_channels > MONTAGE.len() {
            return Err(Error::OutOfRange {
                what: "channel count",
                value: self.n_channels,
                min: 1,
                max: MONTAGE.len(),
            });
        }
        for &c in &self.planted_channels {
            if c >= self.n_channels {
                return Err(Error::OutOfRange {
                    what: "planted channel",
                    value: c,
                    min: 0,
                    max: self.n_channels - 1,
                });
            }
        }
        if !(self.effect_size.is_finite() && self.effect_size >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "effect_size must be finite and ≥ 0, got {}",
                self.effect_size
            )));
        }
        Ok(())
    }
}

struct SubjectTraits {
    gain: f64,
    alpha_amp: f64,
    alpha_hz: f64,
}

/// Generate a dataset. Subjects alternate ADHD/HC so that any prefix of the
/// recording order contains both classes.
pub fn synthesize_dataset(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let channels: Vec<String> = MONTAGE[..spec.n_channels].iter().map(|s| s.to_string()).collect();
    let mut recordings = Vec::with_capacity(2 * spec.n_per_class);
    for i in 0..spec.n_per_class {
        for label in ClassLabel::ALL {
            let rec_index = recordings.len() as u64;
            let subject_id = match label {
                ClassLabel::Adhd => format!("adhd{:03}", i + 1),
                ClassLabel::Hc => format!("hc{:03}", i + 1),
            };
            let data = synthesize_recording(spec, seed, rec_index, label);
            recordings.push(Recording::new(
                subject_id,
                label,
                SYNTH_SAMPLE_RATE_HZ,
                channels.clone(),
                data,
            )?);
        }
    }
    Dataset::new(recordings)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn synthesize_recording(spec: &SynthSpec, seed: u64, rec_index: u64, label: ClassLabel) -> Array2<f64> {
    let n_ch = spec.n_channels as u64;
    // stream 0 of each recording block carries subject traits
    let block = rec_index * (n_ch + 1);
    let mut subject_rng = stream_rng(seed, block);
    let traits = SubjectTraits {
        gain: 10.0 * subject_rng.random_range(0.8..1.25),
        alpha_amp: subject_rng.random_range(0.5..1.5),
        alpha_hz: subject_rng.random_range(9.0..11.0),
    };
    let mut data = Array2::zeros((spec.n_channels, spec.n_samples));
    for c in 0..spec.n_channels {
        let mut rng = stream_rng(seed, block + 1 + c as u64);
        let planted = spec.planted_channels.contains(&c) && label == ClassLabel::Adhd && spec.effect_size > 0.0;
        let ar = if planted {
            (AR_COEFF + SLOWING_PER_EFFECT * spec.effect_size).min(AR_MAX)
        } else {
            AR_COEFF
        };
        let mut row = background(&mut rng, spec.n_samples, &traits, ar);
        if planted {
            add_theta_bursts(&mut rng, &mut row, spec.effect_size);
            add_sharp_transients(&mut rng, &mut row, spec.effect_size);
        }
        for v in row.iter_mut() {
            *v *= traits.gain;
        }
        data.row_mut(c).assign(&ndarray::Array1::from(row));
    }
    data
}

fn background_std() -> f64 {
    1.0 / (1.0 - AR_COEFF * AR_COEFF).sqrt()
}

/// AR(1) noise with coefficient `ar`, scaled to the marginal sd of the
/// default coefficient, plus a subject-specific alpha rhythm.
fn background(rng: &mut ChaCha8Rng, n: usize, traits: &SubjectTraits, ar: f64) -> Vec<f64> {
    let sd = background_std();
    let innovation = sd * (1.0 - ar * ar).sqrt();
    let phase = rng.random_range(0.0..2.0 * PI);
    let amp = traits.alpha_amp * rng.random_range(0.8..1.2) * sd;
    let mut prev: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        prev = ar * prev + innovation * e;
        let alpha = amp * (2.0 * PI * traits.alpha_hz * t as f64 / SYNTH_SAMPLE_RATE_HZ + phase).sin();
        out.push(prev + alpha);
    }
    out
}

fn add_theta_bursts(rng: &mut ChaCha8Rng, row: &mut [f64], effect_size: f64) {
    let amp = effect_size * background_std();
    let n = row.len();
    let mut t = rng.random_range(0..64usize);
    while t < n {
        let len = rng.random_range(64..=128usize);
        let phase = rng.random_range(0.0..2.0 * PI);
        let end = (t + len).min(n);
        for (k, v) in row[t..end].iter_mut().enumerate() {
            let window = 0.5 - 0.5 * (2.0 * PI * k as f64 / (len - 1) as f64).cos();
            let tt = (t + k) as f64 / SYNTH_SAMPLE_RATE_HZ;
            *v += amp * window * (2.0 * PI * THETA_HZ * tt + phase).sin();
        }
        t = end + rng.random_range(64..=192usize);
    }
}

/// Sparse biphasic spikes. They stretch the amplitude range while leaving
/// most samples near the centre, which changes the histogram shape rather
/// than just its scale.
fn add_sharp_transients(rng: &mut ChaCha8Rng, row: &mut [f64], effect_size: f64) {
    let amp = SPIKE_GAIN * effect_size * background_std();
    let n = row.len();
    let mut t = rng.random_range(0..SPIKE_GAP_MAX);
    while t + SPIKE_LEN <= n {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let centre = (SPIKE_LEN - 1) as f64 / 2.0;
        for (k, v) in row[t..t + SPIKE_LEN].iter_mut().enumerate() {
            let u = (k as f64 - centre) / 2.0;
            // derivative of a Gaussian, peak magnitude 1
            *v += sign * amp * u * (0.5 - 0.5 * u * u).exp();
        }
        t += SPIKE_LEN + rng.random_range(SPIKE_GAP_MIN..SPIKE_GAP_MAX);
    }
}
