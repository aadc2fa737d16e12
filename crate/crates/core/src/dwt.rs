//! Multilevel Daubechies-4 discrete wavelet transform.
//!
//! Boundaries use half-point symmetric extension (`x[-1] = x[0]`,
//! `x[n] = x[n-1]`). Level `k` maps an input of length `n` to
//! `floor((n + 7) / 2)` coefficients: the full convolution with the 8-tap
//! analysis filter is computed over the extended signal and every odd output
//! index is kept, `c[i] = Σ_j h[j]·x[2i + 1 − j]`. The same convention is
//! used by common wavelet toolboxes, so results are directly comparable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// db4 decomposition low-pass filter (8 taps, 4 vanishing moments).
pub const DB4_DEC_LO: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

pub const FILTER_LEN: usize = DB4_DEC_LO.len();

/// Quadrature mirror of the low-pass filter: `g[k] = (−1)^(k+1)·h[L−1−k]`.
pub fn db4_dec_hi() -> [f64; 8] {
    let mut hi = [0.0; 8];
    for (k, v) in hi.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        *v = sign * DB4_DEC_LO[FILTER_LEN - 1 - k];
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub levels: usize,
    /// `[cA_L, cD_L, cD_{L-1}, …, cD_1]`.
    pub subbands: Vec<Vec<f64>>,
    pub boundary_mode: BoundaryMode,
}

impl WaveletDecomposition {
    pub fn approximation(&self) -> &[f64] {
        &self.subbands[0]
    }

    /// Detail coefficients at `level` (1 = finest).
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.subbands[self.levels + 1 - level]
    }

    pub fn subband_names(&self) -> Vec<String> {
        std::iter::once(format!("cA{}", self.levels))
            .chain((1..=self.levels).rev().map(|l| format!("cD{l}")))
            .collect()
    }
}

/// Coefficient count for one analysis step on `n` samples.
pub fn coeff_len(n: usize) -> usize {
    (n + FILTER_LEN - 1) / 2
}

/// Half-point symmetric index reflection; valid for any integer offset.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// One analysis step: returns `(approximation, detail)`.
pub fn dwt_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let hi = db4_dec_hi();
    let out_len = coeff_len(n);
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let centre = 2 * i as isize + 1;
        let mut a = 0.0;
        let mut d = 0.0;
        // interior fast path avoids reflection
        if centre >= (FILTER_LEN as isize - 1) && (centre as usize) < n {
            let c = centre as usize;
            for j in 0..FILTER_LEN {
                let v = x[c - j];
                a += DB4_DEC_LO[j] * v;
                d += hi[j] * v;
            }
        } else {
            for j in 0..FILTER_LEN {
                let v = x[reflect(centre - j as isize, n)];
                a += DB4_DEC_LO[j] * v;
                d += hi[j] * v;
            }
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// One synthesis step, the adjoint of [`dwt_step`] restricted to the
/// `2·len − 6` central samples.
pub fn idwt_step(approx: &[f64], detail: &[f64]) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::DimensionMismatch {
            expected: approx.len(),
            got: detail.len(),
        });
    }
    let m = approx.len();
    if 2 * m < FILTER_LEN - 1 {
        return Err(Error::TooShort {
            needed: FILTER_LEN / 2,
            got: m,
        });
    }
    let hi = db4_dec_hi();
    let out_len = 2 * m + 2 - FILTER_LEN;
    let mut out = vec![0.0; out_len];
    // x[t] = Σ_k a[k]·h[2k+1−t] + d[k]·g[2k+1−t]
    for (k, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        let base = 2 * k + 1;
        for j in 0..FILTER_LEN {
            if j > base {
                break;
            }
            let t = base - j;
            if t < out_len {
                out[t] += DB4_DEC_LO[j] * a + hi[j] * d;
            }
        }
    }
    Ok(out)
}

pub fn dwt_multilevel(signal: &[f64], levels: usize) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(Error::InvalidParameter("wavelet levels must be ≥ 1".into()));
    }
    let needed = 1usize << levels;
    if signal.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: signal.len(),
        });
    }
    if let Some(pos) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let mut details = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = dwt_step(&approx);
        details.push(d);
        approx = a;
    }
    let mut subbands = Vec::with_capacity(levels + 1);
    subbands.push(approx);
    subbands.extend(details.into_iter().rev());
    Ok(WaveletDecomposition {
        levels,
        subbands,
        boundary_mode: BoundaryMode::Symmetric,
    })
}

pub fn idwt_multilevel(dec: &WaveletDecomposition, original_len: usize) -> Result<Vec<f64>> {
    if dec.subbands.len() != dec.levels + 1 || dec.levels == 0 {
        return Err(Error::InvalidParameter(format!(
            "expected {} subbands, found {}",
            dec.levels + 1,
            dec.subbands.len()
        )));
    }
    let mut approx = dec.subbands[0].clone();
    for detail in &dec.subbands[1..] {
        // an odd-length input at this level reconstructs one sample long
        if approx.len() == detail.len() + 1 {
            approx.pop();
        }
        approx = idwt_step(&approx, detail)?;
    }
    if approx.len() < original_len || approx.len() > original_len + 1 {
        return Err(Error::InvalidParameter(format!(
            "subbands reconstruct {} samples, expected {original_len}",
            approx.len()
        )));
    }
    approx.truncate(original_len);
    Ok(approx)
}
