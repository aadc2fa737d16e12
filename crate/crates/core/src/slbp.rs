//! Symmetrically weighted local binary patterns for 1-D signals.
//!
//! For sample `n` and half-width `L`, every neighbour is compared against
//! `x[n]` with the step `f(d) = 1 if d ≥ 0 else 0`. Left neighbours
//! `x[n−L+m]` carry weight `2^(L−1−m)` and right neighbours `x[n+1+m]`
//! carry weight `2^m`. The weighting is mirrored about `n`: the nearest
//! neighbour on each side has weight 1, the farthest `2^(L−1)`. Codes span
//! `0..=2·(2^L − 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlbpConfig {
    pub half_width: usize,
}

impl Default for SlbpConfig {
    fn default() -> Self {
        Self { half_width: 4 }
    }
}

impl SlbpConfig {
    pub fn max_code(&self) -> usize {
        2 * ((1usize << self.half_width) - 1)
    }

    pub fn n_bins(&self) -> usize {
        self.max_code() + 1
    }

    fn validate(&self) -> Result<()> {
        if self.half_width == 0 || self.half_width > 16 {
            return Err(Error::InvalidParameter(format!(
                "SLBP half width must be in 1..=16, got {}",
                self.half_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlbpHistogram {
    pub counts: Vec<u64>,
    pub n_coded_samples: usize,
}

#[inline]
fn step(d: f64) -> usize {
    usize::from(d >= 0.0)
}

#[inline]
fn code_unchecked(x: &[f64], n: usize, l: usize) -> usize {
    let centre = x[n];
    let mut code = 0;
    for m in 0..l {
        code += step(x[n + m - l] - centre) << (l - 1 - m);
        code += step(x[n + m + 1] - centre) << m;
    }
    code
}

/// Code of sample `n`; requires `L ≤ n ≤ len − L − 1`.
pub fn slbp_code(signal: &[f64], n: usize, cfg: &SlbpConfig) -> Result<usize> {
    cfg.validate()?;
    let l = cfg.half_width;
    if signal.len() < 2 * l + 1 || n < l || n + l >= signal.len() {
        return Err(Error::OutOfRange {
            what: "SLBP sample index",
            value: n,
            min: l,
            max: signal.len().saturating_sub(l + 1),
        });
    }
    Ok(code_unchecked(signal, n, l))
}

/// Histogram of codes over every sample with a complete neighbourhood.
pub fn slbp_histogram(signal: &[f64], cfg: &SlbpConfig) -> Result<SlbpHistogram> {
    cfg.validate()?;
    let l = cfg.half_width;
    if signal.len() < 2 * l + 1 {
        return Err(Error::TooShort {
            needed: 2 * l + 1,
            got: signal.len(),
        });
    }
    let mut counts = vec![0u64; cfg.n_bins()];
    for n in l..signal.len() - l {
        counts[code_unchecked(signal, n, l)] += 1;
    }
    Ok(SlbpHistogram {
        counts,
        n_coded_samples: signal.len() - 2 * l,
    })
}
