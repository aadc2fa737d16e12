//! Empirical mode decomposition by envelope-mean sifting.
//!
//! Envelopes are natural cubic splines through the local maxima (minima),
//! with the two extrema nearest each end mirrored about that end point. A
//! sift stops once the envelope-mean to envelope-amplitude ratio `σ(t)`
//! satisfies `σ < θ1` on all but a fraction `α` of samples and `σ < θ2`
//! everywhere, and the extrema and zero-crossing counts differ by at most
//! one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SIGNAL_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiftConfig {
    pub max_sift_iters: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub alpha: f64,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            max_sift_iters: 100,
            theta1: 0.05,
            theta2: 0.5,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdResult {
    pub imfs: Vec<Vec<f64>>,
    pub residue: Vec<f64>,
    pub sift_config: SiftConfig,
    /// Sifting iterations spent on each IMF.
    pub sift_iterations: Vec<usize>,
}

impl EmdResult {
    /// Sum of all IMFs and the residue.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

/// Local maxima and minima positions.
///
/// An extremum is a strict sign change of the first difference; a flat run
/// between the two changes counts once, at its midpoint.
pub fn find_extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut prev_sign = 0i8;
    let mut run_start = 0usize;
    for i in 0..x.len().saturating_sub(1) {
        let d = x[i + 1] - x[i];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            continue;
        };
        if prev_sign > 0 && sign < 0 {
            maxima.push((run_start + i) / 2);
        } else if prev_sign < 0 && sign > 0 {
            minima.push((run_start + i) / 2);
        }
        prev_sign = sign;
        run_start = i + 1;
    }
    (maxima, minima)
}

/// Sign changes between consecutive non-zero samples.
pub fn count_zero_crossings(x: &[f64]) -> usize {
    let mut count = 0;
    let mut prev = 0.0f64;
    for &v in x {
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

/// `|#extrema − #zero crossings| ≤ 1`.
pub fn satisfies_extrema_rule(x: &[f64]) -> bool {
    let (mx, mn) = find_extrema(x);
    (mx.len() + mn.len()).abs_diff(count_zero_crossings(x)) <= 1
}

/// Natural cubic spline through strictly increasing knots.
struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        debug_assert!(n >= 2 && ys.len() == n);
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            let mut upper = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[k] = 2.0 * (h0 + h1);
                upper[k] = h1;
                rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = xs[k + 1] - xs[k];
                let w = lower / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                second[k + 1] = (rhs[k] - upper[k] * second[k + 2]) / diag[k];
            }
        }
        Self { xs, ys, second }
    }

    /// Evaluate at `0, 1, …, len−1`; the knots must bracket that range.
    fn sample(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut k = 0usize;
        for t in 0..len {
            let t = t as f64;
            while k + 2 < self.xs.len() && t > self.xs[k + 1] {
                k += 1;
            }
            let (x0, x1) = (self.xs[k], self.xs[k + 1]);
            let h = x1 - x0;
            let a = (x1 - t) / h;
            let b = (t - x0) / h;
            let v = a * self.ys[k]
                + b * self.ys[k + 1]
                + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h / 6.0;
            out.push(v);
        }
        out
    }
}

/// Spline envelope through `idx`, with the two extrema nearest each end
/// mirrored about the end sample.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let k = idx.len();
    let mut xs = Vec::with_capacity(k + 4);
    let mut ys = Vec::with_capacity(k + 4);
    for &i in idx[..2].iter().rev() {
        xs.push(-(i as f64));
        ys.push(x[i]);
    }
    for &i in idx {
        xs.push(i as f64);
        ys.push(x[i]);
    }
    for &i in idx[k - 2..].iter().rev() {
        xs.push(2.0 * last - i as f64);
        ys.push(x[i]);
    }
    NaturalSpline::new(xs, ys).sample(n)
}

enum SiftState {
    Converged,
    /// Upper and lower envelopes cannot both be built any more.
    Exhausted,
    /// Envelope mean to subtract, and whether the count rule already holds.
    Continue(Vec<f64>, bool),
}

fn sift_step(h: &[f64], cfg: &SiftConfig) -> SiftState {
    let (maxima, minima) = find_extrema(h);
    if maxima.len() < 2 || minima.len() < 2 {
        return SiftState::Exhausted;
    }
    let upper = envelope(h, &maxima);
    let lower = envelope(h, &minima);
    let mut mean = Vec::with_capacity(h.len());
    let mut above_theta1 = 0usize;
    let mut above_theta2 = false;
    for (u, l) in upper.iter().zip(&lower) {
        let m = 0.5 * (u + l);
        let amp = 0.5 * (u - l).abs();
        let ratio = if amp > 0.0 {
            m.abs() / amp
        } else if m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if ratio > cfg.theta1 {
            above_theta1 += 1;
        }
        if ratio > cfg.theta2 {
            above_theta2 = true;
        }
        mean.push(m);
    }
    let fraction = above_theta1 as f64 / h.len() as f64;
    let counts_ok = (maxima.len() + minima.len()).abs_diff(count_zero_crossings(h)) <= 1;
    if fraction <= cfg.alpha && !above_theta2 && counts_ok {
        SiftState::Converged
    } else {
        SiftState::Continue(mean, counts_ok)
    }
}

/// Sift one IMF out of `signal`; returns the IMF and the iteration count.
///
/// If the cap is reached first, the latest iterate that met the count rule
/// is returned. Failing that, sifting continues on the count rule alone.
fn sift(signal: &[f64], cfg: &SiftConfig) -> (Vec<f64>, usize) {
    let mut h = signal.to_vec();
    let mut last_ok: Option<(Vec<f64>, usize)> = None;
    for iter in 0..cfg.max_sift_iters {
        match sift_step(&h, cfg) {
            SiftState::Converged | SiftState::Exhausted => return (h, iter),
            SiftState::Continue(mean, counts_ok) => {
                if counts_ok {
                    last_ok = Some((h.clone(), iter));
                }
                for (v, m) in h.iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
        }
    }
    if let Some(found) = last_ok {
        return found;
    }
    let mut iter = cfg.max_sift_iters;
    while iter < 10 * cfg.max_sift_iters {
        match sift_step(&h, cfg) {
            SiftState::Converged | SiftState::Exhausted | SiftState::Continue(_, true) => break,
            SiftState::Continue(mean, false) => {
                for (v, m) in h.iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
        }
        iter += 1;
    }
    (h, iter)
}

fn has_oscillation(x: &[f64]) -> bool {
    let (mx, mn) = find_extrema(x);
    mx.len() >= 2 && mn.len() >= 2
}

pub fn emd_decompose(signal: &[f64], n_imfs: usize) -> Result<EmdResult> {
    emd_decompose_with(signal, n_imfs, &SiftConfig::default())
}

/// Extract up to `n_imfs` IMFs. Extraction ends early once the residue has
/// fewer than two maxima or two minima.
pub fn emd_decompose_with(signal: &[f64], n_imfs: usize, cfg: &SiftConfig) -> Result<EmdResult> {
    if signal.len() < MIN_SIGNAL_LEN {
        return Err(Error::TooShort {
            needed: MIN_SIGNAL_LEN,
            got: signal.len(),
        });
    }
    if let Some(pos) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if cfg.max_sift_iters == 0 {
        return Err(Error::InvalidParameter("max_sift_iters must be ≥ 1".into()));
    }
    let mut residue = signal.to_vec();
    let mut imfs = Vec::with_capacity(n_imfs);
    let mut sift_iterations = Vec::with_capacity(n_imfs);
    while imfs.len() < n_imfs && has_oscillation(&residue) {
        let (imf, iters) = sift(&residue, cfg);
        for (r, v) in residue.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
        sift_iterations.push(iters);
    }
    Ok(EmdResult {
        imfs,
        residue,
        sift_config: *cfg,
        sift_iterations,
    })
}
