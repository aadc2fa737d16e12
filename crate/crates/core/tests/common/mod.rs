//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use endsel::classifiers::ensemble::{DecisionTree, Node};
use endsel::dwt::{db4_dec_hi, DB4_DEC_LO};
use endsel::signal::ClassLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Shannon entropy in bits of a 256-style equal-width histogram, counting
/// each sample by scanning bin edges.
pub fn entropy_oracle(samples: &[f64], n_bins: usize) -> f64 {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        let mut b = 0;
        if hi > lo {
            while b + 1 < n_bins && x >= lo + (hi - lo) * (b + 1) as f64 / n_bins as f64 {
                b += 1;
            }
        }
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// One analysis level by explicit symmetric padding and full convolution.
pub fn naive_dwt_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as isize;
    let pad = 7isize;
    let at = |i: isize| -> f64 {
        // half-point symmetric: … x1 x0 | x0 x1 … x(n-1) | x(n-1) x(n-2) …
        let mut i = i;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return x[i as usize];
            }
        }
    };
    let padded: Vec<f64> = (-pad..n + pad).map(at).collect();
    let hi = db4_dec_hi();
    let conv = |h: &[f64]| -> Vec<f64> {
        let full_len = padded.len() + h.len() - 1;
        (0..full_len)
            .map(|k| {
                (0..h.len())
                    .filter(|&j| k >= j && k - j < padded.len())
                    .map(|j| h[j] * padded[k - j])
                    .sum()
            })
            .collect()
    };
    let (full_lo, full_hi) = (conv(&DB4_DEC_LO), conv(&hi));
    let m = (x.len() + 7) / 2;
    // output i sits at original position 2i+1, i.e. padded position 2i+8
    let pick = |full: &Vec<f64>| (0..m).map(|i| full[2 * i + 1 + pad as usize]).collect();
    (pick(&full_lo), pick(&full_hi))
}

pub fn naive_dwt(x: &[f64], levels: usize) -> Vec<Vec<f64>> {
    let mut details = Vec::new();
    let mut a = x.to_vec();
    for _ in 0..levels {
        let (ca, cd) = naive_dwt_step(&a);
        details.push(cd);
        a = ca;
    }
    let mut out = vec![a];
    out.extend(details.into_iter().rev());
    out
}

/// SLBP histogram by a double loop with distance-based weights: a
/// neighbour at distance `m` on either side weighs `2^(m−1)`.
pub fn slbp_oracle(x: &[f64], l: usize) -> Vec<u64> {
    let mut hist = vec![0u64; 2 * ((1 << l) - 1) + 1];
    for n in l..x.len() - l {
        let mut code = 0;
        for m in 1..=l {
            if x[n - m] >= x[n] {
                code += 1 << (m - 1);
            }
            if x[n + m] >= x[n] {
                code += 1 << (m - 1);
            }
        }
        hist[code] += 1;
    }
    hist
}

/// Full-scan k-NN with the documented tie rules.
pub fn knn_oracle(points: &[Vec<f64>], labels: &[ClassLabel], k: usize, q: &[f64]) -> ClassLabel {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let (mut va, mut vh, mut sa, mut sh) = (0, 0, 0.0, 0.0);
    for &(d2, i) in &d[..k] {
        if labels[i] == ClassLabel::Adhd {
            va += 1;
            sa += d2.sqrt();
        } else {
            vh += 1;
            sh += d2.sqrt();
        }
    }
    if va > vh || (va == vh && sa <= sh) {
        ClassLabel::Adhd
    } else {
        ClassLabel::Hc
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp()
}

/// Projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dual SVM by projected gradient ascent. Returns `(α, b)`.
pub fn svm_qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * rbf(gamma, &x[i], &x[j])).collect())
        .collect();
    let step = 1.0 / n as f64;
    let mut a = vec![0.0; n];
    for _ in 0..iters {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>())
            .collect();
        let v: Vec<f64> = (0..n).map(|i| a[i] + step * grad[i]).collect();
        a = project(&v, y, c);
    }
    // bias from free vectors: y_i − Σ α_j y_j K_ij
    let f = |i: usize| (0..n).map(|j| a[j] * y[j] * rbf(gamma, &x[j], &x[i])).sum::<f64>();
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > 1e-6 && a[i] < c - 1e-6).collect();
    let b = if free.is_empty() {
        0.0
    } else {
        free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64
    };
    (a, b)
}

/// Walks the arena directly rather than through the library helper.
pub fn tree_vote(tree: &DecisionTree, x: &[f64]) -> ClassLabel {
    let mut node = &tree.nodes[0];
    loop {
        match node {
            Node::Leaf { label } => return *label,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] > *threshold {
                    &tree.nodes[*right]
                } else {
                    &tree.nodes[*left]
                }
            }
        }
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Two well-separated Gaussian blobs, `n` per class, in `d` dimensions.
pub fn blobs(seed: u64, n: usize, d: usize, separation: f64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..2 * n {
        let label = if i % 2 == 0 { ClassLabel::Adhd } else { ClassLabel::Hc };
        let centre = if label == ClassLabel::Adhd {
            separation / 2.0
        } else {
            -separation / 2.0
        };
        x.push(gaussian(&mut r, d).into_iter().map(|v| v + centre).collect());
        y.push(label);
    }
    (x, y)
}

/// Four clusters at (±1, ±1); same-sign quadrants are ADHD.
pub fn xor_clusters(seed: u64, per_cluster: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        let label = if cx * cy > 0.0 {
            ClassLabel::Adhd
        } else {
            ClassLabel::Hc
        };
        for _ in 0..per_cluster {
            let e = gaussian(&mut r, 2);
            x.push(vec![cx + spread * e[0], cy + spread * e[1]]);
            y.push(label);
        }
    }
    (x, y)
}

pub fn matrix(x: &[Vec<f64>], y: &[ClassLabel]) -> endsel::features::FeatureMatrix {
    let d = x.first().map_or(0, Vec::len);
    let names = (0..d).map(|j| format!("f{j}")).collect();
    let values = ndarray::Array2::from_shape_vec((x.len(), d), x.concat()).unwrap();
    endsel::features::FeatureMatrix::new(names, values, y.to_vec()).unwrap()
}
