//! Soft-margin RBF support vector machine trained with sequential minimal
//! optimization.
//!
//! The dual `min ½αᵀQα − eᵀα` s.t. `yᵀα = 0, 0 ≤ α ≤ C`, with
//! `Q_ij = y_i y_j K(x_i, x_j)`, is solved two variables at a time. The
//! working pair is the maximal violating index `i` and the partner `j` with
//! the largest second-order decrease of the objective. Optimization stops
//! when the KKT gap `m(α) − M(α)` falls below `tol`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal::ClassLabel;

/// Curvature floor for degenerate (duplicate-point) pairs.
const TAU: f64 = 1e-12;
const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / (d · mean per-feature variance)`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub tol: f64,
    pub dim: usize,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// Row-major support vectors.
    pub support_vectors: Vec<f64>,
    /// `α_i · y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: u64,
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d · mean per-feature population variance)`, falling back to `1/d`.
pub fn default_gamma(x: &FeatureMatrix) -> f64 {
    let d = x.n_features().max(1) as f64;
    let n = x.n_rows() as f64;
    let mean_var = x
        .values
        .columns()
        .into_iter()
        .map(|col| {
            let m = col.sum() / n;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d;
    if mean_var > 0.0 && mean_var.is_finite() {
        1.0 / (d * mean_var)
    } else {
        1.0 / d
    }
}

/// Intermediate solver state, exposed for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    /// Gradient of the dual objective, `Qα − e`.
    pub gradient: Vec<f64>,
    pub rho: f64,
    pub iterations: u64,
    pub gamma: f64,
}

impl SmoSolution {
    /// `m(α) − M(α)`: largest KKT violation across the working sets.
    pub fn kkt_gap(&self, c: f64) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for ((&a, &y), &g) in self.alpha.iter().zip(&self.y).zip(&self.gradient) {
            let v = -y * g;
            if in_up(a, y, c) {
                up = up.max(v);
            }
            if in_low(a, y, c) {
                low = low.min(v);
            }
        }
        (up - low).max(0.0)
    }

    /// Dual objective `eᵀα − ½αᵀQα` (maximized).
    pub fn dual_objective(&self) -> f64 {
        dual_objective(&self.alpha, &self.gradient)
    }
}

fn dual_objective(alpha: &[f64], gradient: &[f64]) -> f64 {
    // ½αᵀQα − eᵀα = ½ Σ α_i (G_i − 1)
    -0.5 * alpha.iter().zip(gradient).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

#[inline]
fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

#[inline]
fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

fn kernel_matrix(points: &[&[f64]], gamma: f64) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    k.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { rbf(gamma, points[i], points[j]) };
        }
    });
    k
}

fn validate(x: &FeatureMatrix, params: &SvmParams) -> Result<()> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {}", params.c)));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            params.tol
        )));
    }
    if let Some(g) = params.gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
        }
    }
    let counts = x.class_counts();
    for class in ClassLabel::ALL {
        if counts[class.index()] == 0 {
            return Err(Error::MissingClass(class));
        }
    }
    Ok(())
}

/// Run SMO to convergence. `trace`, when given, receives the dual objective
/// after every pair update.
pub fn smo_solve(x: &FeatureMatrix, params: &SvmParams, mut trace: Option<&mut Vec<f64>>) -> Result<SmoSolution> {
    validate(x, params)?;
    let n = x.n_rows();
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
    let rows: Vec<Vec<f64>> = x.values.rows().into_iter().map(|r| r.to_vec()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let k = kernel_matrix(&refs, gamma);
    let y: Vec<f64> = x.labels.iter().map(|l| l.sign()).collect();
    let c = params.c;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0u64;

    loop {
        // maximal violating i
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t], c) {
                let v = -y[t] * grad[t];
                if v >= g_max {
                    g_max = v;
                    i_sel = t;
                }
            }
        }
        // second-order partner j and the low-set maximum for the stop test
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_decrease = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t], c) {
                continue;
            }
            let v = y[t] * grad[t];
            g_max2 = g_max2.max(v);
            if i_sel == usize::MAX {
                continue;
            }
            let grad_diff = g_max + v;
            if grad_diff > 0.0 {
                let kii = k[i_sel * n + i_sel];
                let quad = kii + k[t * n + t] - 2.0 * k[i_sel * n + t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let decrease = -(grad_diff * grad_diff) / quad;
                if decrease <= best_decrease {
                    best_decrease = decrease;
                    j_sel = t;
                }
            }
        }
        if g_max + g_max2 < params.tol || j_sel == usize::MAX {
            break;
        }
        if iterations >= params.max_iter {
            return Err(Error::NonConvergence { iterations });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let kij = k[i * n + j];
        let quad = k[i * n + i] + k[j * n + j] - 2.0 * kij;
        let quad = if quad > 0.0 { quad } else { TAU };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        let (row_i, row_j) = (&k[i * n..(i + 1) * n], &k[j * n..(j + 1) * n]);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * row_i[t] * di + y[j] * row_j[t] * dj);
        }
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(dual_objective(&alpha, &grad));
        }
    }

    Ok(SmoSolution {
        rho: compute_rho(&alpha, &y, &grad, c),
        alpha,
        y,
        gradient: grad,
        iterations,
        gamma,
    })
}

/// Offset from the free support vectors; midpoint of the feasible
/// interval when none are free.
fn compute_rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            n_free += 1;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else {
        0.5 * (ub + lb)
    }
}

pub fn svm_train(x: &FeatureMatrix, params: &SvmParams) -> Result<SvmModel> {
    let sol = smo_solve(x, params, None)?;
    Ok(SvmModel::from_solution(x, params, &sol))
}

impl SvmModel {
    pub fn from_solution(x: &FeatureMatrix, params: &SvmParams, sol: &SmoSolution) -> Self {
        let mut support_indices = Vec::new();
        let mut support_vectors = Vec::new();
        let mut dual_coef = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > SUPPORT_THRESHOLD {
                support_indices.push(i);
                support_vectors.extend(x.values.row(i).iter().copied());
                dual_coef.push(a * sol.y[i]);
            }
        }
        Self {
            gamma: sol.gamma,
            c: params.c,
            tol: params.tol,
            dim: x.n_features(),
            support_indices,
            support_vectors,
            dual_coef,
            bias: -sol.rho,
            iterations: sol.iterations,
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut score = self.bias;
        if self.dim == 0 {
            return Ok(score + self.dual_coef.iter().sum::<f64>());
        }
        for (sv, coef) in self.support_vectors.chunks_exact(self.dim).zip(&self.dual_coef) {
            score += coef * rbf(self.gamma, sv, x);
        }
        Ok(score)
    }

    /// ADHD when the decision value is ≥ 0.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.decision_value(x)?;
        Ok(Prediction {
            label: ClassLabel::from_sign(score),
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn fm(values: ndarray::Array2<f64>, labels: Vec<ClassLabel>) -> FeatureMatrix {
        let names = (0..values.ncols()).map(|j| format!("f{j}")).collect();
        FeatureMatrix::new(names, values, labels).unwrap()
    }

    #[test]
    fn two_points_are_both_support_vectors() {
        let x = fm(array![[0.0, 0.0], [1.0, 2.0]], vec![ClassLabel::Adhd, ClassLabel::Hc]);
        let params = SvmParams {
            gamma: Some(0.5),
            tol: 1e-9,
            ..SvmParams::default()
        };
        let m = svm_train(&x, &params).unwrap();
        assert_eq!(m.support_indices, vec![0, 1]);
        assert!((m.dual_coef[0] + m.dual_coef[1]).abs() < 1e-12);
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap().label, ClassLabel::Adhd);
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap().label, ClassLabel::Hc);
        // bisector
        assert!(m.decision_value(&[0.5, 1.0]).unwrap().abs() < 1e-9);
        assert!(m.decision_value(&[2.5, 0.0]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = fm(array![[0.0], [1.0]], vec![ClassLabel::Hc, ClassLabel::Hc]);
        assert!(matches!(
            svm_train(&x, &SvmParams::default()),
            Err(Error::MissingClass(ClassLabel::Adhd))
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let x = fm(
            array![[0.0], [0.3], [0.6], [0.9], [1.2]],
            vec![
                ClassLabel::Adhd,
                ClassLabel::Hc,
                ClassLabel::Adhd,
                ClassLabel::Hc,
                ClassLabel::Adhd,
            ],
        );
        let params = SvmParams {
            c: 100.0,
            gamma: Some(1.0),
            tol: 1e-12,
            max_iter: 1,
        };
        assert!(matches!(
            svm_train(&x, &params),
            Err(Error::NonConvergence { iterations: 1 })
        ));
    }

    #[test]
    fn far_query_scores_bias() {
        let x = fm(
            array![[0.0], [1.0], [3.0]],
            vec![ClassLabel::Adhd, ClassLabel::Hc, ClassLabel::Hc],
        );
        let m = svm_train(
            &x,
            &SvmParams {
                gamma: Some(1.0),
                ..SvmParams::default()
            },
        )
        .unwrap();
        assert!((m.decision_value(&[1e3]).unwrap() - m.bias).abs() < 1e-12);
    }
}
