use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal::ClassLabel;

pub const DEFAULT_K: usize = 5;

/// Instance store for Euclidean k-nearest-neighbour voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub dim: usize,
    /// Row-major training points.
    pub points: Vec<f64>,
    pub labels: Vec<ClassLabel>,
}

pub fn knn_train(x: &FeatureMatrix, k: usize) -> Result<KnnModel> {
    if x.n_rows() == 0 {
        return Err(Error::Empty("k-NN needs at least one training row"));
    }
    if k == 0 || k > x.n_rows() {
        return Err(Error::OutOfRange {
            what: "k",
            value: k,
            min: 1,
            max: x.n_rows(),
        });
    }
    Ok(KnnModel {
        k,
        dim: x.n_features(),
        points: x.values.iter().copied().collect(),
        labels: x.labels.clone(),
    })
}

impl KnnModel {
    pub fn n_train(&self) -> usize {
        self.labels.len()
    }

    /// Majority vote among the `k` nearest rows (distance ties go to the
    /// lower training index). A split vote goes to the class with the
    /// smaller summed distance, then to ADHD.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.dim.max(1))
            .take(self.n_train())
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        if self.dim == 0 {
            dist = (0..self.n_train()).map(|i| (0.0, i)).collect();
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        let mut votes = [0usize; 2];
        let mut dist_sum = [0.0f64; 2];
        for &(d2, i) in &dist {
            let c = self.labels[i].index();
            votes[c] += 1;
            dist_sum[c] += d2.sqrt();
        }
        let (a, h) = (ClassLabel::Adhd.index(), ClassLabel::Hc.index());
        let label = if votes[a] != votes[h] {
            if votes[a] > votes[h] {
                ClassLabel::Adhd
            } else {
                ClassLabel::Hc
            }
        } else if dist_sum[h] < dist_sum[a] {
            ClassLabel::Hc
        } else {
            ClassLabel::Adhd
        };
        Ok(Prediction {
            label,
            score: votes[a] as f64 / self.k as f64,
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
    fn k_bounds() {
        let x = fm(array![[0.0], [1.0]], vec![ClassLabel::Adhd, ClassLabel::Hc]);
        assert!(knn_train(&x, 0).is_err());
        assert!(knn_train(&x, 3).is_err());
        assert!(knn_train(&x, 1).is_ok());
        assert!(knn_train(&x, 2).is_ok());
    }

    #[test]
    fn exact_match_with_k1() {
        let x = fm(
            array![[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]],
            vec![ClassLabel::Hc, ClassLabel::Adhd, ClassLabel::Hc],
        );
        let m = knn_train(&x, 1).unwrap();
        let p = m.predict(&[3.0, 4.0]).unwrap();
        assert_eq!(p.label, ClassLabel::Adhd);
        assert_eq!(p.score, 1.0);
    }

    #[test]
    fn global_vote_returns_majority() {
        let x = fm(
            array![[0.0], [1.0], [2.0], [50.0], [51.0]],
            vec![
                ClassLabel::Hc,
                ClassLabel::Hc,
                ClassLabel::Hc,
                ClassLabel::Adhd,
                ClassLabel::Adhd,
            ],
        );
        let m = knn_train(&x, 5).unwrap();
        for q in [-10.0, 25.0, 50.5, 1000.0] {
            assert_eq!(m.predict(&[q]).unwrap().label, ClassLabel::Hc);
        }
    }

    #[test]
    fn separated_clusters() {
        let x = fm(
            array![
                [0.0, 0.0],
                [0.1, 0.0],
                [0.0, 0.1],
                [10.0, 10.0],
                [10.1, 10.0],
                [10.0, 10.1]
            ],
            vec![
                ClassLabel::Hc,
                ClassLabel::Hc,
                ClassLabel::Hc,
                ClassLabel::Adhd,
                ClassLabel::Adhd,
                ClassLabel::Adhd,
            ],
        );
        let m = knn_train(&x, 3).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap().label, ClassLabel::Hc);
        assert_eq!(m.predict(&[9.0, 9.0]).unwrap().label, ClassLabel::Adhd);
        assert!(matches!(m.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn split_vote_uses_distance_then_adhd() {
        let x = fm(array![[-1.0], [2.0]], vec![ClassLabel::Hc, ClassLabel::Adhd]);
        let m = knn_train(&x, 2).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap().label, ClassLabel::Hc);
        assert_eq!(m.predict(&[1.5]).unwrap().label, ClassLabel::Adhd);
        let p = m.predict(&[0.5]).unwrap();
        assert_eq!((p.label, p.score), (ClassLabel::Adhd, 0.5));
    }
}
