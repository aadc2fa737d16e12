//! Bagged CART trees with Gini impurity splits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal::ClassLabel;

pub const DEFAULT_N_TREES: usize = 100;
pub const DEFAULT_MAX_DEPTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: ClassLabel,
    },
    /// Rows with `x[feature] ≤ threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Arena; the root is node 0.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_row(&self, x: &[f64]) -> ClassLabel {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTree {
    pub seed: u64,
    /// Bootstrap sample, `n_train` draws with replacement.
    pub bootstrap: Vec<usize>,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub dim: usize,
    pub n_train: usize,
    pub max_depth: usize,
    pub trees: Vec<BaggedTree>,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    // 2pq equals 1 − p² − q² and is exactly symmetric in the two classes
    2.0 * (counts[0] as f64 * counts[1] as f64) / (n * n)
}

fn majority(counts: [usize; 2]) -> ClassLabel {
    if counts[ClassLabel::Hc.index()] > counts[ClassLabel::Adhd.index()] {
        ClassLabel::Hc
    } else {
        ClassLabel::Adhd
    }
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &r in rows {
            c[self.x.labels[r].index()] += 1;
        }
        c
    }

    /// Lowest weighted child impurity over all features and midpoints.
    /// Zero-gain splits are accepted so that XOR-like data can be carved up.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let total = self.counts(rows);
        let n = rows.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for f in 0..self.x.n_features() {
            let col = self.x.values.column(f);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut left = [0usize; 2];
            for k in 0..order.len() - 1 {
                left[self.x.labels[order[k]].index()] += 1;
                let (lo, hi) = (col[order[k]], col[order[k + 1]]);
                if lo == hi {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let nl = (k + 1) as f64;
                let imp = (nl * gini(left) + (n - nl) * gini(right)) / n;
                if best.is_none_or(|(b, _, _)| imp < b) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((imp, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: majority(counts),
        });
        if depth >= self.max_depth || counts[0] == 0 || counts[1] == 0 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x.values[[i, feature]] <= threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Grow one CART tree on `rows` of `x` (repeats allowed). Leaves take the
/// majority label; a tied leaf is ADHD.
pub fn grow_tree(x: &FeatureMatrix, rows: &[usize], max_depth: usize) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(Error::Empty("a tree needs at least one training row"));
    }
    let mut g = Grower {
        x,
        max_depth,
        nodes: Vec::new(),
    };
    g.grow(rows, 0);
    Ok(DecisionTree { nodes: g.nodes })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of tree `t` under master `seed`.
pub fn tree_seed(seed: u64, t: usize) -> u64 {
    splitmix64(seed ^ splitmix64(t as u64))
}

pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn ens_train(x: &FeatureMatrix, n_trees: usize, max_depth: usize, seed: u64) -> Result<EnsembleModel> {
    if n_trees == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one tree".into()));
    }
    let counts = x.class_counts();
    for class in ClassLabel::ALL {
        if counts[class.index()] == 0 {
            return Err(Error::MissingClass(class));
        }
    }
    let n = x.n_rows();
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = tree_seed(seed, t);
            let bootstrap = bootstrap_indices(n, seed);
            let tree = grow_tree(x, &bootstrap, max_depth)?;
            Ok(BaggedTree { seed, bootstrap, tree })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        dim: x.n_features(),
        n_train: n,
        max_depth,
        trees,
    })
}

impl EnsembleModel {
    /// Per-tree votes for `x`.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<ClassLabel>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.tree.predict_row(x)).collect())
    }

    /// Majority vote; score is the ADHD vote fraction and a tie is ADHD.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let votes = self.votes(x)?;
        let adhd = votes.iter().filter(|&&l| l == ClassLabel::Adhd).count();
        let score = adhd as f64 / votes.len() as f64;
        let label = if 2 * adhd >= votes.len() {
            ClassLabel::Adhd
        } else {
            ClassLabel::Hc
        };
        Ok(Prediction { label, score })
    }

    /// Accuracy of out-of-bag majority votes over training rows that at
    /// least one tree left out. `None` when every row was in every bag.
    pub fn oob_accuracy(&self, x: &FeatureMatrix) -> Option<f64> {
        let n = x.n_rows();
        let in_bag: Vec<Vec<bool>> = self
            .trees
            .iter()
            .map(|t| {
                let mut used = vec![false; n];
                for &i in &t.bootstrap {
                    used[i] = true;
                }
                used
            })
            .collect();
        let (mut scored, mut correct) = (0usize, 0usize);
        for i in 0..n {
            let row = x.values.row(i).to_vec();
            let mut votes = [0usize; 2];
            for (t, used) in self.trees.iter().zip(&in_bag) {
                if !used[i] {
                    votes[t.tree.predict_row(&row).index()] += 1;
                }
            }
            if votes[0] + votes[1] == 0 {
                continue;
            }
            scored += 1;
            if majority(votes) == x.labels[i] {
                correct += 1;
            }
        }
        (scored > 0).then(|| correct as f64 / scored as f64)
    }
}
