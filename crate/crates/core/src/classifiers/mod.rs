//! k-NN, RBF SVM and bagged-tree classifiers behind one train/predict
//! interface. ADHD is the positive class throughout.

pub mod ensemble;
pub mod knn;
pub mod svm;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::signal::ClassLabel;

pub use ensemble::{ens_train, EnsembleModel};
pub use knn::{knn_train, KnnModel};
pub use svm::{svm_train, SvmModel, SvmParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Svm,
    Ens,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Ens];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Ens => "ens",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    pub knn_k: usize,
    pub svm_c: f64,
    /// `None` uses `1 / (d · mean feature variance)`.
    pub svm_gamma: Option<f64>,
    pub svm_tol: f64,
    pub svm_max_iter: u64,
    pub ens_trees: usize,
    pub ens_max_depth: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        let svm = SvmParams::default();
        Self {
            knn_k: knn::DEFAULT_K,
            svm_c: svm.c,
            svm_gamma: svm.gamma,
            svm_tol: svm.tol,
            svm_max_iter: svm.max_iter,
            ens_trees: ensemble::DEFAULT_N_TREES,
            ens_max_depth: ensemble::DEFAULT_MAX_DEPTH,
        }
    }
}

impl ClassifierParams {
    pub fn svm(&self) -> SvmParams {
        SvmParams {
            c: self.svm_c,
            gamma: self.svm_gamma,
            tol: self.svm_tol,
            max_iter: self.svm_max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    /// Signed decision value for SVM, ADHD vote fraction otherwise.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Knn(KnnModel),
    Svm(SvmModel),
    Ens(EnsembleModel),
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: TrainedModel,
}

/// Train `kind` on `x`. `seed` only affects the ensemble.
pub fn train(x: &FeatureMatrix, kind: ClassifierKind, params: &ClassifierParams, seed: u64) -> Result<TrainedModel> {
    Ok(match kind {
        ClassifierKind::Knn => TrainedModel::Knn(knn_train(x, params.knn_k)?),
        ClassifierKind::Svm => TrainedModel::Svm(svm_train(x, &params.svm())?),
        ClassifierKind::Ens => TrainedModel::Ens(ens_train(x, params.ens_trees, params.ens_max_depth, seed)?),
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Ens(_) => ClassifierKind::Ens,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            TrainedModel::Knn(m) => m.predict(x),
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::Ens(m) => m.predict(x),
        }
    }

    pub fn predict_vector(&self, x: &FeatureVector) -> Result<Prediction> {
        self.predict(&x.values)
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>> {
        x.values.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("models serialize")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn json_round_trip_preserves_predictions() {
        let x = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            array![[0.0, 0.1], [0.3, 0.2], [2.0, 2.1], [1.9, 2.4], [0.2, 0.0], [2.2, 1.8]],
            vec![
                ClassLabel::Hc,
                ClassLabel::Hc,
                ClassLabel::Adhd,
                ClassLabel::Adhd,
                ClassLabel::Hc,
                ClassLabel::Adhd,
            ],
        )
        .unwrap();
        let params = ClassifierParams {
            knn_k: 3,
            ens_trees: 7,
            ..ClassifierParams::default()
        };
        for kind in ClassifierKind::ALL {
            let m = train(&x, kind, &params, 5).unwrap();
            let back = TrainedModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.kind(), kind);
            for q in [[0.0, 0.0], [1.0, 1.2], [0.7, 1.9], [3.0, -1.0]] {
                assert_eq!(back.predict(&q).unwrap(), m.predict(&q).unwrap());
            }
        }
        assert!(TrainedModel::from_json(
            r#"{"format_version":9,"model":{"kind":"knn","k":1,"dim":0,"points":[],"labels":[]}}"#
        )
        .is_err());
    }
}
