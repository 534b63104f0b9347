//! Problem specifications accepted by the command-line tools.

use std::path::PathBuf;

use hfnewton::linalg::DesignMatrix;
use hfnewton::objectives::{read_libsvm_file, EvalError, InstanceSpec, LibsvmError, LogisticRegression, Objective};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Libsvm { path: PathBuf, source: LibsvmError },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("cannot build problem: {0}")]
    Build(#[from] EvalError),
}

pub type BoxedProblem = Box<dyn Objective<f64> + Send>;

/// A synthetic instance recipe or a LIBSVM file turned into ℓ2-regularized
/// logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Synthetic(InstanceSpec),
    Libsvm(LibsvmSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "libsvm")]
pub struct LibsvmSpec {
    pub path: PathBuf,
    pub ell: f64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<BoxedProblem, DataError> {
        match self {
            Self::Synthetic(spec) => Ok(Box::new(spec.build::<f64>()?)),
            Self::Libsvm(spec) => Ok(Box::new(load_libsvm_logistic(&spec.path, spec.ell)?)),
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| DataError::Json { path: path.into(), source })
    }
}

/// Logistic regression on a LIBSVM file, kept in sparse storage.
pub fn load_libsvm_logistic(path: &std::path::Path, ell: f64) -> Result<LogisticRegression<f64>, DataError> {
    let data = read_libsvm_file::<f64>(path).map_err(|source| DataError::Libsvm { path: path.into(), source })?;
    Ok(LogisticRegression::new(DesignMatrix::Sparse(data.features), data.labels, ell)?)
}
