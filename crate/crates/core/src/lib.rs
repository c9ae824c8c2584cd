//! Supervised dimensionality reduction by manifold partition discriminant
//! analysis, with PCA/LDA baselines and a repeated-split benchmark harness.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom fix it to `f64`, which is what the CLI uses.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geodesy;
pub mod graph;
pub mod linalg;
pub mod model_io;
pub mod mpda;
pub mod partition;
pub mod rng;
pub mod scalar;
pub mod tangent;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// No reduction: 1-NN in the input space.
    Baseline,
    Pca,
    Lda,
    Mpda,
    Pmpda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Baseline,
        Algorithm::Pca,
        Algorithm::Lda,
        Algorithm::Mpda,
        Algorithm::Pmpda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Pca => "pca",
            Algorithm::Lda => "lda",
            Algorithm::Mpda => "mpda",
            Algorithm::Pmpda => "pmpda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected baseline, pca, lda, mpda or pmpda)"))
    }
}

pub type Dataset = dataset::LabeledDataset<f64>;
pub type Model = mpda::EmbeddingModel<f64>;
pub type Linear = baselines::LinearModel<f64>;
pub type Saved = model_io::SavedModel<f64>;
pub type Weights = graph::WeightMatrix<f64>;
pub type Laplacian = graph::LaplacianMatrix<f64>;
pub type Geodesics = geodesy::GeodesicMatrix<f64>;
pub type Tangent = tangent::TangentBasis<f64>;
