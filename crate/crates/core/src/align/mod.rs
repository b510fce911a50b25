//! Fitting linear maps from a source space into a target space.
//!
//! * [`procrustes_fit`]: closed-form orthogonal map minimizing the summed
//!   squared distance between dictionary pairs.
//! * [`refine`]: repeated Procrustes on synthetic dictionaries of mutual
//!   CSLS nearest neighbors.
//! * [`rcsls_train`]: unconstrained map trained by subgradient descent on the
//!   relaxed CSLS loss, with a small learning-rate / epoch grid search.

mod procrustes;
mod rcsls;
mod refine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use procrustes::{objective_value, procrustes_fit};
pub use rcsls::{
    rcsls_gradient_frozen, rcsls_loss, rcsls_loss_frozen, rcsls_neighbors, rcsls_train, FrozenNeighbors, GridPoint,
    RcslsConfig, RcslsOutcome,
};
pub use refine::{build_synthetic_dictionary, refine, RefineConfig, RefineOutcome};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlignmentMethod {
    Procrustes,
    ProcrustesRefine(RefineConfig),
    Rcsls(RcslsConfig),
}

impl AlignmentMethod {
    /// Row label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            AlignmentMethod::Procrustes => "Procrustes",
            AlignmentMethod::ProcrustesRefine(_) => "Procrustes + refine",
            AlignmentMethod::Rcsls(_) => "RCSLS",
        }
    }
}

impl fmt::Display for AlignmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignmentMethod::Procrustes => "procrustes",
            AlignmentMethod::ProcrustesRefine(_) => "procrustes-refine",
            AlignmentMethod::Rcsls(_) => "rcsls",
        })
    }
}

impl FromStr for AlignmentMethod {
    type Err = Error;

    /// Parses a method name with default settings.
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "procrustes" => Ok(AlignmentMethod::Procrustes),
            "procrustes-refine" | "refine" => Ok(AlignmentMethod::ProcrustesRefine(RefineConfig::default())),
            "rcsls" => Ok(AlignmentMethod::Rcsls(RcslsConfig::default())),
            other => Err(Error::InvalidArgument(format!(
                "unknown alignment method {other:?} (expected procrustes, procrustes-refine or rcsls)"
            ))),
        }
    }
}
