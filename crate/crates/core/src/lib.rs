//! Cross-lingual word embedding alignment.
//!
//! The crate covers the whole supervised pipeline:
//!
//! 1. load monolingual spaces in fastText `.vec` format ([`embeddings`]);
//! 2. normalize them, most importantly with iterative normalization, which
//!    alternates unit-length and zero-mean projections until both hold at
//!    once ([`normalize`]);
//! 3. fit a linear map with orthogonal Procrustes, Procrustes plus
//!    refinement, or relaxed CSLS training ([`align`]);
//! 4. evaluate with nearest-neighbor or CSLS retrieval, word similarity
//!    correlation and neighborhood listings ([`retrieval`]).
//!
//! [`synthetic`] generates controlled test worlds, [`pipeline`] chains the
//! stages and records runs, and [`table`] prints result grids. Runnable
//! programs for each capability live in this crate's `examples/` directory.
//!
//! ```
//! use nalgebra::DMatrix;
//! use xlign::embeddings::EmbeddingSpace;
//! use xlign::normalize::iterative_normalize;
//!
//! let space = EmbeddingSpace::new(
//!     vec!["a".into(), "b".into()],
//!     DMatrix::from_column_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]),
//! )?;
//! let (normalized, report) = iterative_normalize(&space, 5, 1e-12)?;
//! assert!(report.converged);
//! assert!((normalized.column(0).norm() - 1.0).abs() < 1e-12);
//! # Ok::<(), xlign::Error>(())
//! ```

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod cli;
pub mod embeddings;
mod error;
pub mod linalg;
pub mod map;
pub mod normalize;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;
pub mod table;

pub use error::{Error, Result};
