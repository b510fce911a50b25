//! Unit-length and zero-mean normalization of embedding spaces.
//!
//! [`iterative_normalize`] alternates two projections: every column is
//! scaled to unit length, then the mean column is subtracted. Repeating the
//! pair drives the space onto the intersection of both constraint sets, as
//! long as no column ever becomes zero. [`center_then_length`] is the
//! single-pass baseline, which generally leaves a non-zero mean behind.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 5;

/// Relative size of the noise used to repair zero columns.
pub const PERTURBATION_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizationMethod {
    None,
    CenterThenLength,
    IterNorm { rounds: usize, tolerance: f64 },
}

impl NormalizationMethod {
    pub fn iternorm() -> Self {
        NormalizationMethod::IterNorm {
            rounds: DEFAULT_ROUNDS,
            tolerance: 0.0,
        }
    }

    /// Short label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            NormalizationMethod::None => "None",
            NormalizationMethod::CenterThenLength => "C+L",
            NormalizationMethod::IterNorm { .. } => "IN",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NormalizationMethod::IterNorm { rounds, tolerance } = *self {
            if rounds == 0 {
                return Err(Error::InvalidArgument("IterNorm needs at least one round".into()));
            }
            if !(tolerance >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance must be non-negative, got {tolerance}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizationMethod::None => f.write_str("none"),
            NormalizationMethod::CenterThenLength => f.write_str("cl"),
            NormalizationMethod::IterNorm { .. } => f.write_str("iternorm"),
        }
    }
}

impl FromStr for NormalizationMethod {
    type Err = Error;

    /// Parses `none`, `cl` or `iternorm` (default rounds and tolerance).
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NormalizationMethod::None),
            "cl" | "c+l" => Ok(NormalizationMethod::CenterThenLength),
            "iternorm" | "in" => Ok(NormalizationMethod::iternorm()),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization {other:?} (expected none, cl or iternorm)"
            ))),
        }
    }
}

/// How far a matrix is from satisfying both constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max_i |‖x_i‖ − 1|`
    pub max_length_residual: f64,
    /// `‖(1/n) Σ x_i‖`
    pub mean_norm_residual: f64,
    pub min_column_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub max_length_residual: f64,
    pub mean_norm_residual: f64,
    /// `‖X(k) − X(k−1)‖_F`
    pub iterate_delta: f64,
    /// Smallest column length of this round's output, i.e. the input to
    /// the next length projection.
    pub min_column_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub method: NormalizationMethod,
    pub initial: Residuals,
    pub iterations: Vec<RoundRecord>,
    pub converged: bool,
    /// Indices of columns that were perturbed away from zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbed: Vec<usize>,
}

impl NormalizationReport {
    pub fn final_residuals(&self) -> Residuals {
        self.iterations.last().map_or(self.initial, |r| Residuals {
            max_length_residual: r.max_length_residual,
            mean_norm_residual: r.mean_norm_residual,
            min_column_length: r.min_column_length,
        })
    }
}

fn mean_column(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    m.column_mean()
}

pub fn matrix_residuals(m: &DMatrix<f64>) -> Residuals {
    let mut max_length_residual = 0.0f64;
    let mut min_column_length = f64::INFINITY;
    for c in m.column_iter() {
        let len = c.norm();
        max_length_residual = max_length_residual.max((len - 1.0).abs());
        min_column_length = min_column_length.min(len);
    }
    Residuals {
        max_length_residual,
        mean_norm_residual: mean_column(m).norm(),
        min_column_length,
    }
}

/// Measures both constraints without modifying the space.
pub fn constraint_residuals(space: &EmbeddingSpace) -> Residuals {
    matrix_residuals(space.matrix())
}

/// `‖(1/n) Σ x_i‖`, the magnitude of the space's center.
pub fn mean_vector_length(space: &EmbeddingSpace) -> f64 {
    mean_column(space.matrix()).norm()
}

/// Scales every column to unit length in place. Returns the index of the
/// first zero column on failure.
pub fn length_normalize_matrix(m: &mut DMatrix<f64>) -> std::result::Result<(), usize> {
    for (i, mut c) in m.column_iter_mut().enumerate() {
        let len = c.norm();
        if !(len > 0.0) {
            return Err(i);
        }
        c /= len;
    }
    Ok(())
}

/// Subtracts the mean column in place.
pub fn mean_center_matrix(m: &mut DMatrix<f64>) {
    let mean = mean_column(m);
    for mut c in m.column_iter_mut() {
        c -= &mean;
    }
}

fn zero_column(space: &EmbeddingSpace, index: usize, round: Option<usize>) -> Error {
    Error::ZeroColumn {
        index,
        word: space.word(index).to_string(),
        round,
    }
}

pub fn length_normalize(space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
    let mut m = space.matrix().clone();
    length_normalize_matrix(&mut m).map_err(|i| zero_column(space, i, None))?;
    Ok(space.replace_matrix(m))
}

pub fn mean_center(space: &EmbeddingSpace) -> EmbeddingSpace {
    let mut m = space.matrix().clone();
    mean_center_matrix(&mut m);
    space.replace_matrix(m)
}

/// One pass of centering followed by length normalization.
pub fn center_then_length(space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
    let mut m = space.matrix().clone();
    mean_center_matrix(&mut m);
    length_normalize_matrix(&mut m).map_err(|i| zero_column(space, i, None))?;
    Ok(space.replace_matrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterNormOptions {
    pub rounds: usize,
    /// Stop once both residuals are at or below this value. Zero runs the
    /// full round budget unless an exact fixed point is hit.
    pub tolerance: f64,
    /// Seed for repairing zero columns with small noise; `None` aborts on
    /// the first zero column instead.
    pub perturb_zeros: Option<u64>,
}

impl Default for IterNormOptions {
    fn default() -> Self {
        IterNormOptions {
            rounds: DEFAULT_ROUNDS,
            tolerance: 0.0,
            perturb_zeros: None,
        }
    }
}

/// Replaces zero columns with noise of length `PERTURBATION_SCALE` times
/// the mean column length. Returns the repaired indices.
fn perturb_zero_columns(m: &mut DMatrix<f64>, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let lengths: Vec<f64> = m.column_iter().map(|c| c.norm()).collect();
    let zeros: Vec<usize> = (0..lengths.len()).filter(|&i| !(lengths[i] > 0.0)).collect();
    if zeros.is_empty() {
        return Some(zeros);
    }
    let mean_len = lengths.iter().sum::<f64>() / lengths.len() as f64;
    if !(mean_len > 0.0) {
        return None;
    }
    let magnitude = PERTURBATION_SCALE * mean_len;
    for &i in &zeros {
        let mut c = m.column_mut(i);
        loop {
            for v in c.iter_mut() {
                *v = rng.random_range(-1.0..=1.0);
            }
            let n = c.norm();
            if n > 0.0 {
                c *= magnitude / n;
                break;
            }
        }
    }
    Some(zeros)
}

/// Alternates length normalization and mean centering for up to `rounds`
/// rounds, stopping early once both residuals are within `tolerance`.
pub fn iterative_normalize(
    space: &EmbeddingSpace,
    rounds: usize,
    tolerance: f64,
) -> Result<(EmbeddingSpace, NormalizationReport)> {
    iterative_normalize_with(
        space,
        &IterNormOptions {
            rounds,
            tolerance,
            perturb_zeros: None,
        },
    )
}

pub fn iterative_normalize_with(
    space: &EmbeddingSpace,
    options: &IterNormOptions,
) -> Result<(EmbeddingSpace, NormalizationReport)> {
    let method = NormalizationMethod::IterNorm {
        rounds: options.rounds,
        tolerance: options.tolerance,
    };
    method.validate()?;

    let mut rng = options.perturb_zeros.map(ChaCha8Rng::seed_from_u64);
    let mut current = space.matrix().clone();
    let initial = matrix_residuals(&current);
    let mut iterations = Vec::with_capacity(options.rounds);
    let mut perturbed = Vec::new();
    let mut converged = false;

    for round in 1..=options.rounds {
        let mut next = current.clone();
        if let Some(rng) = rng.as_mut() {
            let fixed = perturb_zero_columns(&mut next, rng).ok_or_else(|| zero_column(space, 0, Some(round)))?;
            perturbed.extend(fixed);
        }
        length_normalize_matrix(&mut next).map_err(|i| zero_column(space, i, Some(round)))?;
        mean_center_matrix(&mut next);

        let r = matrix_residuals(&next);
        iterations.push(RoundRecord {
            round,
            max_length_residual: r.max_length_residual,
            mean_norm_residual: r.mean_norm_residual,
            iterate_delta: (&next - &current).norm(),
            min_column_length: r.min_column_length,
        });
        current = next;
        if r.max_length_residual <= options.tolerance && r.mean_norm_residual <= options.tolerance {
            converged = true;
            break;
        }
    }

    perturbed.sort_unstable();
    perturbed.dedup();
    let report = NormalizationReport {
        method,
        initial,
        iterations,
        converged,
        perturbed,
    };
    Ok((space.replace_matrix(current), report))
}

/// Applies `method` and reports residuals. `perturb_zeros` only affects
/// IterNorm.
pub fn normalize(
    space: &EmbeddingSpace,
    method: NormalizationMethod,
    perturb_zeros: Option<u64>,
) -> Result<(EmbeddingSpace, NormalizationReport)> {
    method.validate()?;
    let initial = constraint_residuals(space);
    match method {
        NormalizationMethod::None => Ok((
            space.clone(),
            NormalizationReport {
                method,
                initial,
                iterations: Vec::new(),
                converged: false,
                perturbed: Vec::new(),
            },
        )),
        NormalizationMethod::CenterThenLength => {
            let out = center_then_length(space)?;
            let r = constraint_residuals(&out);
            let delta = (out.matrix() - space.matrix()).norm();
            Ok((
                out,
                NormalizationReport {
                    method,
                    initial,
                    iterations: vec![RoundRecord {
                        round: 1,
                        max_length_residual: r.max_length_residual,
                        mean_norm_residual: r.mean_norm_residual,
                        iterate_delta: delta,
                        min_column_length: r.min_column_length,
                    }],
                    converged: false,
                    perturbed: Vec::new(),
                },
            ))
        }
        NormalizationMethod::IterNorm { rounds, tolerance } => iterative_normalize_with(
            space,
            &IterNormOptions {
                rounds,
                tolerance,
                perturb_zeros,
            },
        ),
    }
}
