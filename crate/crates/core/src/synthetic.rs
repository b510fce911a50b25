//! Synthetic bilingual worlds with a known orthogonal ground truth.
//!
//! Clean vectors `c_i ~ N(0, σ_s² I)` are shared by both languages. The target
//! side is `z_i = Q c_i + ε` with Gaussian noise `ε`. The source side is
//! `x_i = s_i (c_i + μ)`: a shifted center `μ` and a per-word length scale
//! `s_i` break center- and length-invariance, so no orthogonal map aligns
//! the raw spaces exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{write_dictionary, write_vec_file, EmbeddingSpace, SeedDictionary};
use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, random_orthogonal};
use crate::map::{write_map_file, LinearMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthScale {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl LengthScale {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            LengthScale::Constant { value } => value,
            LengthScale::Uniform { low, high } => rng.random_range(low..=high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub noise_sigma: f64,
    /// Per-coordinate standard deviation of the clean vectors. `1/√d` gives
    /// clean vectors of roughly unit length.
    pub signal_std: f64,
    /// Added to every clean source vector before scaling; empty means zero.
    pub mean_offset: Vec<f64>,
    pub length_scale: LengthScale,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Isomorphic world: no offset, unit scale.
    pub fn isomorphic(n: usize, d: usize, noise_sigma: f64, seed: u64) -> Self {
        SyntheticSpec {
            n,
            d,
            noise_sigma,
            signal_std: 1.0 / (d as f64).sqrt(),
            mean_offset: Vec::new(),
            length_scale: LengthScale::Constant { value: 1.0 },
            train_size: n / 4,
            test_size: n / 4,
            seed,
        }
    }

    /// Non-isomorphic world with lengths scaled by `U[0.5, 2]` and a source
    /// center offset of norm 0.5 in a seed-dependent direction.
    pub fn non_isomorphic(n: usize, d: usize, noise_sigma: f64, seed: u64) -> Self {
        SyntheticSpec {
            length_scale: LengthScale::Uniform { low: 0.5, high: 2.0 },
            ..Self::isomorphic(n, d, noise_sigma, seed)
        }
        .with_offset_norm(0.5)
    }

    /// Replaces the offset with a vector of the given norm pointing in a
    /// direction derived from the seed.
    pub fn with_offset_norm(mut self, norm: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6f66_6673_6574);
        let dir = gaussian_matrix(self.d, 1, &mut rng);
        let scale = if dir.norm() > 0.0 { norm / dir.norm() } else { 0.0 };
        self.mean_offset = dir.iter().map(|v| v * scale).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.d < 2 {
            return Err(Error::InvalidArgument("synthetic worlds need n >= 2 and d >= 2".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise_sigma must be non-negative".into()));
        }
        if !(self.signal_std > 0.0) {
            return Err(Error::InvalidArgument("signal_std must be positive".into()));
        }
        if !self.mean_offset.is_empty() && self.mean_offset.len() != self.d {
            return Err(Error::DimMismatch {
                what: "mean offset",
                left: self.mean_offset.len(),
                right: self.d,
            });
        }
        match self.length_scale {
            LengthScale::Constant { value } if !(value > 0.0) => {
                return Err(Error::InvalidArgument("length scale must be positive".into()))
            }
            LengthScale::Uniform { low, high } if !(low > 0.0 && high >= low) => {
                return Err(Error::InvalidArgument("length scale range must be positive".into()))
            }
            _ => {}
        }
        if self.train_size == 0 || self.test_size == 0 || self.train_size + self.test_size > self.n {
            return Err(Error::InvalidArgument(format!(
                "train ({}) and test ({}) sizes must be positive and fit in n = {}",
                self.train_size, self.test_size, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub src: EmbeddingSpace,
    pub tgt: EmbeddingSpace,
    pub train: SeedDictionary,
    pub test: SeedDictionary,
    /// Ground-truth rotation applied to the clean vectors.
    pub q: DMatrix<f64>,
}

/// File locations written by [`SyntheticWorld::write_to_dir`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFiles {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub train_dict: PathBuf,
    pub test_dict: PathBuf,
    /// Ground truth as an orthogonal map file.
    pub q: PathBuf,
}

impl SyntheticWorld {
    /// Writes `src.vec`, `tgt.vec`, `train.txt`, `test.txt` and `q.map`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<WorldFiles> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let files = WorldFiles {
            src: dir.join("src.vec"),
            tgt: dir.join("tgt.vec"),
            train_dict: dir.join("train.txt"),
            test_dict: dir.join("test.txt"),
            q: dir.join("q.map"),
        };
        write_vec_file(&files.src, &self.src)?;
        write_vec_file(&files.tgt, &self.tgt)?;
        for (path, dict) in [(&files.train_dict, &self.train), (&files.test_dict, &self.test)] {
            let mut w = BufWriter::new(File::create(path)?);
            write_dictionary(dict, &self.src, &self.tgt, &mut w)?;
            w.flush()?;
        }
        write_map_file(&files.q, &LinearMap::new(self.q.clone(), true)?)?;
        Ok(files)
    }
}

/// Builds a world from the given parameters. Source word `s{i}` translates to
/// target word `t{i}`; train and test pairs are disjoint.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticWorld> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clean = gaussian_matrix(d, n, &mut rng) * spec.signal_std;
    let q = random_orthogonal(d, &mut rng);
    let noise = gaussian_matrix(d, n, &mut rng) * spec.noise_sigma;
    let tgt = &q * &clean + noise;

    let offset = if spec.mean_offset.is_empty() {
        DVector::zeros(d)
    } else {
        DVector::from_column_slice(&spec.mean_offset)
    };
    let mut src = clean;
    for mut c in src.column_iter_mut() {
        let s = spec.length_scale.sample(&mut rng);
        c += &offset;
        c *= s;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train = SeedDictionary::from_iter(order[..spec.train_size].iter().map(|&i| (i, i)));
    let test = SeedDictionary::from_iter(
        order[spec.train_size..spec.train_size + spec.test_size]
            .iter()
            .map(|&i| (i, i)),
    );

    Ok(SyntheticWorld {
        src: EmbeddingSpace::new((0..n).map(|i| format!("s{i}")).collect(), src)?,
        tgt: EmbeddingSpace::new((0..n).map(|i| format!("t{i}")).collect(), tgt)?,
        train,
        test,
        q,
    })
}
