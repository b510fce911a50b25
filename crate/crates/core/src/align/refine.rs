use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::procrustes::procrustes_fit;
use crate::embeddings::{EmbeddingSpace, SeedDictionary};
use crate::error::{Error, Result};
use crate::linalg::unit_columns;
use crate::map::LinearMap;
use crate::retrieval::{block_map, knn_mean_dots, top_k_desc, DEFAULT_BLOCK_SIZE, DEFAULT_CSLS_KNN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub steps: usize,
    /// Most frequent words per side considered for synthetic pairs. Clamped
    /// to the smaller vocabulary.
    pub synthetic_pool: usize,
    pub knn: usize,
    pub block_size: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            steps: 5,
            synthetic_pool: 10_000,
            knn: DEFAULT_CSLS_KNN,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.synthetic_pool == 0 || self.knn == 0 {
            return Err(Error::InvalidArgument(
                "refinement needs steps, synthetic_pool and knn >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Pairs `(i, j)` among the most frequent words where `j` is the best CSLS
/// target of `W x_i` and `W x_i` is the best CSLS source of `z_j`. Sorted by
/// source index.
pub fn build_synthetic_dictionary(
    map: &LinearMap,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    cfg: &RefineConfig,
) -> Result<SeedDictionary> {
    cfg.validate()?;
    map.check_space(src, "source space")?;
    map.check_space(tgt, "target space")?;
    let pool = cfg.synthetic_pool.min(src.len()).min(tgt.len());
    if pool < cfg.synthetic_pool {
        debug!("synthetic pool clamped from {} to {pool}", cfg.synthetic_pool);
    }
    let k = cfg.knn.min(pool);
    let mapped = unit_columns(&map.apply_prefix(src, pool));
    let targets = unit_columns(&tgt.matrix().columns(0, pool).into_owned());

    let r_src = knn_mean_dots(&mapped, &targets, k, cfg.block_size)?;
    let r_tgt = knn_mean_dots(&targets, &mapped, k, cfg.block_size)?;

    let forward: Vec<usize> = block_map(&mapped, &targets, cfg.block_size, |i, cos| {
        for (j, s) in cos.iter_mut().enumerate() {
            *s = 2.0 * *s - r_src[i] - r_tgt[j];
        }
        top_k_desc(cos, 1)[0]
    });
    let backward: Vec<usize> = block_map(&targets, &mapped, cfg.block_size, |j, cos| {
        for (i, s) in cos.iter_mut().enumerate() {
            *s = 2.0 * *s - r_src[i] - r_tgt[j];
        }
        top_k_desc(cos, 1)[0]
    });

    let pairs: Vec<(usize, usize)> = forward
        .iter()
        .enumerate()
        .filter(|&(i, &j)| backward[j] == i)
        .map(|(i, &j)| (i, j))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptySyntheticDictionary);
    }
    Ok(SeedDictionary::new(pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub map: LinearMap,
    /// Size of each step's synthetic dictionary.
    pub dictionary_sizes: Vec<usize>,
    /// Set when a step produced no synthetic pairs and refinement stopped
    /// with the previous map.
    pub stopped_early: bool,
}

/// Procrustes on the seed, then `steps` rounds of Procrustes on synthetic
/// dictionaries built from the current map.
pub fn refine(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    seed: &SeedDictionary,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    let mut map = procrustes_fit(src, tgt, seed)?;
    let mut sizes = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let dict = match build_synthetic_dictionary(&map, src, tgt, cfg) {
            Ok(d) => d,
            Err(Error::EmptySyntheticDictionary) => {
                warn!("refinement step {step} found no mutual neighbors; keeping the previous map");
                return Ok(RefineOutcome {
                    map,
                    dictionary_sizes: sizes,
                    stopped_early: true,
                });
            }
            Err(e) => return Err(e),
        };
        debug!("refinement step {step}: {} synthetic pairs", dict.len());
        sizes.push(dict.len());
        map = procrustes_fit(src, tgt, &dict)?;
    }
    Ok(RefineOutcome {
        map,
        dictionary_sizes: sizes,
        stopped_early: false,
    })
}
