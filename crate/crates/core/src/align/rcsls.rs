//! Relaxed CSLS training.
//!
//! For a dictionary `D` and map `W` the loss is
//!
//! ```text
//! L(W) = 1/|D| Σ_(i,j) [ −2 (W x_i)ᵀ z_j
//!                        + 1/k Σ_{z ∈ N_T(W x_i)} (W x_i)ᵀ z
//!                        + 1/k Σ_{x ∈ N_S(z_j)}  (W x)ᵀ z_j ]
//! ```
//!
//! where `N_T` are the `k` targets with the largest dot product with `W x_i`
//! and `N_S` the `k` mapped source vectors with the largest dot product with
//! `z_j`, both searched among the most frequent `neighbor_pool` words. With
//! the neighbor sets held fixed the loss is linear in `W`, which gives the
//! subgradient used for training. No orthogonality or spectral constraint is
//! applied.

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::procrustes::{check_inputs, procrustes_fit};
use crate::embeddings::{EmbeddingSpace, SeedDictionary};
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::retrieval::{
    block_map, evaluate_p1, top_k_desc, RetrievalCriterion, RetrievalOptions, DEFAULT_BLOCK_SIZE, DEFAULT_CSLS_KNN,
};

/// Inputs must be unit length to this tolerance.
pub const UNIT_LENGTH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RcslsConfig {
    pub learning_rates: Vec<f64>,
    pub epoch_candidates: Vec<usize>,
    pub knn: usize,
    pub neighbor_pool: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Pairs held out from training for model selection when no
    /// validation dictionary is supplied.
    pub validation_size: usize,
}

impl Default for RcslsConfig {
    fn default() -> Self {
        RcslsConfig {
            learning_rates: vec![1.0, 10.0, 25.0, 50.0],
            epoch_candidates: vec![10, 20],
            knn: DEFAULT_CSLS_KNN,
            neighbor_pool: 50_000,
            batch_size: 512,
            seed: 0,
            validation_size: 500,
        }
    }
}

impl RcslsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.epoch_candidates.is_empty() {
            return Err(Error::InvalidArgument("RCSLS grids must be non-empty".into()));
        }
        if self.learning_rates.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if self.epoch_candidates.contains(&0) {
            return Err(Error::InvalidArgument("epoch candidates must be positive".into()));
        }
        if self.knn == 0 || self.neighbor_pool == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "knn, neighbor_pool and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_unit_length(space: &EmbeddingSpace) -> Result<()> {
    for (index, c) in space.matrix().column_iter().enumerate() {
        let length = c.norm();
        if !((length - 1.0).abs() <= UNIT_LENGTH_TOLERANCE) {
            return Err(Error::NotUnitLength { index, length });
        }
    }
    Ok(())
}

/// Neighbor sets for each dictionary pair, held fixed while evaluating the
/// loss or its gradient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenNeighbors {
    /// `N_T(W x_i)` as target indices.
    pub target: Vec<Vec<usize>>,
    /// `N_S(z_j)` as source indices.
    pub source: Vec<Vec<usize>>,
}

fn gather(space: &EmbeddingSpace, indices: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let cols: Vec<_> = indices.map(|i| space.column(i)).collect();
    DMatrix::from_columns(&cols)
}

fn pool_sizes(src: &EmbeddingSpace, tgt: &EmbeddingSpace, knn: usize, pool: usize) -> Result<(usize, usize)> {
    let (ps, pt) = (pool.min(src.len()), pool.min(tgt.len()));
    if knn == 0 || knn > ps || knn > pt {
        return Err(Error::InvalidArgument(format!(
            "knn = {knn} out of range for neighbor pools of {ps} source and {pt} target words"
        )));
    }
    Ok((ps, pt))
}

/// Finds `N_T` and `N_S` for every pair under the map `w`.
pub fn rcsls_neighbors(
    w: &DMatrix<f64>,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    pairs: &[(usize, usize)],
    knn: usize,
    neighbor_pool: usize,
) -> Result<FrozenNeighbors> {
    neighbors_blocked(w, src, tgt, pairs, knn, neighbor_pool, DEFAULT_BLOCK_SIZE)
}

fn neighbors_blocked(
    w: &DMatrix<f64>,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    pairs: &[(usize, usize)],
    knn: usize,
    neighbor_pool: usize,
    block: usize,
) -> Result<FrozenNeighbors> {
    let (ps, pt) = pool_sizes(src, tgt, knn, neighbor_pool)?;
    let mapped_queries = w * gather(src, pairs.iter().map(|p| p.0));
    let target_queries = gather(tgt, pairs.iter().map(|p| p.1));
    let target_pool = tgt.matrix().columns(0, pt).into_owned();
    let mapped_pool = w * src.matrix().columns(0, ps);
    let target = block_map(&mapped_queries, &target_pool, block, |_, s| top_k_desc(s, knn));
    let source = block_map(&target_queries, &mapped_pool, block, |_, s| top_k_desc(s, knn));
    Ok(FrozenNeighbors { target, source })
}

/// Loss with the neighbor sets fixed.
pub fn rcsls_loss_frozen(
    w: &DMatrix<f64>,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    pairs: &[(usize, usize)],
    neighbors: &FrozenNeighbors,
) -> f64 {
    let mut total = 0.0;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let wx = w * src.column(i);
        let z = tgt.column(j);
        let nt = &neighbors.target[p];
        let ns = &neighbors.source[p];
        let tgt_term: f64 = nt.iter().map(|&t| wx.dot(&tgt.column(t))).sum::<f64>() / nt.len() as f64;
        let src_term: f64 = ns.iter().map(|&s| (w * src.column(s)).dot(&z)).sum::<f64>() / ns.len() as f64;
        total += -2.0 * wx.dot(&z) + tgt_term + src_term;
    }
    total / pairs.len() as f64
}

/// Gradient of [`rcsls_loss_frozen`] with respect to `W`:
/// `1/|D| Σ [ (−2 z_j + mean N_T) x_iᵀ + z_j (mean N_S)ᵀ ]`.
pub fn rcsls_gradient_frozen(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    pairs: &[(usize, usize)],
    neighbors: &FrozenNeighbors,
) -> DMatrix<f64> {
    let d = src.dim();
    let m = pairs.len();
    let mut left = DMatrix::<f64>::zeros(d, m);
    let mut x = DMatrix::<f64>::zeros(d, m);
    let mut z = DMatrix::<f64>::zeros(d, m);
    let mut x_bar = DMatrix::<f64>::zeros(d, m);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let nt = &neighbors.target[p];
        let ns = &neighbors.source[p];
        let mut col = left.column_mut(p);
        for &t in nt {
            col += tgt.column(t);
        }
        col /= nt.len() as f64;
        col -= 2.0 * tgt.column(j);
        x.set_column(p, &src.column(i));
        z.set_column(p, &tgt.column(j));
        let mut xb = x_bar.column_mut(p);
        for &s in ns {
            xb += src.column(s);
        }
        xb /= ns.len() as f64;
    }
    (left * x.transpose() + z * x_bar.transpose()) / m as f64
}

/// Relaxed CSLS loss of `map` on the unique pairs of `dict`. Both spaces
/// must be unit length.
pub fn rcsls_loss(
    map: &LinearMap,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    dict: &SeedDictionary,
    knn: usize,
    neighbor_pool: usize,
) -> Result<f64> {
    check_inputs(src, tgt, dict)?;
    map.check_space(src, "source space")?;
    check_unit_length(src)?;
    check_unit_length(tgt)?;
    let pairs = dict.deduplicated();
    let nb = rcsls_neighbors(map.matrix(), src, tgt, &pairs, knn, neighbor_pool)?;
    Ok(rcsls_loss_frozen(map.matrix(), src, tgt, &pairs, &nb))
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` when training diverged.
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcslsOutcome {
    pub map: LinearMap,
    pub learning_rate: f64,
    pub epochs: usize,
    pub validation_accuracy: f64,
    /// Training loss after each epoch of the selected run.
    pub loss_trace: Vec<f64>,
    pub grid: Vec<GridPoint>,
}

struct Snapshot {
    map: LinearMap,
    accuracy: f64,
    trace: Vec<f64>,
}

fn split_validation(
    train: &SeedDictionary,
    valid: Option<&SeedDictionary>,
    cfg: &RcslsConfig,
) -> Result<(Vec<(usize, usize)>, SeedDictionary)> {
    let mut pairs = train.deduplicated();
    match valid {
        Some(v) => {
            if v.is_empty() {
                return Err(Error::EmptyDictionary);
            }
            let held = v.deduplicated();
            if held.iter().any(|p| pairs.binary_search(p).is_ok()) {
                return Err(Error::InvalidArgument(
                    "training and validation dictionaries overlap".into(),
                ));
            }
            Ok((pairs, v.clone()))
        }
        None => {
            let hold = cfg.validation_size.min(pairs.len() / 2);
            if hold == 0 {
                return Err(Error::InvalidArgument(
                    "too few training pairs to hold out a validation set".into(),
                ));
            }
            pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            let held = pairs.split_off(pairs.len() - hold);
            pairs.sort_unstable();
            Ok((pairs, SeedDictionary::new(held)))
        }
    }
}

/// Trains an unconstrained map starting from the Procrustes solution, picking
/// the learning rate and epoch count with the best validation P@1 under CSLS.
///
/// Grid points are visited learning rate first, in the given order; ties on
/// validation accuracy keep the earlier point. A run whose loss or map turns
/// non-finite is marked failed and skipped.
pub fn rcsls_train(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    train: &SeedDictionary,
    valid: Option<&SeedDictionary>,
    cfg: &RcslsConfig,
) -> Result<RcslsOutcome> {
    cfg.validate()?;
    check_inputs(src, tgt, train)?;
    check_unit_length(src)?;
    check_unit_length(tgt)?;
    pool_sizes(src, tgt, cfg.knn, cfg.neighbor_pool)?;
    let (pairs, valid) = split_validation(train, valid, cfg)?;
    valid.check_bounds(src.len(), tgt.len())?;
    let valid_multi = valid.to_multi();
    let w0 = procrustes_fit(src, tgt, &SeedDictionary::new(pairs.clone()))?;

    let max_epochs = *cfg.epoch_candidates.iter().max().expect("validated non-empty");
    let retrieval = RetrievalOptions {
        penalty_pool: Some(cfg.neighbor_pool),
        ..RetrievalOptions::default()
    };
    let criterion = RetrievalCriterion::Csls { knn: cfg.knn };

    // snapshots[lr][epoch candidate]
    let mut snapshots: Vec<Vec<Option<Snapshot>>> = Vec::with_capacity(cfg.learning_rates.len());
    for &lr in &cfg.learning_rates {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut w = w0.matrix().clone();
        let mut order = pairs.clone();
        let mut trace = Vec::with_capacity(max_epochs);
        let mut row: Vec<Option<Snapshot>> = (0..cfg.epoch_candidates.len()).map(|_| None).collect();
        for epoch in 1..=max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let nb = rcsls_neighbors(&w, src, tgt, batch, cfg.knn, cfg.neighbor_pool)?;
                let g = rcsls_gradient_frozen(src, tgt, batch, &nb);
                w -= lr * g;
            }
            if w.iter().any(|v| !v.is_finite()) {
                warn!("RCSLS diverged at lr={lr}, epoch {epoch}");
                break;
            }
            let nb = rcsls_neighbors(&w, src, tgt, &pairs, cfg.knn, cfg.neighbor_pool)?;
            let loss = rcsls_loss_frozen(&w, src, tgt, &pairs, &nb);
            if !loss.is_finite() {
                warn!("RCSLS loss became non-finite at lr={lr}, epoch {epoch}");
                break;
            }
            trace.push(loss);
            debug!("RCSLS lr={lr} epoch {epoch}: loss {loss:.6}");
            for (c, &e) in cfg.epoch_candidates.iter().enumerate() {
                if e == epoch {
                    let map = LinearMap::new(w.clone(), false)?;
                    let report = evaluate_p1(&map, src, tgt, &valid_multi, criterion, retrieval)?;
                    row[c] = Some(Snapshot {
                        map,
                        accuracy: report.accuracy,
                        trace: trace.clone(),
                    });
                }
            }
        }
        snapshots.push(row);
    }

    let mut grid = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    for (l, row) in snapshots.iter().enumerate() {
        for (c, snap) in row.iter().enumerate() {
            grid.push(GridPoint {
                learning_rate: cfg.learning_rates[l],
                epochs: cfg.epoch_candidates[c],
                validation_accuracy: snap.as_ref().map(|s| s.accuracy),
            });
            let Some(s) = snap else { continue };
            let better = match best {
                None => true,
                Some((bl, bc)) => s.accuracy > snapshots[bl][bc].as_ref().unwrap().accuracy,
            };
            if better {
                best = Some((l, c));
            }
        }
    }
    let (l, c) = best.ok_or_else(|| Error::Numerical("every RCSLS grid point diverged".into()))?;
    let snap = snapshots.swap_remove(l).swap_remove(c).unwrap();
    Ok(RcslsOutcome {
        map: snap.map,
        learning_rate: cfg.learning_rates[l],
        epochs: cfg.epoch_candidates[c],
        validation_accuracy: snap.accuracy,
        loss_trace: snap.trace,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, random_orthogonal, unit_columns};
    use rand::SeedableRng;

    fn unit_space(m: DMatrix<f64>, p: &str) -> EmbeddingSpace {
        let m = unit_columns(&m);
        EmbeddingSpace::new((0..m.ncols()).map(|i| format!("{p}{i}")).collect(), m).unwrap()
    }

    #[test]
    fn self_neighbor_loss_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = unit_space(gaussian_matrix(8, 60, &mut rng), "w");
        let dict = SeedDictionary::from_iter((0..60).map(|i| (i, i)));
        let loss = rcsls_loss(&LinearMap::identity(8), &s, &s, &dict, 1, 60).unwrap();
        assert!(loss.abs() <= 1e-12, "{loss}");
    }

    #[test]
    fn loss_requires_unit_vectors() {
        let s = EmbeddingSpace::new(vec!["a".into()], DMatrix::from_column_slice(2, 1, &[2.0, 0.0])).unwrap();
        let dict = SeedDictionary::new(vec![(0, 0)]);
        assert!(matches!(
            rcsls_loss(&LinearMap::identity(2), &s, &s, &dict, 1, 1),
            Err(Error::NotUnitLength { .. })
        ));
    }

    #[test]
    fn procrustes_solution_beats_random_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = unit_columns(&gaussian_matrix(10, 200, &mut rng));
        let q = random_orthogonal(10, &mut rng);
        let src = unit_space(x.clone(), "s");
        let tgt = unit_space(&q * x, "t");
        let dict = SeedDictionary::from_iter((0..100).map(|i| (i, i)));
        let fitted = procrustes_fit(&src, &tgt, &dict).unwrap();
        let random = LinearMap::new(random_orthogonal(10, &mut rng), true).unwrap();
        let at_fit = rcsls_loss(&fitted, &src, &tgt, &dict, 10, 200).unwrap();
        let at_random = rcsls_loss(&random, &src, &tgt, &dict, 10, 200).unwrap();
        assert!(at_fit < at_random, "{at_fit} vs {at_random}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = unit_space(gaussian_matrix(6, 50, &mut rng), "s");
        let tgt = unit_space(gaussian_matrix(6, 50, &mut rng), "t");
        let pairs: Vec<(usize, usize)> = (0..20).map(|i| (i, (i * 3) % 50)).collect();
        let w = gaussian_matrix(6, 6, &mut rng);
        let nb = rcsls_neighbors(&w, &src, &tgt, &pairs, 5, 50).unwrap();
        let g = rcsls_gradient_frozen(&src, &tgt, &pairs, &nb);
        let h = 1e-5;
        for r in 0..6 {
            for c in 0..6 {
                let mut plus = w.clone();
                plus[(r, c)] += h;
                let mut minus = w.clone();
                minus[(r, c)] -= h;
                let fd = (rcsls_loss_frozen(&plus, &src, &tgt, &pairs, &nb)
                    - rcsls_loss_frozen(&minus, &src, &tgt, &pairs, &nb))
                    / (2.0 * h);
                assert!((fd - g[(r, c)]).abs() <= 1e-4 * g[(r, c)].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn training_from_exact_solution_stays_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = unit_columns(&gaussian_matrix(12, 300, &mut rng));
        let q = random_orthogonal(12, &mut rng);
        let src = unit_space(x.clone(), "s");
        let tgt = unit_space(&q * x, "t");
        let train = SeedDictionary::from_iter((0..200).map(|i| (i, i)));
        let valid = SeedDictionary::from_iter((200..300).map(|i| (i, i)));
        let cfg = RcslsConfig {
            learning_rates: vec![1.0, 10.0],
            epoch_candidates: vec![2, 4],
            batch_size: 64,
            ..RcslsConfig::default()
        };
        let out = rcsls_train(&src, &tgt, &train, Some(&valid), &cfg).unwrap();
        assert_eq!(out.validation_accuracy, 1.0);
        assert!(!out.map.is_orthogonal());
        assert_eq!(out.grid.len(), 4);
        assert_eq!(out.loss_trace.len(), out.epochs);
        for pair in out.loss_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-6, "{:?}", out.loss_trace);
        }
    }

    #[test]
    fn validation_split_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = unit_space(gaussian_matrix(5, 40, &mut rng), "s");
        let train = SeedDictionary::from_iter((0..30).map(|i| (i, i)));
        let overlap = SeedDictionary::from_iter((25..35).map(|i| (i, i)));
        let cfg = RcslsConfig {
            epoch_candidates: vec![1],
            learning_rates: vec![1.0],
            ..RcslsConfig::default()
        };
        assert!(rcsls_train(&s, &s, &train, Some(&overlap), &cfg).is_err());
        let out = rcsls_train(&s, &s, &train, None, &cfg).unwrap();
        assert_eq!(out.grid.len(), 1);

        let empty_grid = RcslsConfig {
            learning_rates: vec![],
            ..RcslsConfig::default()
        };
        assert!(rcsls_train(&s, &s, &train, None, &empty_grid).is_err());
    }
}
