use std::cmp::Ordering;

use nalgebra::{DMatrix, DVectorView};
use rayon::prelude::*;

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};

/// Score order: higher score first, then lower index.
fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` best scores, best first. Ties go to the lower index.
pub fn top_k_desc(scores: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        let mut best = 0;
        for j in 1..scores.len() {
            if scores[j] > scores[best] {
                best = j;
            }
        }
        return vec![best];
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    idx
}

/// Mean of the `k` largest values, summed from largest to smallest.
pub(crate) fn mean_of_top_k(values: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    let top = &mut values[..k];
    top.sort_unstable_by(|a, b| b.total_cmp(a));
    top.iter().sum::<f64>() / k as f64
}

/// Runs `f(query_column, scores)` for every column of `queries`, where
/// `scores[j] = pool[:, j] · queries[:, query_column]`. Queries are processed
/// in blocks, in parallel; output order follows query order.
pub(crate) fn block_map<T, F>(queries: &DMatrix<f64>, pool: &DMatrix<f64>, block_size: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> T + Sync,
{
    let m = queries.ncols();
    let block_size = block_size.max(1);
    let starts: Vec<usize> = (0..m).step_by(block_size).collect();
    let pool_t = pool.transpose();
    starts
        .into_par_iter()
        .map(|start| {
            let len = block_size.min(m - start);
            let mut scores = &pool_t * queries.columns(start, len);
            let n = scores.nrows();
            let data = scores.as_mut_slice();
            (0..len)
                .map(|q| f(start + q, &mut data[q * n..(q + 1) * n]))
                .collect::<Vec<T>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// For each query column, the mean dot product with its `k` highest-scoring
/// pool columns. With unit-length inputs this is the CSLS penalty.
pub fn knn_mean_dots(queries: &DMatrix<f64>, pool: &DMatrix<f64>, k: usize, block_size: usize) -> Result<Vec<f64>> {
    if k == 0 || k > pool.ncols() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for a pool of {} vectors",
            pool.ncols()
        )));
    }
    Ok(block_map(queries, pool, block_size, |_, scores| {
        mean_of_top_k(scores, k)
    }))
}

/// Mean cosine similarity between `query` and its `k` most similar columns
/// of `pool`, optionally skipping the pool column `exclude`.
pub fn knn_mean_similarity(
    query: DVectorView<'_, f64>,
    pool: &EmbeddingSpace,
    k: usize,
    exclude: Option<usize>,
) -> Result<f64> {
    let available = pool.len() - usize::from(exclude.is_some_and(|e| e < pool.len()));
    if k == 0 || k > available {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for a pool of {available} vectors"
        )));
    }
    if query.len() != pool.dim() {
        return Err(Error::DimMismatch {
            what: "query",
            left: query.len(),
            right: pool.dim(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("query has non-finite entries".into()));
    }
    let qn = query.norm();
    let mut sims: Vec<f64> = pool
        .matrix()
        .column_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .map(|(_, c)| {
            let denom = qn * c.norm();
            if denom > 0.0 {
                query.dot(&c) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(mean_of_top_k(&mut sims, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, unit_columns};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_pool() -> EmbeddingSpace {
        EmbeddingSpace::new(
            vec!["x".into(), "y".into()],
            DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn small_examples() {
        let pool = unit_pool();
        let q = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(knn_mean_similarity(q.as_view(), &pool, 1, None).unwrap(), 1.0);
        assert_eq!(knn_mean_similarity(q.as_view(), &pool, 2, None).unwrap(), 0.5);
        assert_eq!(knn_mean_similarity(q.as_view(), &pool, 1, Some(0)).unwrap(), 0.0);
        assert!(knn_mean_similarity(q.as_view(), &pool, 3, None).is_err());
        assert!(knn_mean_similarity(q.as_view(), &pool, 2, Some(0)).is_err());
        assert!(knn_mean_similarity(q.as_view(), &pool, 0, None).is_err());
    }

    #[test]
    fn matches_full_sort_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pool = EmbeddingSpace::new(
            (0..500).map(|i| i.to_string()).collect(),
            gaussian_matrix(16, 500, &mut rng),
        )
        .unwrap();
        let queries = gaussian_matrix(16, 20, &mut rng);
        for (qi, q) in queries.column_iter().enumerate() {
            for k in [1, 10, 500] {
                let mut sims: Vec<f64> = pool
                    .matrix()
                    .column_iter()
                    .map(|c| {
                        let dot: f64 = q.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
                        dot / (q.norm() * c.norm())
                    })
                    .collect();
                sims.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let brute = sims[..k].iter().sum::<f64>() / k as f64;
                let fast = knn_mean_similarity(queries.column(qi), &pool, k, None).unwrap();
                assert!((brute - fast).abs() <= 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn blocked_penalties_match_single_query_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pool = unit_columns(&gaussian_matrix(8, 300, &mut rng));
        let queries = unit_columns(&gaussian_matrix(8, 37, &mut rng));
        let space = EmbeddingSpace::new((0..300).map(|i| i.to_string()).collect(), pool.clone()).unwrap();
        for block in [1, 5, 512] {
            let blocked = knn_mean_dots(&queries, &pool, 10, block).unwrap();
            for (q, b) in blocked.iter().enumerate() {
                let single = knn_mean_similarity(queries.column(q), &space, 10, None).unwrap();
                assert!((b - single).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn top_k_ties_prefer_low_index() {
        let s = [0.5, 0.9, 0.9, 0.1, 0.9];
        assert_eq!(top_k_desc(&s, 1), vec![1]);
        assert_eq!(top_k_desc(&s, 2), vec![1, 2]);
        assert_eq!(top_k_desc(&s, 4), vec![1, 2, 4, 0]);
        assert_eq!(top_k_desc(&s, 10).len(), 5);
        assert!(top_k_desc(&s, 0).is_empty());
    }
}
