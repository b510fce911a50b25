//! Translation by nearest neighbor or cross-domain similarity local scaling.
//!
//! `CSLS(Wx, z) = 2 cos(Wx, z) − r_T(Wx) − r_S(z)` where `r_T(Wx)` is the mean
//! cosine of `Wx` to its `k` nearest targets and `r_S(z)` the mean cosine of
//! `z` to its `k` nearest mapped source vectors. Hubs, i.e. targets close to
//! everything, get a large `r_S` and are pushed down the ranking.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use super::knn::{block_map, knn_mean_dots, top_k_desc};
use crate::embeddings::{EmbeddingSpace, MultiDictionary};
use crate::error::{Error, Result};
use crate::linalg::unit_columns;
use crate::map::LinearMap;

pub const DEFAULT_BLOCK_SIZE: usize = 512;
pub const DEFAULT_CSLS_KNN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetrievalCriterion {
    NearestNeighbor,
    Csls { knn: usize },
}

impl RetrievalCriterion {
    pub fn csls() -> Self {
        RetrievalCriterion::Csls { knn: DEFAULT_CSLS_KNN }
    }

    /// Builds a criterion from a CLI name (`nn` or `csls`) and a neighbor count.
    pub fn from_name(name: &str, knn: usize) -> Result<Self> {
        let c = match name {
            "nn" => RetrievalCriterion::NearestNeighbor,
            "csls" => RetrievalCriterion::Csls { knn },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown criterion {other:?} (expected nn or csls)"
                )))
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RetrievalCriterion::Csls { knn: 0 } => Err(Error::InvalidArgument("CSLS needs knn >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RetrievalCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrievalCriterion::NearestNeighbor => f.write_str("nn"),
            RetrievalCriterion::Csls { knn } => write!(f, "csls(k={knn})"),
        }
    }
}

impl FromStr for RetrievalCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, DEFAULT_CSLS_KNN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalOptions {
    /// Queries scored per dense block.
    pub block_size: usize,
    /// Restrict both CSLS penalty pools to the most frequent words; `None`
    /// uses the whole loaded vocabulary.
    pub penalty_pool: Option<usize>,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        RetrievalOptions {
            block_size: DEFAULT_BLOCK_SIZE,
            penalty_pool: None,
        }
    }
}

/// CSLS scores of one mapped query against every target, given
/// precomputed penalties.
pub fn csls_scores(
    mapped_query: DVectorView<'_, f64>,
    tgt: &EmbeddingSpace,
    r_query: f64,
    r_targets: &[f64],
) -> Result<Vec<f64>> {
    if mapped_query.len() != tgt.dim() {
        return Err(Error::DimMismatch {
            what: "mapped query",
            left: mapped_query.len(),
            right: tgt.dim(),
        });
    }
    if r_targets.len() != tgt.len() {
        return Err(Error::ShapeMismatch {
            expected: tgt.len(),
            found: r_targets.len(),
        });
    }
    let qn = mapped_query.norm();
    Ok(tgt
        .matrix()
        .column_iter()
        .zip(r_targets)
        .map(|(z, r)| {
            let denom = qn * z.norm();
            let cos = if denom > 0.0 { mapped_query.dot(&z) / denom } else { 0.0 };
            2.0 * cos - r_query - r
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub target: usize,
    pub score: f64,
}

/// Precomputed state for ranking targets of mapped source words.
#[derive(Debug)]
pub struct Translator<'a> {
    map: &'a LinearMap,
    src: &'a EmbeddingSpace,
    criterion: RetrievalCriterion,
    options: RetrievalOptions,
    targets: DMatrix<f64>,
    target_pool: usize,
    target_penalty: Option<Vec<f64>>,
}

impl<'a> Translator<'a> {
    pub fn new(
        map: &'a LinearMap,
        src: &'a EmbeddingSpace,
        tgt: &'a EmbeddingSpace,
        criterion: RetrievalCriterion,
        options: RetrievalOptions,
    ) -> Result<Self> {
        criterion.validate()?;
        map.check_space(src, "source space")?;
        map.check_space(tgt, "target space")?;
        let targets = unit_columns(tgt.matrix());
        let pool = options.penalty_pool.unwrap_or(usize::MAX);
        let target_pool = pool.min(tgt.len());
        let target_penalty = match criterion {
            RetrievalCriterion::NearestNeighbor => None,
            RetrievalCriterion::Csls { knn } => {
                let mapped_pool = unit_columns(&map.apply_prefix(src, pool));
                if knn > target_pool || knn > mapped_pool.ncols() {
                    return Err(Error::InvalidArgument(format!(
                        "knn = {knn} exceeds a penalty pool ({} source, {target_pool} target words)",
                        mapped_pool.ncols()
                    )));
                }
                Some(knn_mean_dots(&targets, &mapped_pool, knn, options.block_size)?)
            }
        };
        Ok(Translator {
            map,
            src,
            criterion,
            options,
            targets,
            target_pool,
            target_penalty,
        })
    }

    /// Per-target `r_S` penalties (CSLS only).
    pub fn target_penalties(&self) -> Option<&[f64]> {
        self.target_penalty.as_deref()
    }

    fn check_queries(&self, queries: &[usize]) -> Result<()> {
        if let Some(&bad) = queries.iter().find(|&&i| i >= self.src.len()) {
            return Err(Error::IndexOutOfRange {
                what: "query",
                index: bad,
                len: self.src.len(),
            });
        }
        Ok(())
    }

    /// `r_T(Wx)` for each query (CSLS only).
    pub fn query_penalties(&self, queries: &[usize]) -> Result<Option<Vec<f64>>> {
        self.check_queries(queries)?;
        let RetrievalCriterion::Csls { knn } = self.criterion else {
            return Ok(None);
        };
        let mapped = unit_columns(&self.map.apply_columns(self.src, queries));
        let pool = self.targets.columns(0, self.target_pool).into_owned();
        knn_mean_dots(&mapped, &pool, knn, self.options.block_size).map(Some)
    }

    /// Scores every target for every query, handing each row to `f`.
    fn score_rows<T: Send>(&self, queries: &[usize], f: impl Fn(usize, &[f64]) -> T + Sync) -> Result<Vec<T>> {
        let r_query = self.query_penalties(queries)?;
        let mapped = unit_columns(&self.map.apply_columns(self.src, queries));
        Ok(block_map(&mapped, &self.targets, self.options.block_size, |q, cos| {
            if let (Some(rq), Some(rt)) = (&r_query, &self.target_penalty) {
                for (s, r) in cos.iter_mut().zip(rt) {
                    *s = 2.0 * *s - rq[q] - r;
                }
            }
            f(q, cos)
        }))
    }

    /// Full score vectors, one per query.
    pub fn scores(&self, queries: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.score_rows(queries, |_, s| s.to_vec())
    }

    /// Best `topk` targets per query, ties broken by ascending target index.
    pub fn rank(&self, queries: &[usize], topk: usize) -> Result<Vec<Vec<Ranked>>> {
        self.score_rows(queries, |_, s| {
            top_k_desc(s, topk)
                .into_iter()
                .map(|target| Ranked {
                    target,
                    score: s[target],
                })
                .collect()
        })
    }
}

/// Ranks target words for each source query under `criterion`.
pub fn translate_topk(
    map: &LinearMap,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    queries: &[usize],
    criterion: RetrievalCriterion,
    topk: usize,
    options: RetrievalOptions,
) -> Result<Vec<Vec<Ranked>>> {
    Translator::new(map, src, tgt, criterion, options)?.rank(queries, topk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub source: String,
    pub predicted: String,
    pub score: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub criterion: RetrievalCriterion,
    pub accuracy: f64,
    pub total_queries: usize,
    pub correct: usize,
    pub predictions: Vec<Prediction>,
}

/// Top-1 translation accuracy: one query per unique source word, correct
/// when the best target is any of its reference translations.
pub fn evaluate_p1(
    map: &LinearMap,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    test: &MultiDictionary,
    criterion: RetrievalCriterion,
    options: RetrievalOptions,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    for (&i, targets) in test.entries() {
        if let Some(&j) = targets.iter().find(|&&j| j >= tgt.len()) {
            return Err(Error::IndexOutOfRange {
                what: "target",
                index: j,
                len: tgt.len(),
            });
        }
        if i >= src.len() {
            return Err(Error::IndexOutOfRange {
                what: "source",
                index: i,
                len: src.len(),
            });
        }
    }
    let queries: Vec<usize> = test.sources().collect();
    let ranked = translate_topk(map, src, tgt, &queries, criterion, 1, options)?;
    let mut correct = 0;
    let predictions = queries
        .iter()
        .zip(ranked)
        .map(|(&i, best)| {
            let top = best[0];
            let hit = test.targets(i).is_some_and(|t| t.contains(&top.target));
            correct += usize::from(hit);
            Prediction {
                source: src.word(i).to_string(),
                predicted: tgt.word(top.target).to_string(),
                score: top.score,
                correct: hit,
            }
        })
        .collect();
    Ok(EvaluationReport {
        criterion,
        accuracy: correct as f64 / queries.len() as f64,
        total_queries: queries.len(),
        correct,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::SeedDictionary;
    use crate::linalg::{gaussian_matrix, random_orthogonal};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(d: usize, data: &[f64], prefix: &str) -> EmbeddingSpace {
        let n = data.len() / d;
        EmbeddingSpace::new(
            (0..n).map(|i| format!("{prefix}{i}")).collect(),
            DMatrix::from_column_slice(d, n, data),
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_csls() {
        let tgt = space(2, &[1.0, 0.0, 0.0, 1.0], "t");
        let src = space(2, &[1.0, 0.0], "s");
        let map = LinearMap::identity(2);
        let tr = Translator::new(
            &map,
            &src,
            &tgt,
            RetrievalCriterion::Csls { knn: 1 },
            Default::default(),
        )
        .unwrap();
        // r_S((1,0)) = 1, r_S((0,1)) = 0 against the single mapped source.
        assert_eq!(tr.target_penalties().unwrap(), &[1.0, 0.0]);
        let rq = tr.query_penalties(&[0]).unwrap().unwrap();
        assert_eq!(rq, vec![1.0]);
        let scores = tr.scores(&[0]).unwrap();
        assert_eq!(scores[0], vec![0.0, -1.0]);
        let direct = csls_scores(DVector::from_vec(vec![1.0, 0.0]).as_view(), &tgt, 1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(direct, vec![0.0, -1.0]);
        assert_eq!(tr.rank(&[0], 1).unwrap()[0][0].target, 0);
    }

    #[test]
    fn csls_scores_shape_checks() {
        let tgt = space(2, &[1.0, 0.0, 0.0, 1.0], "t");
        let q = DVector::from_vec(vec![1.0, 0.0]);
        assert!(csls_scores(q.as_view(), &tgt, 0.0, &[0.0]).is_err());
        let q3 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(csls_scores(q3.as_view(), &tgt, 0.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn equal_penalties_reduce_to_cosine_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tgt = EmbeddingSpace::new(
            (0..50).map(|i| i.to_string()).collect(),
            gaussian_matrix(6, 50, &mut rng),
        )
        .unwrap();
        let q = DVector::from_iterator(6, gaussian_matrix(6, 1, &mut rng).iter().copied());
        let flat = csls_scores(q.as_view(), &tgt, 0.3, &vec![0.7; 50]).unwrap();
        let cos = csls_scores(q.as_view(), &tgt, 0.0, &vec![0.0; 50]).unwrap();
        assert_eq!(top_k_desc(&flat, 5), top_k_desc(&cos, 5));
    }

    #[test]
    fn identical_spaces_translate_to_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = EmbeddingSpace::new(
            (0..40).map(|i| i.to_string()).collect(),
            gaussian_matrix(10, 40, &mut rng),
        )
        .unwrap();
        let map = LinearMap::identity(10);
        let queries: Vec<usize> = (0..40).collect();
        let ranked = translate_topk(
            &map,
            &s,
            &s,
            &queries,
            RetrievalCriterion::NearestNeighbor,
            3,
            Default::default(),
        )
        .unwrap();
        for (i, r) in ranked.iter().enumerate() {
            assert_eq!(r.len(), 3);
            assert_eq!(r[0].target, i);
            assert!((r[0].score - 1.0).abs() < 1e-12);
            assert!(r[0].score >= r[1].score && r[1].score >= r[2].score);
        }
        let report = evaluate_p1(
            &map,
            &s,
            &s,
            &SeedDictionary::from_iter((0..40).map(|i| (i, i))).to_multi(),
            RetrievalCriterion::csls(),
            Default::default(),
        )
        .unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.correct, 40);
    }

    #[test]
    fn csls_demotes_a_hub() {
        // Sources at 0°, 50°, 70°. t0 at −30° is the true translation of s0;
        // t1 at 25° sits close to every source and wins plain NN.
        let at = |deg: f64| [deg.to_radians().cos(), deg.to_radians().sin()];
        let s = [at(0.0), at(50.0), at(70.0)];
        let t = [at(-30.0), at(25.0), at(90.0)];
        let src = space(2, &s.concat(), "s");
        let tgt = space(2, &t.concat(), "t");
        let map = LinearMap::identity(2);
        let nn = translate_topk(
            &map,
            &src,
            &tgt,
            &[0],
            RetrievalCriterion::NearestNeighbor,
            1,
            Default::default(),
        )
        .unwrap();
        let csls = translate_topk(
            &map,
            &src,
            &tgt,
            &[0],
            RetrievalCriterion::Csls { knn: 2 },
            1,
            Default::default(),
        )
        .unwrap();

        // Direct evaluation of the formula.
        let cos = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let top2 = |mut v: Vec<f64>| {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            (v[0] + v[1]) / 2.0
        };
        let r_t = top2(t.iter().map(|&z| cos(s[0], z)).collect());
        let r_s: Vec<f64> = t
            .iter()
            .map(|&z| top2(s.iter().map(|&x| cos(x, z)).collect()))
            .collect();
        let direct: Vec<f64> = (0..3).map(|j| 2.0 * cos(s[0], t[j]) - r_t - r_s[j]).collect();

        assert_eq!(nn[0][0].target, 1, "NN should pick the hub");
        assert_eq!(csls[0][0].target, 0, "CSLS should pick the true pair");
        assert!(direct[0] > direct[1] && direct[0] > direct[2]);
        assert!((csls[0][0].score - direct[0]).abs() < 1e-12);
    }

    #[test]
    fn random_map_is_chance_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1000;
        let src = EmbeddingSpace::new(
            (0..n).map(|i| i.to_string()).collect(),
            gaussian_matrix(30, n, &mut rng),
        )
        .unwrap();
        let tgt = EmbeddingSpace::new(
            (0..n).map(|i| i.to_string()).collect(),
            gaussian_matrix(30, n, &mut rng),
        )
        .unwrap();
        let map = LinearMap::new(random_orthogonal(30, &mut rng), true).unwrap();
        let test = SeedDictionary::from_iter((0..n).map(|i| (i, i))).to_multi();
        let report = evaluate_p1(&map, &src, &tgt, &test, RetrievalCriterion::csls(), Default::default()).unwrap();
        assert!(report.accuracy < 5.0 / n as f64, "accuracy {}", report.accuracy);
    }

    #[test]
    fn rejects_bad_queries_and_knn() {
        let s = space(2, &[1.0, 0.0, 0.0, 1.0], "w");
        let map = LinearMap::identity(2);
        assert!(translate_topk(
            &map,
            &s,
            &s,
            &[2],
            RetrievalCriterion::NearestNeighbor,
            1,
            Default::default()
        )
        .is_err());
        assert!(Translator::new(&map, &s, &s, RetrievalCriterion::Csls { knn: 3 }, Default::default()).is_err());
        assert!(RetrievalCriterion::from_name("csls", 0).is_err());
        assert!(RetrievalCriterion::from_name("cos", 1).is_err());
        assert!(evaluate_p1(
            &map,
            &s,
            &s,
            &MultiDictionary::default(),
            RetrievalCriterion::NearestNeighbor,
            Default::default()
        )
        .is_err());
    }
}
