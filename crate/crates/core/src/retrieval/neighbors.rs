use std::fmt;

use serde::{Deserialize, Serialize};

use super::knn::top_k_desc;
use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub word: String,
    pub index: usize,
    pub cosine: f64,
}

/// The `k` most cosine-similar words to `word` in its own space, excluding
/// the word itself.
pub fn nearest_neighbors(space: &EmbeddingSpace, word: &str, k: usize) -> Result<Vec<Neighbor>> {
    let i = space
        .index_of(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    let q = space.column(i);
    let qn = q.norm();
    let mut scores: Vec<f64> = space
        .matrix()
        .column_iter()
        .map(|c| {
            let denom = qn * c.norm();
            if denom > 0.0 {
                q.dot(&c) / denom
            } else {
                0.0
            }
        })
        .collect();
    scores[i] = f64::NEG_INFINITY;
    let k = k.min(space.len() - 1);
    Ok(top_k_desc(&scores, k)
        .into_iter()
        .map(|j| Neighbor {
            word: space.word(j).to_string(),
            index: j,
            cosine: scores[j],
        })
        .collect())
}

/// Side-by-side neighbor lists, typically one word before and after a
/// transformation, or a word and its translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub word_a: String,
    pub neighbors_a: Vec<Neighbor>,
    pub word_b: String,
    pub neighbors_b: Vec<Neighbor>,
}

pub fn neighborhood_report(
    space_a: &EmbeddingSpace,
    space_b: &EmbeddingSpace,
    word_a: &str,
    word_b: &str,
    k: usize,
) -> Result<NeighborhoodReport> {
    Ok(NeighborhoodReport {
        word_a: word_a.to_string(),
        neighbors_a: nearest_neighbors(space_a, word_a, k)?,
        word_b: word_b.to_string(),
        neighbors_b: nearest_neighbors(space_b, word_b, k)?,
    })
}

impl fmt::Display for NeighborhoodReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .neighbors_a
            .iter()
            .map(|n| n.word.chars().count() + 9)
            .chain([self.word_a.chars().count()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  {}", self.word_a, self.word_b)?;
        let rows = self.neighbors_a.len().max(self.neighbors_b.len());
        for r in 0..rows {
            let cell = |list: &[Neighbor]| {
                list.get(r)
                    .map(|n| format!("{} ({:.4})", n.word, n.cosine))
                    .unwrap_or_default()
            };
            writeln!(f, "{:<width$}  {}", cell(&self.neighbors_a), cell(&self.neighbors_b))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicate_vector_is_rank_one() {
        let s = EmbeddingSpace::new(
            vec!["girl".into(), "boy".into(), "lass".into()],
            DMatrix::from_column_slice(2, 3, &[1.0, 1.0, 1.0, -0.5, 2.0, 2.0]),
        )
        .unwrap();
        let n = nearest_neighbors(&s, "girl", 2).unwrap();
        assert_eq!(n[0].word, "lass");
        assert!((n[0].cosine - 1.0).abs() < 1e-12);
        assert!(n.iter().all(|x| x.word != "girl"));
        assert!(nearest_neighbors(&s, "cat", 2).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = EmbeddingSpace::new(
            (0..500).map(|i| format!("w{i}")).collect(),
            gaussian_matrix(12, 500, &mut rng),
        )
        .unwrap();
        for q in [0usize, 77, 499] {
            let got = nearest_neighbors(&s, &format!("w{q}"), 10).unwrap();
            let qv = s.column(q);
            let mut all: Vec<(usize, f64)> = (0..500)
                .filter(|&j| j != q)
                .map(|j| {
                    let c = s.column(j);
                    (j, qv.dot(&c) / (qv.norm() * c.norm()))
                })
                .collect();
            all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let want: Vec<usize> = all[..10].iter().map(|x| x.0).collect();
            let have: Vec<usize> = got.iter().map(|n| n.index).collect();
            assert_eq!(have, want);
            assert!(have.iter().all(|&j| j != q));
        }
    }

    #[test]
    fn report_text_lists_both_sides() {
        let s = EmbeddingSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 1.0, 0.1, 0.0, 1.0]),
        )
        .unwrap();
        let r = neighborhood_report(&s, &s, "a", "c", 1).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("a"));
        assert!(text.contains("b (0.9950)"));
        assert_eq!(text.lines().count(), 2);
    }
}
