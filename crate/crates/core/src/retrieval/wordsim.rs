use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub word_a: String,
    pub word_b: String,
    pub human_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pairs: Vec<SimilarityPair>,
}

impl SimilarityDataset {
    pub fn new(pairs: Vec<SimilarityPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("similarity dataset is empty".into()));
        }
        if let Some(p) = pairs.iter().find(|p| !p.human_score.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite score for ({}, {})",
                p.word_a, p.word_b
            )));
        }
        Ok(SimilarityDataset { pairs })
    }

    pub fn pairs(&self) -> &[SimilarityPair] {
        &self.pairs
    }
}

/// Reads `word_a word_b score` lines; blank lines and lines starting with
/// `#` are skipped.
pub fn parse_similarity_dataset<R: BufRead>(reader: R) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let [a, b, score] = tokens[..] else {
            return Err(Error::InvalidArgument(format!(
                "similarity line {} needs \"word_a word_b score\"",
                n + 1
            )));
        };
        let human_score: f64 = score.parse().map_err(|_| Error::InvalidValue {
            line: n + 1,
            value: score.to_string(),
        })?;
        pairs.push(SimilarityPair {
            word_a: a.to_string(),
            word_b: b.to_string(),
            human_score,
        });
    }
    SimilarityDataset::new(pairs)
}

pub fn read_similarity_file(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(|f| parse_similarity_dataset(BufReader::new(f)))
        .map_err(Error::in_file(path))
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) hold ranks i+1..=j.
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks. `None` when either
/// side has no variance.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSimResult {
    pub rho: f64,
    pub covered_pairs: usize,
    pub skipped_pairs: usize,
}

fn lookup(space: &EmbeddingSpace, word: &str) -> Option<usize> {
    space.index_of(word).or_else(|| space.index_of(&word.to_lowercase()))
}

/// Spearman correlation between cosine similarity and human judgments over
/// in-vocabulary pairs. Words are matched exactly, then lowercased.
pub fn spearman_wordsim(space: &EmbeddingSpace, dataset: &SimilarityDataset) -> Result<WordSimResult> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    for p in dataset.pairs() {
        let (Some(a), Some(b)) = (lookup(space, &p.word_a), lookup(space, &p.word_b)) else {
            continue;
        };
        let (x, y) = (space.column(a), space.column(b));
        let denom = x.norm() * y.norm();
        model.push(if denom > 0.0 { x.dot(&y) / denom } else { 0.0 });
        human.push(p.human_score);
    }
    if model.is_empty() {
        return Err(Error::InvalidArgument(
            "no similarity pair has both words in the vocabulary".into(),
        ));
    }
    let rho =
        spearman(&model, &human).ok_or_else(|| Error::Numerical("correlation undefined: constant scores".into()))?;
    Ok(WordSimResult {
        rho,
        covered_pairs: model.len(),
        skipped_pairs: dataset.pairs().len() - model.len(),
    })
}
