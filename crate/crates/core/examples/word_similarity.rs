//! Spearman correlation with human similarity judgments, before and after
//! IterNorm. Pass a `.vec` file and a dataset (e.g. EN_WS-353-ALL.txt) to
//! use real data; without arguments a toy space is used.
//!
//!     cargo run --release --example word_similarity -- wiki.en.vec EN_WS-353-ALL.txt

use nalgebra::DMatrix;
use xlign::embeddings::{read_vec_file, EmbeddingSpace, ReadOptions};
use xlign::normalize::{normalize, NormalizationMethod};
use xlign::retrieval::{read_similarity_file, spearman_wordsim, SimilarityDataset, SimilarityPair};

fn toy() -> xlign::Result<(EmbeddingSpace, SimilarityDataset)> {
    let words = ["cat", "dog", "car", "truck", "apple", "pear"];
    #[rustfmt::skip]
    let m = DMatrix::from_column_slice(3, 6, &[
        1.0, 0.2, 0.1,   0.9, 0.3, 0.0,
        0.1, 1.0, 0.2,   0.2, 1.1, 0.3,
        0.0, 0.1, 1.0,   0.2, 0.0, 0.8,
    ]);
    let space = EmbeddingSpace::new(words.iter().map(|w| w.to_string()).collect(), m)?;
    let pair = |a: &str, b: &str, s: f64| SimilarityPair {
        word_a: a.into(),
        word_b: b.into(),
        human_score: s,
    };
    let data = SimilarityDataset::new(vec![
        pair("cat", "dog", 8.0),
        pair("car", "truck", 8.5),
        pair("apple", "pear", 7.5),
        pair("cat", "car", 1.0),
        pair("dog", "pear", 0.5),
    ])?;
    Ok((space, data))
}

fn main() -> xlign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (space, data) = match args.as_slice() {
        [vec, dataset] => (
            read_vec_file(
                vec,
                ReadOptions {
                    max_words: Some(200_000),
                },
            )?,
            read_similarity_file(dataset)?,
        ),
        _ => toy()?,
    };
    let before = spearman_wordsim(&space, &data)?;
    let (normalized, _) = normalize(&space, NormalizationMethod::iternorm(), None)?;
    let after = spearman_wordsim(&normalized, &data)?;
    println!(
        "pairs used {} (skipped {})\nbefore IterNorm {:.1}\nafter IterNorm  {:.1}",
        before.covered_pairs,
        before.skipped_pairs,
        before.rho * 100.0,
        after.rho * 100.0
    );
    Ok(())
}
