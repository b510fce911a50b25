//! How IterNorm changes a word's nearest neighbors.
//!
//!     cargo run --release --example neighborhood -- wiki.en.vec girl

use xlign::embeddings::{read_vec_file, ReadOptions};
use xlign::normalize::{normalize, NormalizationMethod};
use xlign::retrieval::neighborhood_report;
use xlign::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> xlign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (space, word) = match args.as_slice() {
        [path, word] => (
            read_vec_file(
                path,
                ReadOptions {
                    max_words: Some(200_000),
                },
            )?,
            word.clone(),
        ),
        _ => (
            generate_synthetic(&SyntheticSpec::non_isomorphic(2000, 30, 0.0, 5))?.src,
            "s0".to_string(),
        ),
    };
    let (normalized, _) = normalize(&space, NormalizationMethod::iternorm(), None)?;
    let report = neighborhood_report(&space, &normalized, &word, &word, 8)?;
    println!("left: original space, right: after IterNorm\n");
    print!("{report}");
    Ok(())
}
