//! Nearest-neighbor retrieval against CSLS, and a few ranked translations.
//!
//!     cargo run --example csls_translate

use xlign::align::procrustes_fit;
use xlign::retrieval::{evaluate_p1, translate_topk, RetrievalCriterion, RetrievalOptions};
use xlign::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> xlign::Result<()> {
    // High noise in few dimensions makes some targets hubs.
    let mut spec = SyntheticSpec::isomorphic(3000, 20, 0.15, 2);
    spec.train_size = 1000;
    spec.test_size = 1000;
    let world = generate_synthetic(&spec)?;
    let map = procrustes_fit(&world.src, &world.tgt, &world.train)?;
    let test = world.test.to_multi();
    let opts = RetrievalOptions::default();

    for criterion in [RetrievalCriterion::NearestNeighbor, RetrievalCriterion::csls()] {
        let r = evaluate_p1(&map, &world.src, &world.tgt, &test, criterion, opts)?;
        let mut hits = std::collections::HashMap::new();
        for p in &r.predictions {
            *hits.entry(p.predicted.as_str()).or_insert(0) += 1;
        }
        println!(
            "{:<24} P@1 {:.1}  most repeated prediction used {} times",
            format!("{criterion:?}"),
            r.accuracy * 100.0,
            hits.values().max().unwrap()
        );
    }

    let queries: Vec<usize> = test.sources().take(5).collect();
    let ranked = translate_topk(
        &map,
        &world.src,
        &world.tgt,
        &queries,
        RetrievalCriterion::csls(),
        3,
        opts,
    )?;
    for (q, row) in queries.iter().zip(ranked) {
        let cands: Vec<String> = row
            .iter()
            .map(|r| format!("{} {:.3}", world.tgt.word(r.target), r.score))
            .collect();
        println!("{:>6} -> {}", world.src.word(*q), cands.join(", "));
    }
    Ok(())
}
