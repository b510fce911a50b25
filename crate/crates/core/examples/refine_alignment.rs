//! Start from a tiny seed dictionary and let mutual CSLS neighbors grow it.
//!
//!     cargo run --release --example refine_alignment

use xlign::align::{procrustes_fit, refine, RefineConfig};
use xlign::normalize::{normalize, NormalizationMethod};
use xlign::retrieval::{evaluate_p1, RetrievalCriterion, RetrievalOptions};
use xlign::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> xlign::Result<()> {
    let mut spec = SyntheticSpec::non_isomorphic(3000, 50, 0.08, 3);
    spec.train_size = 60;
    spec.test_size = 1000;
    let world = generate_synthetic(&spec)?;
    let (src, _) = normalize(&world.src, NormalizationMethod::iternorm(), None)?;
    let (tgt, _) = normalize(&world.tgt, NormalizationMethod::iternorm(), None)?;
    let test = world.test.to_multi();
    let p1 = |map| -> xlign::Result<f64> {
        Ok(evaluate_p1(
            map,
            &src,
            &tgt,
            &test,
            RetrievalCriterion::csls(),
            RetrievalOptions::default(),
        )?
        .accuracy)
    };

    let base = procrustes_fit(&src, &tgt, &world.train)?;
    println!(
        "seed pairs: {}  Procrustes P@1 {:.1}",
        world.train.len(),
        p1(&base)? * 100.0
    );

    let out = refine(&src, &tgt, &world.train, &RefineConfig::default())?;
    println!("synthetic dictionary sizes per step: {:?}", out.dictionary_sizes);
    println!("after refinement P@1 {:.1}", p1(&out.map)? * 100.0);
    Ok(())
}
