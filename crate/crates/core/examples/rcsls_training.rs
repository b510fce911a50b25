//! Train a relaxed-CSLS map and show the hyper-parameter grid it searched.
//!
//!     cargo run --release --example rcsls_training

use xlign::align::{procrustes_fit, rcsls_train, RcslsConfig};
use xlign::normalize::{normalize, NormalizationMethod};
use xlign::retrieval::{evaluate_p1, RetrievalCriterion, RetrievalOptions};
use xlign::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> xlign::Result<()> {
    let mut spec = SyntheticSpec::non_isomorphic(2000, 50, 0.05, 0);
    spec.train_size = 500;
    spec.test_size = 500;
    let world = generate_synthetic(&spec)?;
    // RCSLS expects unit vectors; IterNorm provides them.
    let (src, _) = normalize(&world.src, NormalizationMethod::iternorm(), None)?;
    let (tgt, _) = normalize(&world.tgt, NormalizationMethod::iternorm(), None)?;

    let out = rcsls_train(&src, &tgt, &world.train, None, &RcslsConfig::default())?;
    println!("lr   epochs  validation P@1");
    for g in &out.grid {
        let acc = g
            .validation_accuracy
            .map_or("diverged".into(), |a| format!("{:.1}", a * 100.0));
        println!("{:<4} {:<7} {acc}", g.learning_rate, g.epochs);
    }
    println!("chosen: lr {} for {} epochs", out.learning_rate, out.epochs);
    println!(
        "loss per epoch: {:?}",
        out.loss_trace.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>()
    );

    let test = world.test.to_multi();
    let csls = RetrievalCriterion::csls();
    let opts = RetrievalOptions::default();
    let procrustes = procrustes_fit(&src, &tgt, &world.train)?;
    println!(
        "test P@1: Procrustes {:.1}, RCSLS {:.1}",
        evaluate_p1(&procrustes, &src, &tgt, &test, csls, opts)?.accuracy * 100.0,
        evaluate_p1(&out.map, &src, &tgt, &test, csls, opts)?.accuracy * 100.0
    );
    Ok(())
}
