//! Recover a hidden rotation from 100 translation pairs.
//!
//!     cargo run --example procrustes_alignment

use xlign::align::{objective_value, procrustes_fit};
use xlign::retrieval::{evaluate_p1, RetrievalCriterion, RetrievalOptions};
use xlign::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> xlign::Result<()> {
    for noise in [0.0, 0.02, 0.1] {
        let mut spec = SyntheticSpec::isomorphic(2000, 40, noise, 7);
        spec.train_size = 100;
        spec.test_size = 1000;
        let world = generate_synthetic(&spec)?;
        let map = procrustes_fit(&world.src, &world.tgt, &world.train)?;
        let eval = evaluate_p1(
            &map,
            &world.src,
            &world.tgt,
            &world.test.to_multi(),
            RetrievalCriterion::csls(),
            RetrievalOptions::default(),
        )?;
        println!(
            "noise {noise:<5} ‖W−Q‖ = {:.2e}  objective = {:.3e}  P@1 = {:.1}",
            (map.matrix() - &world.q).norm(),
            objective_value(&map, &world.src, &world.tgt, &world.train)?,
            eval.accuracy * 100.0
        );
    }
    Ok(())
}
