//! Three normalizations × three alignment methods on synthetic worlds whose
//! languages differ in center and vector length, printed as a table.
//!
//!     cargo run --release --example synthetic_grid

use xlign::align::{AlignmentMethod, RcslsConfig, RefineConfig};
use xlign::normalize::NormalizationMethod;
use xlign::pipeline::{run_in_memory, PipelineSettings};
use xlign::synthetic::{generate_synthetic, SyntheticSpec};
use xlign::table::{ResultTable, TableEntry};

fn main() -> xlign::Result<()> {
    let mut entries = Vec::new();
    for (tag, noise) in [("σ=0.02", 0.02), ("σ=0.05", 0.05)] {
        let mut spec = SyntheticSpec::non_isomorphic(2000, 50, noise, 0);
        spec.signal_std = 0.05;
        spec.train_size = 500;
        spec.test_size = 500;
        let world = generate_synthetic(&spec)?;
        let test = world.test.to_multi();
        for method in [
            AlignmentMethod::Procrustes,
            AlignmentMethod::ProcrustesRefine(RefineConfig::default()),
            AlignmentMethod::Rcsls(RcslsConfig::default()),
        ] {
            for norm in [
                NormalizationMethod::None,
                NormalizationMethod::CenterThenLength,
                NormalizationMethod::iternorm(),
            ] {
                let settings = PipelineSettings::new(norm, method.clone());
                let out = run_in_memory(&world.src, &world.tgt, &world.train, &test, None, &settings)?;
                entries.push(TableEntry {
                    method: method.label().into(),
                    normalization: norm.label().into(),
                    tag: tag.into(),
                    accuracy: out.evaluation.accuracy,
                });
            }
        }
    }
    let table = ResultTable::from_entries(&entries)?;
    print!("{}", table.to_text());
    Ok(())
}
