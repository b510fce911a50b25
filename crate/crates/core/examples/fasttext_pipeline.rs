//! One full pipeline run on downloaded fastText vectors and MUSE
//! dictionaries (see `xlign fetch-instructions`). Writes the map, reports
//! and `run.json` under `runs/en-<lang>/`.
//!
//!     cargo run --release --example fasttext_pipeline -- data ja procrustes iternorm

use std::path::PathBuf;

use xlign::align::{AlignmentMethod, RcslsConfig, RefineConfig};
use xlign::normalize::NormalizationMethod;
use xlign::pipeline::{run_pipeline, PipelineConfig, PipelinePaths, PipelineSettings};

fn main() -> xlign::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [data, lang, method, norm] = args.as_slice() else {
        eprintln!("usage: fasttext_pipeline <data-dir> <lang> <procrustes|procrustes-refine|rcsls> <none|cl|iternorm>");
        std::process::exit(1);
    };
    let data = PathBuf::from(data);
    let alignment = match method.as_str() {
        "procrustes-refine" => AlignmentMethod::ProcrustesRefine(RefineConfig::default()),
        "rcsls" => AlignmentMethod::Rcsls(RcslsConfig::default()),
        _ => AlignmentMethod::Procrustes,
    };
    let normalization: NormalizationMethod = norm.parse()?;
    let cfg = PipelineConfig {
        settings: PipelineSettings::new(normalization, alignment),
        paths: PipelinePaths {
            src: data.join("vectors/wiki.en.vec"),
            tgt: data.join(format!("vectors/wiki.{lang}.vec")),
            train_dict: data.join(format!("dictionaries/en-{lang}.0-5000.txt")),
            test_dict: data.join(format!("dictionaries/en-{lang}.5000-6500.txt")),
            valid_dict: None,
            out_dir: PathBuf::from(format!("runs/en-{lang}/{method}-{norm}")),
        },
        tag: lang.clone(),
        max_words: Some(200_000),
    };
    let (_, record) = run_pipeline(&cfg)?;
    println!(
        "{} + {}: P@1 {:.1} on {} queries",
        record.method,
        record.normalization,
        record.accuracy * 100.0,
        record.total_queries
    );
    Ok(())
}
