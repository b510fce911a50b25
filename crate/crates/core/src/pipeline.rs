//! End-to-end runs: normalize both spaces the same way, fit a map, evaluate
//! P@1, and record everything needed to repeat the run.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{procrustes_fit, rcsls_train, refine, AlignmentMethod};
use crate::embeddings::{
    load_dictionary_file, read_vec_file, EmbeddingSpace, LoadedDictionary, MultiDictionary, ReadOptions, SeedDictionary,
};
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::normalize::{length_normalize, normalize, NormalizationMethod, NormalizationReport};
use crate::retrieval::{evaluate_p1, EvaluationReport, RetrievalCriterion, RetrievalOptions};

/// Stage settings shared by in-memory and file-based runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub normalization: NormalizationMethod,
    pub alignment: AlignmentMethod,
    pub criterion: RetrievalCriterion,
    #[serde(default)]
    pub retrieval: RetrievalOptions,
    #[serde(default)]
    pub seed: u64,
    /// Repair zero columns during IterNorm instead of failing.
    #[serde(default)]
    pub perturb_zeros: bool,
}

impl PipelineSettings {
    pub fn new(normalization: NormalizationMethod, alignment: AlignmentMethod) -> Self {
        PipelineSettings {
            normalization,
            alignment,
            criterion: RetrievalCriterion::csls(),
            retrieval: RetrievalOptions::default(),
            seed: 0,
            perturb_zeros: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePaths {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub train_dict: PathBuf,
    pub test_dict: PathBuf,
    #[serde(default)]
    pub valid_dict: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub settings: PipelineSettings,
    pub paths: PipelinePaths,
    /// Column label in result tables, e.g. the target language.
    #[serde(default)]
    pub tag: String,
    #[serde(default)]
    pub max_words: Option<usize>,
}

impl PipelineConfig {
    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Alignment-specific outputs worth recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlignmentDetails {
    Procrustes,
    Refine {
        dictionary_sizes: Vec<usize>,
        stopped_early: bool,
    },
    Rcsls {
        learning_rate: f64,
        epochs: usize,
        validation_accuracy: f64,
        loss_trace: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub evaluation: EvaluationReport,
    pub src_normalization: NormalizationReport,
    pub tgt_normalization: NormalizationReport,
    pub map: LinearMap,
    pub details: AlignmentDetails,
}

fn unit_for_rcsls(space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
    // RCSLS works on unit vectors; cosine retrieval is unaffected by this.
    length_normalize(space)
}

/// Fits `method` on already normalized spaces. RCSLS trains on
/// length-normalized copies when the inputs are not unit length.
pub fn align_spaces(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    train: &SeedDictionary,
    valid: Option<&SeedDictionary>,
    method: &AlignmentMethod,
    seed: u64,
) -> Result<(LinearMap, AlignmentDetails)> {
    Ok(match method {
        AlignmentMethod::Procrustes => (procrustes_fit(src, tgt, train)?, AlignmentDetails::Procrustes),
        AlignmentMethod::ProcrustesRefine(cfg) => {
            let out = refine(src, tgt, train, cfg)?;
            (
                out.map,
                AlignmentDetails::Refine {
                    dictionary_sizes: out.dictionary_sizes,
                    stopped_early: out.stopped_early,
                },
            )
        }
        AlignmentMethod::Rcsls(cfg) => {
            let cfg = crate::align::RcslsConfig { seed, ..cfg.clone() };
            let train_src = unit_for_rcsls(src)?;
            let train_tgt = unit_for_rcsls(tgt)?;
            let out = rcsls_train(&train_src, &train_tgt, train, valid, &cfg)?;
            (
                out.map,
                AlignmentDetails::Rcsls {
                    learning_rate: out.learning_rate,
                    epochs: out.epochs,
                    validation_accuracy: out.validation_accuracy,
                    loss_trace: out.loss_trace,
                },
            )
        }
    })
}

/// Runs normalize → align → evaluate on spaces already in memory.
pub fn run_in_memory(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    train: &SeedDictionary,
    test: &MultiDictionary,
    valid: Option<&SeedDictionary>,
    settings: &PipelineSettings,
) -> Result<PipelineResult> {
    let perturb = settings.perturb_zeros.then_some(settings.seed);
    let (src_n, src_report) =
        normalize(src, settings.normalization, perturb).map_err(Error::stage("normalize source"))?;
    let (tgt_n, tgt_report) =
        normalize(tgt, settings.normalization, perturb).map_err(Error::stage("normalize target"))?;

    let (map, details) = align_spaces(&src_n, &tgt_n, train, valid, &settings.alignment, settings.seed)
        .map_err(Error::stage("align"))?;

    let evaluation = evaluate_p1(&map, &src_n, &tgt_n, test, settings.criterion, settings.retrieval)
        .map_err(Error::stage("evaluate"))?;
    Ok(PipelineResult {
        evaluation,
        src_normalization: src_report,
        tgt_normalization: tgt_report,
        map,
        details,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub map: PathBuf,
    pub evaluation: PathBuf,
    pub normalization: PathBuf,
}

/// Everything needed to re-run and tabulate one pipeline execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tag: String,
    pub method: String,
    pub normalization: String,
    pub accuracy: f64,
    pub correct: usize,
    pub total_queries: usize,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub timestamp: String,
    pub config: PipelineConfig,
    pub details: AlignmentDetails,
    pub dictionary: DictionaryStats,
    pub artifacts: Artifacts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryStats {
    pub train_pairs: usize,
    pub train_skipped: usize,
    pub test_queries: usize,
    pub test_skipped: usize,
}

#[derive(Serialize)]
struct NormalizationArtifact<'a> {
    source: &'a NormalizationReport,
    target: &'a NormalizationReport,
}

pub const RUN_RECORD_FILE: &str = "run.json";

/// Tracks written files so a failed run leaves nothing behind.
struct ArtifactGuard {
    written: Vec<PathBuf>,
    committed: bool,
}

impl ArtifactGuard {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

impl Drop for ArtifactGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Spaces and dictionaries read from the paths of a [`PipelineConfig`].
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub src: EmbeddingSpace,
    pub tgt: EmbeddingSpace,
    pub train: LoadedDictionary,
    pub test: LoadedDictionary,
    pub valid: Option<SeedDictionary>,
}

pub fn load_inputs(paths: &PipelinePaths, max_words: Option<usize>) -> Result<PipelineInputs> {
    let opts = ReadOptions { max_words };
    let load = || Error::stage("load");
    let src = read_vec_file(&paths.src, opts).map_err(load())?;
    let tgt = read_vec_file(&paths.tgt, opts).map_err(load())?;
    let train = load_dictionary_file(&paths.train_dict, &src, &tgt).map_err(load())?;
    let test = load_dictionary_file(&paths.test_dict, &src, &tgt).map_err(load())?;
    let valid = match &paths.valid_dict {
        Some(p) => Some(load_dictionary_file(p, &src, &tgt).map_err(load())?.seed),
        None => None,
    };
    info!(
        "loaded {} source / {} target words; {} train pairs ({} skipped), {} test queries ({} skipped)",
        src.len(),
        tgt.len(),
        train.seed.len(),
        train.skipped,
        test.multi.len(),
        test.skipped
    );
    Ok(PipelineInputs {
        src,
        tgt,
        train,
        test,
        valid,
    })
}

/// Loads inputs from disk, runs the pipeline and writes the map, reports
/// and a `run.json` record into `out_dir`. On failure every file written by
/// this run is removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(PipelineResult, RunRecord)> {
    cfg.settings.normalization.validate()?;
    cfg.settings.criterion.validate()?;
    let inputs = load_inputs(&cfg.paths, cfg.max_words)?;
    run_loaded(cfg, &inputs)
}

/// Like [`run_pipeline`] with inputs already loaded from `cfg.paths`.
pub fn run_loaded(cfg: &PipelineConfig, inputs: &PipelineInputs) -> Result<(PipelineResult, RunRecord)> {
    let settings = &cfg.settings;
    let PipelineInputs {
        src,
        tgt,
        train,
        test,
        valid,
    } = inputs;
    let result = run_in_memory(src, tgt, &train.seed, &test.multi, valid.as_ref(), settings)?;

    fs::create_dir_all(&cfg.paths.out_dir)?;
    let out = &cfg.paths.out_dir;
    let artifacts = Artifacts {
        map: out.join("map.txt"),
        evaluation: out.join("evaluation.json"),
        normalization: out.join("normalization.json"),
    };
    let mut guard = ArtifactGuard {
        written: Vec::new(),
        committed: false,
    };
    let mut map_bytes = Vec::new();
    crate::map::write_map(&result.map, &mut map_bytes)?;
    guard.write(artifacts.map.clone(), &map_bytes)?;
    guard.write(artifacts.evaluation.clone(), &to_json(&result.evaluation)?)?;
    guard.write(
        artifacts.normalization.clone(),
        &to_json(&NormalizationArtifact {
            source: &result.src_normalization,
            target: &result.tgt_normalization,
        })?,
    )?;

    let record = RunRecord {
        tag: cfg.tag.clone(),
        method: settings.alignment.label().to_string(),
        normalization: settings.normalization.label().to_string(),
        accuracy: result.evaluation.accuracy,
        correct: result.evaluation.correct,
        total_queries: result.evaluation.total_queries,
        seed: settings.seed,
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config: cfg.clone(),
        details: result.details.clone(),
        dictionary: DictionaryStats {
            train_pairs: train.seed.len(),
            train_skipped: train.skipped,
            test_queries: test.multi.len(),
            test_skipped: test.skipped,
        },
        artifacts,
    };
    guard.write(out.join(RUN_RECORD_FILE), &to_json(&record)?)?;
    guard.committed = true;
    Ok((result, record))
}

pub fn read_run_record(path: impl AsRef<Path>) -> Result<RunRecord> {
    let path = path.as_ref();
    let parse = || -> Result<RunRecord> { Ok(serde_json::from_slice(&fs::read(path)?)?) };
    parse().map_err(Error::in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_synthetic, SyntheticSpec};

    #[test]
    fn identical_spaces_score_perfectly() {
        let world = generate_synthetic(&SyntheticSpec::isomorphic(200, 8, 0.0, 1)).unwrap();
        let dict = SeedDictionary::from_iter((0..200).map(|i| (i, i)));
        let settings = PipelineSettings::new(NormalizationMethod::None, AlignmentMethod::Procrustes);
        let out = run_in_memory(&world.src, &world.src, &dict, &dict.to_multi(), None, &settings).unwrap();
        assert_eq!(out.evaluation.accuracy, 1.0);
    }

    fn write_world(dir: &Path) -> PipelinePaths {
        let world = generate_synthetic(&SyntheticSpec::non_isomorphic(300, 10, 0.01, 4)).unwrap();
        let files = world.write_to_dir(dir).unwrap();
        PipelinePaths {
            src: files.src,
            tgt: files.tgt,
            train_dict: files.train_dict,
            test_dict: files.test_dict,
            valid_dict: None,
            out_dir: dir.join("run"),
        }
    }

    #[test]
    fn file_run_writes_artifacts_and_record() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            settings: PipelineSettings::new(NormalizationMethod::iternorm(), AlignmentMethod::Procrustes),
            paths: write_world(dir.path()),
            tag: "syn".into(),
            max_words: None,
        };
        let (result, record) = run_pipeline(&cfg).unwrap();
        assert_eq!(record.accuracy, result.evaluation.accuracy);
        assert_eq!(record.normalization, "IN");
        for p in [
            &record.artifacts.map,
            &record.artifacts.evaluation,
            &record.artifacts.normalization,
        ] {
            assert!(p.exists(), "{p:?}");
        }
        let reread = read_run_record(cfg.paths.out_dir.join(RUN_RECORD_FILE)).unwrap();
        assert_eq!(reread, record);
        assert_eq!(crate::map::read_map_file(&record.artifacts.map).unwrap(), result.map);
    }

    #[test]
    fn failed_run_leaves_no_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = write_world(dir.path());
        fs::write(&paths.test_dict, "nothing matches\n").unwrap();
        paths.out_dir = dir.path().join("failed");
        let cfg = PipelineConfig {
            settings: PipelineSettings::new(NormalizationMethod::None, AlignmentMethod::Procrustes),
            paths,
            tag: String::new(),
            max_words: None,
        };
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "evaluate", .. }), "{err}");
        assert!(!cfg.paths.out_dir.join(RUN_RECORD_FILE).exists());
        assert!(!cfg.paths.out_dir.join("map.txt").exists());
    }
}
