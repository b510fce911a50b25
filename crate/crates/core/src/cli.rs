//! The `xlign` command line.
//!
//! Every subcommand is a thin layer over the library. A `--config` TOML file
//! supplies default flag values: top-level keys apply to any subcommand that
//! has a flag of that name, and a `[subcommand]` table overrides them for
//! one subcommand. Flags given on the command line always win.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::align::{AlignmentMethod, RcslsConfig, RefineConfig};
use crate::embeddings::{load_dictionary_file, read_vec_file, write_vec_file, EmbeddingSpace, ReadOptions};
use crate::error::{Error, Result};
use crate::map::{read_map_file, write_map_file};
use crate::normalize::{normalize, NormalizationMethod};
use crate::pipeline::{
    align_spaces, load_inputs, read_run_record, run_loaded, PipelineConfig, PipelinePaths, PipelineSettings, RunRecord,
    RUN_RECORD_FILE,
};
use crate::retrieval::{
    evaluate_p1, nearest_neighbors, neighborhood_report, read_similarity_file, spearman_wordsim, translate_topk,
    RetrievalCriterion, RetrievalOptions, DEFAULT_BLOCK_SIZE, DEFAULT_CSLS_KNN,
};
use crate::synthetic::{generate_synthetic, LengthScale, SyntheticSpec};
use crate::table::ResultTable;

#[derive(Debug, Parser)]
#[command(name = "xlign", version, about = "Cross-lingual word embedding alignment")]
pub struct Cli {
    /// TOML file with default flag values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    None,
    Cl,
    Iternorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Procrustes,
    ProcrustesRefine,
    Rcsls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Nn,
    Csls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Isomorphic,
    NonIsomorphic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
}

/// Normalization flags shared by several subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct NormFlags {
    /// IterNorm round budget.
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    /// Stop IterNorm early once both residuals are at most this.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    /// Nudge zero vectors by a tiny seeded perturbation instead of failing.
    #[arg(long)]
    pub perturb_zeros: bool,
}

impl NormFlags {
    fn method(&self, arg: NormArg) -> NormalizationMethod {
        match arg {
            NormArg::None => NormalizationMethod::None,
            NormArg::Cl => NormalizationMethod::CenterThenLength,
            NormArg::Iternorm => NormalizationMethod::IterNorm {
                rounds: self.rounds,
                tolerance: self.tolerance,
            },
        }
    }
}

/// Alignment hyper-parameters shared by `align` and `grid`.
#[derive(Debug, Clone, clap::Args)]
pub struct AlignFlags {
    /// Refinement iterations.
    #[arg(long, default_value_t = 5)]
    pub refine_steps: usize,
    /// Most frequent words per side searched for synthetic pairs.
    #[arg(long, default_value_t = 10_000)]
    pub refine_pool: usize,
    /// RCSLS learning rates to try.
    #[arg(long, value_delimiter = ',', default_value = "1,10,25,50")]
    pub rcsls_lr_grid: Vec<f64>,
    /// RCSLS epoch counts to try.
    #[arg(long, value_delimiter = ',', default_value = "10,20")]
    pub rcsls_epoch_grid: Vec<usize>,
    /// Most frequent words used as RCSLS negatives.
    #[arg(long, default_value_t = 50_000)]
    pub rcsls_pool: usize,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    /// Neighbors in CSLS penalties during fitting.
    #[arg(long, default_value_t = DEFAULT_CSLS_KNN)]
    pub knn: usize,
}

impl AlignFlags {
    fn method(&self, arg: MethodArg, seed: u64) -> AlignmentMethod {
        match arg {
            MethodArg::Procrustes => AlignmentMethod::Procrustes,
            MethodArg::ProcrustesRefine => AlignmentMethod::ProcrustesRefine(RefineConfig {
                steps: self.refine_steps,
                synthetic_pool: self.refine_pool,
                knn: self.knn,
                block_size: DEFAULT_BLOCK_SIZE,
            }),
            MethodArg::Rcsls => AlignmentMethod::Rcsls(RcslsConfig {
                learning_rates: self.rcsls_lr_grid.clone(),
                epoch_candidates: self.rcsls_epoch_grid.clone(),
                knn: self.knn,
                neighbor_pool: self.rcsls_pool,
                batch_size: self.batch_size,
                seed,
                ..RcslsConfig::default()
            }),
        }
    }
}

fn criterion(arg: CriterionArg, knn: usize) -> RetrievalCriterion {
    match arg {
        CriterionArg::Nn => RetrievalCriterion::NearestNeighbor,
        CriterionArg::Csls => RetrievalCriterion::Csls { knn },
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize an embedding file.
    Normalize {
        #[arg(long, value_enum, default_value_t = NormArg::Iternorm)]
        method: NormArg,
        #[command(flatten)]
        norm: NormFlags,
        /// Seed for --perturb-zeros.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read only the first N words.
        #[arg(long)]
        max_words: Option<usize>,
        /// Write the normalization report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Fit a linear map from a seed dictionary.
    Align {
        #[arg(long, value_enum, default_value_t = MethodArg::Procrustes)]
        method: MethodArg,
        #[arg(long)]
        train_dict: PathBuf,
        /// Validation pairs for RCSLS model selection.
        #[arg(long)]
        valid_dict: Option<PathBuf>,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        align: AlignFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_words: Option<usize>,
        /// Write alignment details (refinement sizes, chosen RCSLS settings) as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Translate source words with a fitted map.
    Translate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, value_enum, default_value_t = CriterionArg::Csls)]
        criterion: CriterionArg,
        #[arg(long, default_value_t = DEFAULT_CSLS_KNN)]
        knn: usize,
        #[arg(long, default_value_t = 1)]
        topk: usize,
        /// Read query words from standard input, one per line.
        #[arg(long)]
        stdin: bool,
        #[arg(long)]
        max_words: Option<usize>,
        #[arg(long)]
        json: bool,
        words: Vec<String>,
    },
    /// Top-1 translation accuracy on a test dictionary, as JSON.
    Evaluate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        test_dict: PathBuf,
        #[arg(long, value_enum, default_value_t = CriterionArg::Csls)]
        criterion: CriterionArg,
        #[arg(long, default_value_t = DEFAULT_CSLS_KNN)]
        knn: usize,
        /// Restrict CSLS penalties to the N most frequent words.
        #[arg(long)]
        penalty_pool: Option<usize>,
        #[arg(long)]
        max_words: Option<usize>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman correlation on word similarity datasets.
    Simsuite {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Normalize the space first.
        #[arg(long, value_enum, default_value_t = NormArg::None)]
        method: NormArg,
        #[command(flatten)]
        norm: NormFlags,
        #[arg(long)]
        max_words: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Nearest neighbors of a word, optionally side by side with a second space.
    Neighbors {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Second space for a before/after comparison.
        #[arg(long)]
        space_b: Option<PathBuf>,
        /// Word to look up in the second space (defaults to --word).
        #[arg(long)]
        word_b: Option<String>,
        #[arg(long)]
        max_words: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic bilingual world with a known rotation.
    Synth {
        #[arg(long, value_enum, default_value_t = Preset::Isomorphic)]
        preset: Preset,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Per-coordinate std of clean vectors (default 1/sqrt(d)).
        #[arg(long)]
        signal_std: Option<f64>,
        /// Norm of the source center offset.
        #[arg(long)]
        offset_norm: Option<f64>,
        /// Per-word length scales drawn from U[low, high].
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
        scale: Option<Vec<f64>>,
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run every normalization × method combination and print the table.
    Grid {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        train_dict: PathBuf,
        #[arg(long)]
        test_dict: PathBuf,
        #[arg(long)]
        valid_dict: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Column label, usually the target language.
        #[arg(long, default_value = "run")]
        tag: String,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "none,cl,iternorm")]
        normalizations: Vec<NormArg>,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "procrustes,procrustes-refine,rcsls"
        )]
        methods: Vec<MethodArg>,
        #[arg(long, value_enum, default_value_t = CriterionArg::Csls)]
        criterion: CriterionArg,
        #[command(flatten)]
        norm: NormFlags,
        #[command(flatten)]
        align: AlignFlags,
        #[arg(long)]
        penalty_pool: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_words: Option<usize>,
    },
    /// Tabulate run records (files or directories searched for run.json).
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print download commands for the public evaluation data.
    FetchInstructions {
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value = "en")]
        source: String,
        #[arg(long, value_delimiter = ',', default_value = "es,ja")]
        langs: Vec<String>,
    },
}

/// Parses arguments (after merging `--config`) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command, &mut io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Finds `--config`, reads it, and inserts `--key value` pairs right after
/// the subcommand for flags that are not already present.
pub fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut sub_pos = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub_pos.is_none() && !a.starts_with('-') {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub_pos) else {
        return Ok(args);
    };
    let sub = args[pos].to_string_lossy().into_owned();
    let text = fs::read_to_string(&path)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;

    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(&sub) else {
        return Ok(args);
    };
    let known: Vec<String> = sub_cmd
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();

    // Section values override top-level ones.
    let mut merged: Vec<(String, toml::Value)> = Vec::new();
    let mut put = |k: &str, v: &toml::Value| {
        let k = k.replace('_', "-");
        merged.retain(|(old, _)| *old != k);
        merged.push((k, v.clone()));
    };
    for (k, v) in &table {
        if !v.is_table() {
            put(k, v);
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(&sub) {
        for (k, v) in section {
            if !known.contains(&k.replace('_', "-")) {
                return Err(Error::InvalidArgument(format!("config [{sub}]: unknown key {k:?}")));
            }
            put(k, v);
        }
    }

    let present = |flag: &str| {
        let long = format!("--{flag}");
        let eq = format!("--{flag}=");
        args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == long || a.starts_with(&eq)
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in merged {
        if !known.contains(&k) || present(&k) {
            continue;
        }
        match v {
            toml::Value::Boolean(true) => extra.push(format!("--{k}").into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                extra.push(format!("--{k}={}", parts.join(",")).into());
            }
            other => extra.push(format!("--{k}={}", scalar(&other)?).into()),
        }
    }
    let mut out = args;
    let tail = out.split_off(pos + 1);
    out.extend(extra);
    out.extend(tail);
    Ok(out)
}

fn scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "config values must be scalars or lists of scalars, got {other}"
            )))
        }
    })
}

fn read_space(path: &Path, max_words: Option<usize>) -> Result<EmbeddingSpace> {
    read_vec_file(path, ReadOptions { max_words })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn print_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Runs one parsed command, writing results to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Normalize {
            method,
            norm,
            seed,
            max_words,
            report,
            input,
            output,
        } => {
            let space = read_space(&input, max_words)?;
            let m = norm.method(method);
            m.validate()?;
            let (normalized, rep) = normalize(&space, m, norm.perturb_zeros.then_some(seed))?;
            write_vec_file(&output, &normalized)?;
            if let Some(p) = report {
                write_json(&p, &rep)?;
            }
            let r = rep.final_residuals();
            writeln!(
                out,
                "{}: {} words, max length residual {:.3e}, mean norm {:.3e}",
                m.label(),
                normalized.len(),
                r.max_length_residual,
                r.mean_norm_residual
            )?;
        }
        Command::Align {
            method,
            train_dict,
            valid_dict,
            src,
            tgt,
            out: map_path,
            align,
            seed,
            max_words,
            report,
        } => {
            let src = read_space(&src, max_words)?;
            let tgt = read_space(&tgt, max_words)?;
            let train = load_dictionary_file(&train_dict, &src, &tgt)?;
            let valid = match valid_dict {
                Some(p) => Some(load_dictionary_file(&p, &src, &tgt)?.seed),
                None => None,
            };
            info!("{} training pairs ({} skipped)", train.seed.len(), train.skipped);
            let (map, details) = align_spaces(
                &src,
                &tgt,
                &train.seed,
                valid.as_ref(),
                &align.method(method, seed),
                seed,
            )?;
            write_map_file(&map_path, &map)?;
            if let Some(p) = report {
                write_json(&p, &details)?;
            }
            writeln!(
                out,
                "wrote {} (d = {}, orthogonality residual {:.3e})",
                map_path.display(),
                map.dim(),
                map.orthogonality_residual()
            )?;
        }
        Command::Translate {
            map,
            src,
            tgt,
            criterion: crit,
            knn,
            topk,
            stdin,
            max_words,
            json,
            mut words,
        } => {
            if stdin {
                for line in io::stdin().lock().lines() {
                    let line = line?;
                    let w = line.trim();
                    if !w.is_empty() {
                        words.push(w.to_string());
                    }
                }
            }
            if words.is_empty() {
                return Err(Error::InvalidArgument("no query words given".into()));
            }
            let map = read_map_file(&map)?;
            let src = read_space(&src, max_words)?;
            let tgt = read_space(&tgt, max_words)?;
            let queries = words
                .iter()
                .map(|w| src.index_of(w).ok_or_else(|| Error::OutOfVocabulary(w.clone())))
                .collect::<Result<Vec<_>>>()?;
            let ranked = translate_topk(
                &map,
                &src,
                &tgt,
                &queries,
                criterion(crit, knn),
                topk,
                RetrievalOptions::default(),
            )?;
            if json {
                let rows: Vec<serde_json::Value> = words
                    .iter()
                    .zip(&ranked)
                    .map(|(w, r)| {
                        let c: Vec<_> = r
                            .iter()
                            .map(|x| serde_json::json!({"word": tgt.word(x.target), "score": x.score}))
                            .collect();
                        serde_json::json!({"query": w, "translations": c})
                    })
                    .collect();
                print_json(out, &rows)?;
            } else {
                for (w, r) in words.iter().zip(&ranked) {
                    let cands: Vec<String> = r
                        .iter()
                        .map(|x| format!("{} ({:.4})", tgt.word(x.target), x.score))
                        .collect();
                    writeln!(out, "{w}\t{}", cands.join("\t"))?;
                }
            }
        }
        Command::Evaluate {
            map,
            src,
            tgt,
            test_dict,
            criterion: crit,
            knn,
            penalty_pool,
            max_words,
            out: report_path,
        } => {
            let map = read_map_file(&map)?;
            let src = read_space(&src, max_words)?;
            let tgt = read_space(&tgt, max_words)?;
            let test = load_dictionary_file(&test_dict, &src, &tgt)?;
            if test.skipped > 0 {
                warn!("{} test pairs skipped as out of vocabulary", test.skipped);
            }
            let opts = RetrievalOptions {
                penalty_pool,
                ..RetrievalOptions::default()
            };
            let report = evaluate_p1(&map, &src, &tgt, &test.multi, criterion(crit, knn), opts)?;
            match report_path {
                Some(p) => {
                    write_json(&p, &report)?;
                    writeln!(
                        out,
                        "P@1 {:.1} ({} / {})",
                        report.accuracy * 100.0,
                        report.correct,
                        report.total_queries
                    )?;
                }
                None => print_json(out, &report)?,
            }
        }
        Command::Simsuite {
            space,
            dataset,
            method,
            norm,
            max_words,
            json,
        } => {
            let space = read_space(&space, max_words)?;
            let m = norm.method(method);
            m.validate()?;
            let (space, _) = normalize(&space, m, None)?;
            let mut results = Vec::new();
            for path in &dataset {
                let data = read_similarity_file(path)?;
                let r = spearman_wordsim(&space, &data)?;
                results.push((path.display().to_string(), r));
            }
            if json {
                let rows: Vec<_> = results
                    .iter()
                    .map(|(p, r)| serde_json::json!({"dataset": p, "result": r}))
                    .collect();
                print_json(out, &rows)?;
            } else {
                for (p, r) in &results {
                    writeln!(
                        out,
                        "{p}\t{:.1}\t{} pairs ({} skipped)",
                        r.rho * 100.0,
                        r.covered_pairs,
                        r.skipped_pairs
                    )?;
                }
            }
        }
        Command::Neighbors {
            space,
            word,
            k,
            space_b,
            word_b,
            max_words,
            json,
        } => {
            let a = read_space(&space, max_words)?;
            match space_b {
                Some(pb) => {
                    let b = read_space(&pb, max_words)?;
                    let wb = word_b.unwrap_or_else(|| word.clone());
                    let rep = neighborhood_report(&a, &b, &word, &wb, k)?;
                    if json {
                        print_json(out, &rep)?;
                    } else {
                        write!(out, "{rep}")?;
                    }
                }
                None => {
                    let nb = nearest_neighbors(&a, &word, k)?;
                    if json {
                        print_json(out, &nb)?;
                    } else {
                        for n in &nb {
                            writeln!(out, "{}\t{:.4}", n.word, n.cosine)?;
                        }
                    }
                }
            }
        }
        Command::Synth {
            preset,
            n,
            d,
            noise,
            signal_std,
            offset_norm,
            scale,
            train,
            test,
            seed,
            out_dir,
        } => {
            let mut spec = match preset {
                Preset::Isomorphic => SyntheticSpec::isomorphic(n, d, noise, seed),
                Preset::NonIsomorphic => SyntheticSpec::non_isomorphic(n, d, noise, seed),
            };
            if let Some(s) = signal_std {
                spec.signal_std = s;
            }
            if let Some(norm) = offset_norm {
                spec = spec.with_offset_norm(norm);
            }
            if let Some(s) = scale {
                spec.length_scale = LengthScale::Uniform { low: s[0], high: s[1] };
            }
            spec.train_size = train.unwrap_or(spec.train_size);
            spec.test_size = test.unwrap_or(spec.test_size);
            let world = generate_synthetic(&spec)?;
            let files = world.write_to_dir(&out_dir)?;
            write_json(&out_dir.join("spec.json"), &spec)?;
            writeln!(
                out,
                "wrote {} words (d = {}), {} train / {} test pairs to {}",
                n,
                d,
                world.train.len(),
                world.test.len(),
                out_dir.display()
            )?;
            info!("files: {files:?}");
        }
        Command::Grid {
            src,
            tgt,
            train_dict,
            test_dict,
            valid_dict,
            out_dir,
            tag,
            normalizations,
            methods,
            criterion: crit,
            norm,
            align,
            penalty_pool,
            seed,
            max_words,
        } => {
            let base = PipelinePaths {
                src,
                tgt,
                train_dict,
                test_dict,
                valid_dict,
                out_dir: out_dir.clone(),
            };
            let inputs = load_inputs(&base, max_words)?;
            let mut records = Vec::new();
            for &m in &methods {
                for &nm in &normalizations {
                    let method = align.method(m, seed);
                    let normalization = norm.method(nm);
                    let cell = format!(
                        "{}-{}",
                        m.to_possible_value().unwrap().get_name(),
                        nm.to_possible_value().unwrap().get_name()
                    );
                    let cfg = PipelineConfig {
                        settings: PipelineSettings {
                            normalization,
                            alignment: method,
                            criterion: criterion(crit, align.knn),
                            retrieval: RetrievalOptions {
                                penalty_pool,
                                ..RetrievalOptions::default()
                            },
                            seed,
                            perturb_zeros: norm.perturb_zeros,
                        },
                        paths: PipelinePaths {
                            out_dir: out_dir.join(&cell),
                            ..base.clone()
                        },
                        tag: tag.clone(),
                        max_words,
                    };
                    info!("running {cell}");
                    let (_, record) = run_loaded(&cfg, &inputs)?;
                    records.push(record);
                }
            }
            let table = ResultTable::from_records(&records)?;
            fs::write(out_dir.join("table.csv"), table.to_csv()?)?;
            write!(out, "{}", table.to_text())?;
        }
        Command::Report { records, format, csv } => {
            let mut loaded = Vec::new();
            for p in &records {
                collect_records(p, &mut loaded)?;
            }
            if loaded.is_empty() {
                return Err(Error::InvalidArgument("no run records found".into()));
            }
            let table = ResultTable::from_records(&loaded)?;
            if let Some(p) = csv {
                fs::write(p, table.to_csv()?)?;
            }
            match format {
                TableFormat::Text => write!(out, "{}", table.to_text())?,
                TableFormat::Csv => write!(out, "{}", table.to_csv()?)?,
            }
        }
        Command::FetchInstructions {
            data_dir,
            source,
            langs,
        } => {
            write!(out, "{}", fetch_instructions(&data_dir, &source, &langs))?;
        }
    }
    Ok(())
}

fn collect_records(path: &Path, acc: &mut Vec<RunRecord>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        entries.sort();
        for e in entries {
            if e.is_dir() {
                collect_records(&e, acc)?;
            } else if e.file_name().is_some_and(|n| n == RUN_RECORD_FILE) {
                acc.push(read_run_record(&e)?);
            }
        }
        Ok(())
    } else {
        acc.push(read_run_record(path)?);
        Ok(())
    }
}

const FASTTEXT_BASE: &str = "https://dl.fbaipublicfiles.com/fasttext/vectors-wiki";
const MUSE_BASE: &str = "https://dl.fbaipublicfiles.com/arrival";

/// Shell commands that download the public vectors and dictionaries. They
/// are printed, never run.
pub fn fetch_instructions(data_dir: &Path, source: &str, langs: &[String]) -> String {
    let d = data_dir.display();
    let mut s = String::new();
    s.push_str("# Wikipedia fastText vectors (several GB each) and MUSE dictionaries.\n");
    s.push_str(&format!("mkdir -p {d}/vectors {d}/dictionaries {d}/monolingual\n"));
    let mut all = vec![source.to_string()];
    all.extend(langs.iter().filter(|l| l.as_str() != source).cloned());
    for l in &all {
        s.push_str(&format!(
            "curl -Lo {d}/vectors/wiki.{l}.vec {FASTTEXT_BASE}/wiki.{l}.vec\n"
        ));
    }
    for l in langs.iter().filter(|l| l.as_str() != source) {
        for split in ["0-5000", "5000-6500"] {
            s.push_str(&format!(
                "curl -Lo {d}/dictionaries/{source}-{l}.{split}.txt {MUSE_BASE}/dictionaries/{source}-{l}.{split}.txt\n"
            ));
        }
    }
    s.push_str(&format!(
        "curl -Lo {d}/monolingual/monolingual.tgz {MUSE_BASE}/monolingual.tgz && tar -xzf {d}/monolingual/monolingual.tgz -C {d}/monolingual\n"
    ));
    s.push_str(&format!(
        "# WS-353 ends up under {d}/monolingual/monolingual/{source}/ (EN_WS-353-ALL.txt).\n"
    ));
    s
}
