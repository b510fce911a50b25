//! Embedding spaces, the fastText `.vec` text format, and bilingual
//! dictionaries in the MUSE `src tgt` format.
//!
//! An [`EmbeddingSpace`] stores one column per word, so the matrix is
//! `d × n`. Word indices follow file order, which by convention is
//! frequency order (most frequent first).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    matrix: DMatrix<f64>,
}

impl EmbeddingSpace {
    /// Builds a space from a vocabulary and a `d × n` matrix, checking
    /// uniqueness, shape and finiteness.
    pub fn new(vocab: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if vocab.is_empty() || matrix.nrows() == 0 {
            return Err(Error::EmptyVocabulary);
        }
        if matrix.ncols() != vocab.len() {
            return Err(Error::ShapeMismatch {
                expected: vocab.len(),
                found: matrix.ncols(),
            });
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let col = pos / matrix.nrows();
            return Err(Error::Numerical(format!(
                "non-finite entry in column {col} ({:?})",
                vocab[col]
            )));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateWord(w.clone()));
            }
        }
        Ok(EmbeddingSpace { vocab, index, matrix })
    }

    /// Same vocabulary, new vectors.
    pub fn with_matrix(&self, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite entry in transformed matrix".into()));
        }
        Ok(EmbeddingSpace {
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            matrix,
        })
    }

    /// Replaces the vectors without re-validating; callers guarantee shape
    /// and finiteness.
    pub(crate) fn replace_matrix(&self, matrix: DMatrix<f64>) -> Self {
        debug_assert_eq!(matrix.ncols(), self.len());
        EmbeddingSpace {
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, index: usize) -> &str {
        &self.vocab[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, index: usize) -> DVectorView<'_, f64> {
        self.matrix.column(index)
    }

    /// Keeps the first `n` words (the `n` most frequent by convention).
    pub fn truncated(&self, n: usize) -> Self {
        if n >= self.len() {
            return self.clone();
        }
        let vocab: Vec<String> = self.vocab[..n].to_vec();
        let index = vocab.iter().cloned().zip(0..).collect();
        EmbeddingSpace {
            vocab,
            index,
            matrix: self.matrix.columns(0, n).into_owned(),
        }
    }
}

/// Load-time options for `.vec` files.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Keep only the first `max_words` distinct words.
    pub max_words: Option<usize>,
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let bad = |reason: &str| Error::MalformedHeader {
        line: 1,
        reason: reason.to_string(),
    };
    let line = line.trim_end_matches(['\n', '\r']);
    let mut parts = line.split(' ');
    let (n, d) = match (parts.next(), parts.next(), parts.next()) {
        (Some(n), Some(d), None) => (n, d),
        _ => return Err(bad("expected \"<words> <dim>\"")),
    };
    let n: usize = n.parse().map_err(|_| bad("word count is not an integer"))?;
    let d: usize = d.parse().map_err(|_| bad("dimension is not an integer"))?;
    if d == 0 {
        return Err(bad("dimension must be positive"));
    }
    Ok((n, d))
}

/// Reads a space in fastText `.vec` text format.
///
/// Later duplicates of a word are dropped with a warning. Values are widened
/// to `f64`.
pub fn parse_vec<R: BufRead>(mut reader: R, options: ReadOptions) -> Result<EmbeddingSpace> {
    let mut buf = Vec::new();
    if reader.read_until(b'\n', &mut buf)? == 0 {
        return Err(Error::MalformedHeader {
            line: 1,
            reason: "missing header".into(),
        });
    }
    let (n, d) = parse_header(&String::from_utf8_lossy(&buf))?;
    let limit = options.max_words.unwrap_or(usize::MAX).min(n);

    let mut vocab = Vec::with_capacity(limit.min(1 << 20));
    let mut seen = HashMap::with_capacity(limit.min(1 << 20));
    let mut values: Vec<f64> = Vec::with_capacity(limit.min(1 << 20) * d);
    let mut rows = 0usize;
    let mut line_no = 1usize;

    let mut eof = false;
    while vocab.len() < limit {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            eof = true;
            break;
        }
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        let mut tokens = line.split_ascii_whitespace();
        let Some(word) = tokens.next() else {
            continue;
        };
        rows += 1;
        let start = values.len();
        let mut found = 0usize;
        for tok in tokens {
            found += 1;
            if found > d {
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| Error::InvalidValue {
                line: line_no,
                value: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidValue {
                    line: line_no,
                    value: tok.to_string(),
                });
            }
            values.push(v);
        }
        if found != d {
            return Err(Error::DimensionMismatch {
                line: line_no,
                expected: d,
                found,
            });
        }
        if seen.contains_key(word) {
            warn!("dropping duplicate word {word:?} on line {line_no}");
            values.truncate(start);
            continue;
        }
        seen.insert(word.to_string(), vocab.len());
        vocab.push(word.to_string());
    }

    if options.max_words.is_none() || eof {
        // An untruncated read must consume exactly the rows the header declares.
        let trailing = !eof && has_content(&mut reader, &mut buf)?;
        if rows != n || trailing {
            let found = if trailing {
                format!("more than {rows}")
            } else {
                rows.to_string()
            };
            return Err(Error::MalformedHeader {
                line: 1,
                reason: format!("header declares {n} words but the file has {found}"),
            });
        }
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let matrix = DMatrix::from_vec(d, vocab.len(), values);
    Ok(EmbeddingSpace {
        index: seen,
        vocab,
        matrix,
    })
}

fn has_content<R: BufRead>(reader: &mut R, buf: &mut Vec<u8>) -> Result<bool> {
    loop {
        buf.clear();
        if reader.read_until(b'\n', buf)? == 0 {
            return Ok(false);
        }
        if !buf.iter().all(|b| b.is_ascii_whitespace()) {
            return Ok(true);
        }
    }
}

/// Writes a space in fastText `.vec` text format. Floats use the shortest
/// representation that round-trips exactly.
pub fn write_vec<W: Write>(space: &EmbeddingSpace, mut writer: W) -> Result<()> {
    if space.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    writeln!(writer, "{} {}", space.len(), space.dim())?;
    for (i, word) in space.vocab().iter().enumerate() {
        writer.write_all(word.as_bytes())?;
        for v in space.column(i).iter() {
            write!(writer, " {v}")?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_vec_file(path: impl AsRef<Path>, options: ReadOptions) -> Result<EmbeddingSpace> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(|f| parse_vec(BufReader::new(f), options))
        .map_err(Error::in_file(path))
}

pub fn write_vec_file(path: impl AsRef<Path>, space: &EmbeddingSpace) -> Result<()> {
    write_vec(space, BufWriter::new(File::create(path)?))
}

/// Ordered `(source index, target index)` translation pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedDictionary {
    pairs: Vec<(usize, usize)>,
}

impl SeedDictionary {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        SeedDictionary { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sorted, duplicate-free pairs; this is what the solvers consume.
    pub fn deduplicated(&self) -> Vec<(usize, usize)> {
        let mut pairs = self.pairs.clone();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn check_bounds(&self, n_src: usize, n_tgt: usize) -> Result<()> {
        for &(i, j) in &self.pairs {
            if i >= n_src {
                return Err(Error::IndexOutOfRange {
                    what: "source",
                    index: i,
                    len: n_src,
                });
            }
            if j >= n_tgt {
                return Err(Error::IndexOutOfRange {
                    what: "target",
                    index: j,
                    len: n_tgt,
                });
            }
        }
        Ok(())
    }

    /// Groups all targets per source word.
    pub fn to_multi(&self) -> MultiDictionary {
        let mut entries: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &(i, j) in &self.pairs {
            entries.entry(i).or_default().insert(j);
        }
        MultiDictionary { entries }
    }
}

impl FromIterator<(usize, usize)> for SeedDictionary {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        SeedDictionary::new(iter.into_iter().collect())
    }
}

/// Evaluation dictionary: each source word maps to every acceptable
/// translation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiDictionary {
    entries: BTreeMap<usize, BTreeSet<usize>>,
}

impl MultiDictionary {
    pub fn entries(&self) -> &BTreeMap<usize, BTreeSet<usize>> {
        &self.entries
    }

    pub fn targets(&self, source: usize) -> Option<&BTreeSet<usize>> {
        self.entries.get(&source)
    }

    /// Number of unique source words.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDictionary {
    pub seed: SeedDictionary,
    pub multi: MultiDictionary,
    /// Lines dropped because a word was missing from a vocabulary.
    pub skipped: usize,
}

/// Reads a MUSE-style dictionary (`source target` per line) against two
/// vocabularies. Out-of-vocabulary lines are counted, not rejected.
pub fn load_dictionary<R: BufRead>(reader: R, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<LoadedDictionary> {
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(s), Some(t)) = (tokens.next(), tokens.next()) else {
            return Err(Error::MalformedDictionaryLine { line: line_no + 1 });
        };
        match (src.index_of(s), tgt.index_of(t)) {
            (Some(i), Some(j)) => pairs.push((i, j)),
            _ => skipped += 1,
        }
    }
    let seed = SeedDictionary::new(pairs);
    let multi = seed.to_multi();
    Ok(LoadedDictionary { seed, multi, skipped })
}

pub fn load_dictionary_file(
    path: impl AsRef<Path>,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<LoadedDictionary> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(|f| load_dictionary(BufReader::new(f), src, tgt))
        .map_err(Error::in_file(path))
}

/// Writes pairs as `source_word target_word` lines.
pub fn write_dictionary<W: Write>(
    dict: &SeedDictionary,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    mut writer: W,
) -> Result<()> {
    dict.check_bounds(src.len(), tgt.len())?;
    for &(i, j) in dict.pairs() {
        writeln!(writer, "{} {}", src.word(i), tgt.word(j))?;
    }
    writer.flush()?;
    Ok(())
}
