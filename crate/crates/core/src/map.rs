//! Linear cross-lingual maps and their text file format.
//!
//! A map file starts with `d orthogonal_flag` (`1` or `0`) followed by `d`
//! rows of `d` whitespace-separated floats, row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::orthogonality_residual;

/// Largest `‖WᵀW − I‖_F` accepted for a map tagged orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    orthogonal: bool,
    orthogonality_residual: f64,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, orthogonal: bool) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "map must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("map has non-finite entries".into()));
        }
        let residual = orthogonality_residual(&matrix);
        if orthogonal && !(residual <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "map tagged orthogonal has residual {residual:e}"
            )));
        }
        Ok(LinearMap {
            matrix,
            orthogonal,
            orthogonality_residual: residual,
        })
    }

    pub fn identity(d: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(d, d),
            orthogonal: true,
            orthogonality_residual: 0.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn orthogonality_residual(&self) -> f64 {
        self.orthogonality_residual
    }

    pub(crate) fn check_space(&self, space: &EmbeddingSpace, what: &'static str) -> Result<()> {
        if space.dim() != self.dim() {
            return Err(Error::DimMismatch {
                what,
                left: space.dim(),
                right: self.dim(),
            });
        }
        Ok(())
    }

    /// `W X` for the selected columns of `space`.
    pub fn apply_columns(&self, space: &EmbeddingSpace, indices: &[usize]) -> DMatrix<f64> {
        let cols: Vec<_> = indices.iter().map(|&i| space.column(i)).collect();
        if cols.is_empty() {
            return DMatrix::zeros(self.dim(), 0);
        }
        &self.matrix * DMatrix::from_columns(&cols)
    }

    /// `W X` for the first `count` columns of `space`.
    pub fn apply_prefix(&self, space: &EmbeddingSpace, count: usize) -> DMatrix<f64> {
        &self.matrix * space.matrix().columns(0, count.min(space.len()))
    }
}

pub fn write_map<W: Write>(map: &LinearMap, mut writer: W) -> Result<()> {
    writeln!(writer, "{} {}", map.dim(), u8::from(map.orthogonal))?;
    for row in map.matrix.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn parse_map<R: BufRead>(reader: R) -> Result<LinearMap> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::MalformedMap("missing header".into()))?;
    let mut parts = header.split_whitespace();
    let (Some(d), Some(flag), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::MalformedMap(format!("bad header {header:?}")));
    };
    let d: usize = d
        .parse()
        .map_err(|_| Error::MalformedMap(format!("bad dimension {d:?}")))?;
    let orthogonal = match flag {
        "1" | "true" => true,
        "0" | "false" => false,
        other => return Err(Error::MalformedMap(format!("bad orthogonal flag {other:?}"))),
    };
    let mut values = Vec::with_capacity(d * d);
    for row in 0..d {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::MalformedMap(format!("missing row {}", row + 1)))?;
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::MalformedMap(format!("bad value {tok:?} in row {}", row + 1)))?;
            values.push(v);
        }
        if values.len() - before != d {
            return Err(Error::MalformedMap(format!(
                "row {} has {} values, expected {d}",
                row + 1,
                values.len() - before
            )));
        }
    }
    LinearMap::new(DMatrix::from_row_slice(d, d, &values), orthogonal)
}

pub fn write_map_file(path: impl AsRef<Path>, map: &LinearMap) -> Result<()> {
    write_map(map, BufWriter::new(File::create(path)?))
}

pub fn read_map_file(path: impl AsRef<Path>) -> Result<LinearMap> {
    let path = path.as_ref();
    File::open(path)
        .map_err(Error::from)
        .and_then(|f| parse_map(BufReader::new(f)))
        .map_err(Error::in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_file_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let map = LinearMap::new(m, true).unwrap();
        let mut buf = Vec::new();
        write_map(&map, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2 1\n0 -1\n1 0\n");
        assert_eq!(parse_map(buf.as_slice()).unwrap(), map);
    }

    #[test]
    fn non_orthogonal_maps_keep_their_tag() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.0, 1.0]);
        let map = LinearMap::new(m.clone(), false).unwrap();
        assert!(!map.is_orthogonal());
        assert!(map.orthogonality_residual() > 1.0);
        assert!(LinearMap::new(m, true).is_err());
    }

    #[test]
    fn malformed_maps() {
        for text in [
            "",
            "2\n",
            "2 x\n1 0\n0 1\n",
            "2 0\n1 0\n",
            "2 0\n1 0 0\n0 1\n",
            "2 0\n1 a\n0 1\n",
        ] {
            assert!(parse_map(text.as_bytes()).is_err(), "{text:?}");
        }
    }
}
