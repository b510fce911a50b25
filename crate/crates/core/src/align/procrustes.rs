use nalgebra::DMatrix;

use crate::embeddings::{EmbeddingSpace, SeedDictionary};
use crate::error::{Error, Result};
use crate::linalg::polar_orthogonal;
use crate::map::LinearMap;

pub(crate) fn check_inputs(src: &EmbeddingSpace, tgt: &EmbeddingSpace, dict: &SeedDictionary) -> Result<()> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if src.dim() != tgt.dim() {
        return Err(Error::DimMismatch {
            what: "source vs target",
            left: src.dim(),
            right: tgt.dim(),
        });
    }
    dict.check_bounds(src.len(), tgt.len())
}

/// Orthogonal `W = U Vᵀ` from the SVD `U Σ Vᵀ = Z_D X_Dᵀ`; the global
/// minimizer of `Σ ‖W x_i − z_j‖²` over orthogonal maps. Duplicate pairs are
/// counted once and pair order does not matter.
pub fn procrustes_fit(src: &EmbeddingSpace, tgt: &EmbeddingSpace, dict: &SeedDictionary) -> Result<LinearMap> {
    check_inputs(src, tgt, dict)?;
    let pairs = dict.deduplicated();
    let d = src.dim();
    let mut cross = DMatrix::<f64>::zeros(d, d);
    // Accumulate in chunks so large dictionaries stay a few GEMMs.
    for chunk in pairs.chunks(4096) {
        let xs: Vec<_> = chunk.iter().map(|&(i, _)| src.column(i)).collect();
        let zs: Vec<_> = chunk.iter().map(|&(_, j)| tgt.column(j)).collect();
        let x = DMatrix::from_columns(&xs);
        let z = DMatrix::from_columns(&zs);
        cross += z * x.transpose();
    }
    let w = polar_orthogonal(&cross)?;
    LinearMap::new(w, true)
}

/// `Σ ‖W x_i − z_j‖²` over the unique dictionary pairs.
pub fn objective_value(
    map: &LinearMap,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    dict: &SeedDictionary,
) -> Result<f64> {
    check_inputs(src, tgt, dict)?;
    map.check_space(src, "source space")?;
    Ok(dict
        .deduplicated()
        .into_iter()
        .map(|(i, j)| (map.matrix() * src.column(i) - tgt.column(j)).norm_squared())
        .sum())
}
