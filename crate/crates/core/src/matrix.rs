//! Row-major helpers for the small dense matrices used throughout.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Flattens `rows` into a row-major buffer after checking the shape
/// (`n_rows` × `n_cols`) and that every entry is finite.
pub(crate) fn flatten<T: Scalar>(
    rows: Vec<Vec<T>>,
    n_rows: usize,
    n_cols: usize,
    what: &'static str,
) -> Result<Vec<T>> {
    if rows.len() != n_rows {
        return Err(Error::Dimension {
            what,
            expected: n_rows,
            got: rows.len(),
        });
    }
    let mut flat = Vec::with_capacity(n_rows * n_cols);
    for (r, row) in rows.into_iter().enumerate() {
        if row.len() != n_cols {
            return Err(Error::Dimension {
                what,
                expected: n_cols,
                got: row.len(),
            });
        }
        for (c, v) in row.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, row: r, col: c });
            }
            flat.push(v);
        }
    }
    Ok(flat)
}

pub(crate) fn to_rows<T: Copy>(flat: &[T], n_cols: usize) -> Vec<Vec<T>> {
    if n_cols == 0 {
        return Vec::new();
    }
    flat.chunks(n_cols).map(<[T]>::to_vec).collect()
}
