//! Dense MatrixMarket input and output.
//!
//! Reading accepts `array` and `coordinate` real files, including the
//! `symmetric` and `skew-symmetric` storage flags; duplicate coordinate
//! entries are summed. Writing always emits `coordinate general` with
//! shortest round-trip decimals, so a write followed by a read is exact.

use std::path::Path;

use lodo_core::Matrix;
use nalgebra_sparse::io::{load_coo_from_matrix_market_file, save_to_matrix_market_file};
use nalgebra_sparse::CooMatrix;

use crate::error::CliError;

pub fn load_matrix_market(path: &Path) -> Result<Matrix, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "matrix file {} does not exist",
            path.display()
        )));
    }
    let coo: CooMatrix<f64> =
        load_coo_from_matrix_market_file(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let dense = Matrix::from(&coo);
    if let Some(pos) = dense.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Config(format!(
            "{}: non-finite entry at ({}, {})",
            path.display(),
            pos % dense.nrows() + 1,
            pos / dense.nrows() + 1
        )));
    }
    Ok(dense)
}

/// Writes the nonzero pattern of `m`; all-zero matrices keep their shape.
pub fn save_matrix_market(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let coo = CooMatrix::from(m);
    save_to_matrix_market_file(&coo, path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn scalar_array() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.mtx",
            "%%MatrixMarket matrix array real general\n1 1\n-1\n",
        );
        assert_eq!(load_matrix_market(&p).unwrap(), Matrix::from_element(1, 1, -1.0));
    }

    #[test]
    fn array_is_column_major() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.mtx",
            "%%MatrixMarket matrix array real general\n% c\n2 2\n1\n2\n3\n4\n",
        );
        let m = load_matrix_market(&p).unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
    }

    #[test]
    fn symmetric_coordinate_is_mirrored() {
        let dir = tempfile::tempdir().unwrap();
        let body = "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2.5\n2 1 -1\n3 2 0.5\n3 3 4\n";
        let m = load_matrix_market(&write(dir.path(), "s.mtx", body)).unwrap();
        let want = Matrix::from_row_slice(3, 3, &[2.5, -1.0, 0.0, -1.0, 0.0, 0.5, 0.0, 0.5, 4.0]);
        assert_eq!(m, want);
    }

    #[test]
    fn malformed_files_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad_header = write(
            dir.path(),
            "h.mtx",
            "%%MatrixMarket matrix nonsense real general\n1 1\n1\n",
        );
        let short = write(
            dir.path(),
            "s.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
        );
        let out_of_range = write(
            dir.path(),
            "r.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
        );
        for p in [&bad_header, &short, &out_of_range] {
            let err = load_matrix_market(p).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
            assert!(err.to_string().contains(&p.display().to_string()));
        }
        assert!(load_matrix_market(&dir.path().join("missing.mtx")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn write_read_round_trip(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(prop_oneof![Just(0.0), -1e300f64..1e300, -1.0f64..1.0, Just(f64::MIN_POSITIVE)], 36),
        ) {
            let m = Matrix::from_fn(rows, cols, |i, j| seed[i * 6 + j]);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.mtx");
            save_matrix_market(&p, &m).unwrap();
            let back = load_matrix_market(&p).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
