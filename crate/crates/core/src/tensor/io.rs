//! Matrix file formats.
//!
//! CSV layout: a literal `rows,cols` header line, a dimensions line, then one
//! comma-separated line per row. Binary layout: raw little-endian f64 values
//! in row-major order, with a JSON sidecar `<path>.json` holding
//! `{"rows": r, "cols": c}`. Both round-trip finite values bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

pub fn write_matrix_csv(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str("rows,cols\n");
    out.push_str(&format!("{},{}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix csv".into()))?;
    if header.trim() != "rows,cols" {
        return Err(Error::Parse(format!(
            "expected 'rows,cols' header, got '{header}'"
        )));
    }
    let dims = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dimensions line".into()))?;
    let mut parts = dims.split(',');
    let rows: usize = parse_field(parts.next(), "rows")?;
    let cols: usize = parse_field(parts.next(), "cols")?;
    let mut data = Vec::with_capacity(rows * cols);
    for (idx, line) in lines.enumerate() {
        if idx >= rows {
            return Err(Error::Parse(format!("more than {rows} data rows")));
        }
        let values: Vec<&str> = line.split(',').collect();
        if values.len() != cols {
            return Err(Error::Parse(format!(
                "row {idx} has {} values, expected {cols}",
                values.len()
            )));
        }
        for v in values {
            data.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value '{v}': {e}")))?,
            );
        }
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .ok_or_else(|| Error::Parse(format!("missing {name}")))?
        .trim()
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    rows: usize,
    cols: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

pub fn write_matrix_bin(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path)?;
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&buf)?;
    let sidecar = Sidecar {
        rows: m.rows(),
        cols: m.cols(),
    };
    fs::write(sidecar_path(path), serde_json::to_string(&sidecar)?)?;
    Ok(())
}

pub fn read_matrix_bin(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    let expected = sidecar.rows * sidecar.cols * 8;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "binary matrix has {} bytes, sidecar implies {expected}",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_row_major(sidecar.rows, sidecar.cols, data)
}

/// Reads either format, picking by the `.bin` extension.
pub fn read_matrix_auto(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_matrix_bin(path),
        _ => read_matrix_csv(path),
    }
}

/// Writes either format, picking by the `.bin` extension.
pub fn write_matrix_auto(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => write_matrix_bin(m, path),
        _ => write_matrix_csv(m, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::DenseVector;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut gen = rng::rng_for(seed, &[]);
        DenseMatrix::from_fn(rows, cols, |_, _| gen.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = random_matrix(5, 3, 21);
        write_matrix_csv(&m, &path).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bin_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = random_matrix(4, 6, 22);
        write_matrix_bin(&m, &path).unwrap();
        let back = read_matrix_bin(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let v = DenseVector::from_vec(vec![1.5, -2.25, 0.1]);
        write_matrix_csv(&v.to_column_matrix(), &path).unwrap();
        let back = read_matrix_csv(&path).unwrap().into_vector().unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn csv_rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "nope\n1,2\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
        std::fs::write(&path, "rows,cols\n2,2\n1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }

    #[test]
    fn auto_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let m = random_matrix(3, 3, 23);
        let c = dir.path().join("m.csv");
        let b = dir.path().join("m.bin");
        write_matrix_auto(&m, &c).unwrap();
        write_matrix_auto(&m, &b).unwrap();
        assert_eq!(read_matrix_auto(&c).unwrap(), m);
        assert_eq!(read_matrix_auto(&b).unwrap(), m);
    }
}
