//! The bundled iris table: 150 rows in a fixed shuffled order, four
//! measurements and a species code (1 setosa, 2 versicolor, 3 virginica).

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const IRIS_CSV: &str = include_str!("../../data/iris.csv");
pub const IRIS_SHA256: &str = "c373a9c8310e8228225765b6c3a0f9c47f5887d0dc05f97a2ebde2f174cffbed";
pub const IRIS_ROWS: usize = 150;
pub const IRIS_HEADER: &str = "sepal_length,sepal_width,petal_length,petal_width,species";

#[derive(Debug, Clone, PartialEq)]
pub struct IrisTable {
    /// 150 x 4.
    pub features: Matrix,
    /// Values in {1, 2, 3}.
    pub species: Vec<u8>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The copy compiled into the library.
pub fn bundled_iris() -> Result<IrisTable> {
    parse_iris(IRIS_CSV.as_bytes(), "<bundled iris.csv>")
}

/// Loads an iris file, which must be byte-identical to the bundled one.
pub fn load_iris(path: impl AsRef<Path>) -> Result<IrisTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    parse_iris(&bytes, &path.display().to_string())
}

fn parse_iris(bytes: &[u8], origin: &str) -> Result<IrisTable> {
    let actual = sha256_hex(bytes);
    if actual != IRIS_SHA256 {
        return Err(Error::Checksum { path: origin.to_owned(), expected: IRIS_SHA256.to_owned(), actual });
    }
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == IRIS_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: "unexpected iris header".into() }),
    }
    let mut features = Vec::with_capacity(IRIS_ROWS * 4);
    let mut species = Vec::with_capacity(IRIS_ROWS);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
        }
        for f in &fields[..4] {
            features.push(f.parse::<f64>().map_err(|e| parse_err(format!("{f:?}: {e}")))?);
        }
        let s: u8 = fields[4].parse().map_err(|e| parse_err(format!("{:?}: {e}", fields[4])))?;
        if !(1..=3).contains(&s) {
            return Err(parse_err(format!("species code {s} outside 1..=3")));
        }
        species.push(s);
    }
    if species.len() != IRIS_ROWS {
        return Err(Error::Parse { line: 0, msg: format!("expected {IRIS_ROWS} rows, found {}", species.len()) });
    }
    Ok(IrisTable { features: Matrix::from_row_major(IRIS_ROWS, 4, features)?, species })
}
