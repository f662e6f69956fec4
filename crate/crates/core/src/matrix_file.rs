//! `DLSCL-BETA v1` correlation-matrix files.
//!
//! ```text
//! DLSCL-BETA v1 <N> <K> <c> <M>
//! <K+c floats, row 0>
//! ...
//! <K+c floats, row K+c-1>
//! ```
//!
//! Values are written in Rust's shortest round-trip decimal form, so a write
//! followed by a read restores the matrix bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flip::CorrelationMatrix;

pub const MAGIC: &str = "DLSCL-BETA";
pub const VERSION: &str = "v1";

/// Code and list parameters a matrix was trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaHeader {
    pub n_block: usize,
    pub n_info: usize,
    pub n_crc: usize,
    pub list_size: usize,
}

impl BetaHeader {
    pub fn size(&self) -> usize {
        self.n_info + self.n_crc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaFile {
    pub header: BetaHeader,
    pub matrix: CorrelationMatrix,
}

pub fn format_beta(header: &BetaHeader, matrix: &CorrelationMatrix) -> Result<String> {
    if header.size() != matrix.size() {
        return Err(Error::LengthMismatch {
            expected: header.size(),
            actual: matrix.size(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {VERSION} {} {} {} {}",
        header.n_block, header.n_info, header.n_crc, header.list_size
    );
    for i in 0..matrix.size() {
        let row: Vec<String> = matrix.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Parses a `DLSCL-BETA v1` file. `zero_threshold` is attached to the loaded matrix.
pub fn parse_beta(text: &str, zero_threshold: f64) -> Result<BetaFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(Error::Parse(format!("bad header '{head}'")));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad header field '{s}'")))
    };
    let header = BetaHeader {
        n_block: num(fields[2])?,
        n_info: num(fields[3])?,
        n_crc: num(fields[4])?,
        list_size: num(fields[5])?,
    };
    let size = header.size();
    let mut entries = Vec::with_capacity(size * size);
    let mut rows = 0;
    for line in lines {
        let row = parse_row(line)?;
        if row.len() != size {
            return Err(Error::Parse(format!(
                "row {rows} has {} values, expected {size}",
                row.len()
            )));
        }
        entries.extend(row);
        rows += 1;
    }
    if rows != size {
        return Err(Error::Parse(format!("found {rows} rows, expected {size}")));
    }
    let matrix = CorrelationMatrix::new(size, entries, zero_threshold)?;
    Ok(BetaFile { header, matrix })
}

/// Parses a bare square matrix (whitespace- or comma-separated rows, `#`
/// comments), as published alongside externally trained decoders.
pub fn parse_plain_matrix(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut entries = Vec::new();
    let mut size = None;
    let mut rows = 0;
    for line in text.lines() {
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let row = parse_row(content)?;
        match size {
            None => size = Some(row.len()),
            Some(s) if s != row.len() => {
                return Err(Error::Parse(format!(
                    "row {rows} has {} values, expected {s}",
                    row.len()
                )))
            }
            _ => {}
        }
        entries.extend(row);
        rows += 1;
    }
    let size = size.ok_or_else(|| Error::Parse("no matrix rows".into()))?;
    if rows != size {
        return Err(Error::Parse(format!("{rows} rows for {size} columns")));
    }
    Ok((size, entries))
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("'{t}' is not a number")))
        })
        .collect()
}

pub fn read_beta(path: &Path, zero_threshold: f64) -> Result<BetaFile> {
    parse_beta(&std::fs::read_to_string(path)?, zero_threshold)
}

pub fn write_beta(path: &Path, header: &BetaHeader, matrix: &CorrelationMatrix) -> Result<()> {
    std::fs::write(path, format_beta(header, matrix)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(size: usize) -> BetaHeader {
        BetaHeader {
            n_block: 16,
            n_info: size - 2,
            n_crc: 2,
            list_size: 4,
        }
    }

    #[test]
    fn header_and_layout() {
        let m = CorrelationMatrix::new(
            3,
            vec![1.0, 0.25, -0.5, 0.25, 1.0, 0.0, -0.5, 0.0, 1.0],
            0.0,
        )
        .unwrap();
        let text = format_beta(&header(3), &m).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("DLSCL-BETA v1 16 1 2 4"));
        assert_eq!(lines.next(), Some("1.0 0.25 -0.5"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_beta("", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v2 4 1 1 1\n1 0\n0 1\n", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v1 4 1 1 1\n1 0\n", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v1 4 1 1 1\n1 0.3\n0.1 1\n", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v1 4 1 1 1\n0.5 0\n0 1\n", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v1 4 1 1 1\n1 0 0\n0 1\n", 0.0).is_err());
        assert!(parse_beta("DLSCL-BETA v1 4 1 1 1\n1 x\n0 1\n", 0.0).is_err());
    }

    #[test]
    fn plain_matrix_import() {
        let (size, e) = parse_plain_matrix("# published\n1, 0.1\n0.1, 1\n").unwrap();
        assert_eq!(size, 2);
        assert_eq!(e, vec![1.0, 0.1, 0.1, 1.0]);
        assert!(parse_plain_matrix("1 0\n").is_err());
        assert!(parse_plain_matrix("1 0\n0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(vals in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let mut m = CorrelationMatrix::identity(5);
            let mut it = vals.iter();
            for i in 0..5 {
                for j in i + 1..5 {
                    m.set_pair(i, j, *it.next().unwrap());
                }
            }
            let text = format_beta(&header(5), &m).unwrap();
            let back = parse_beta(&text, 0.0).unwrap();
            prop_assert_eq!(back.header, header(5));
            prop_assert_eq!(back.matrix, m);
        }
    }
}
