//! File formats: CSV and whitespace `.dat` tables, JSON documents, PGM
//! rasters and two-column kernel profiles.
//!
//! Every table starts with `# config_sha256=<hex>`; JSON documents carry the
//! same hash as a field.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nlhom_core::GridFunction;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seconds since the epoch from `SOURCE_DATE_EPOCH`, or 0.
pub fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// A numeric table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(header: I) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let mut out = format!("# config_sha256={hash}\n{}\n", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Space-separated columns with a commented header, for plotting tools.
    pub fn to_dat(&self, hash: &str) -> String {
        let mut out = format!("# config_sha256={hash}\n# {}\n", self.header.join(" "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

/// `x1,...,xd,value,mask` rows for every grid node.
pub fn field_csv(u: &GridFunction, hash: &str) -> String {
    let grid = u.grid();
    let d = grid.dim();
    let mut out = format!("# config_sha256={hash}\n");
    let cols: Vec<String> = (1..=d).map(|a| format!("x{a}")).collect();
    let _ = writeln!(out, "{},value,mask", cols.join(","));
    for i in 0..grid.len() {
        let x = grid.node(i);
        for v in &x[..d] {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{}", u.values()[i], u.mask()[i] as u8);
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| IoError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Reads an `m × m` PGM (P2 or P5); nonzero pixels are inside. The first
/// image row is the top of the cell, so row `r` maps to axis-1 index `m−1−r`.
pub fn read_pgm_mask(path: &Path) -> Result<(usize, Vec<bool>), IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let mut pos = 0;
    let mut tokens = Vec::new();
    // magic, width, height, maxval
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format_err(path, format!("bad PGM header field `{s}`")));
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if w != h || w == 0 {
        return Err(format_err(path, format!("mask must be square, got {w}x{h}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("invalid maxval {maxval}")));
    }
    let pixels: Vec<usize> = match tokens[0].as_str() {
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            text.split_ascii_whitespace().map(num).collect::<Result<_, _>>()?
        }
        "P5" => {
            let data = &bytes[(pos + 1).min(bytes.len())..];
            if maxval < 256 {
                data.iter().map(|&b| b as usize).collect()
            } else {
                data.chunks_exact(2).map(|c| ((c[0] as usize) << 8) | c[1] as usize).collect()
            }
        }
        other => return Err(format_err(path, format!("unsupported PGM magic `{other}`"))),
    };
    if pixels.len() < w * h {
        return Err(format_err(path, format!("expected {} pixels, found {}", w * h, pixels.len())));
    }
    let m = w;
    let mut cells = vec![false; m * m];
    for r in 0..m {
        for c in 0..m {
            cells[c + (m - 1 - r) * m] = pixels[r * m + c] != 0;
        }
    }
    Ok((m, cells))
}

/// ASCII PGM of a 2d cell raster, in the orientation read by [`read_pgm_mask`].
pub fn pgm_mask(m: usize, cells: &[bool]) -> String {
    let mut out = format!("P2\n{m} {m}\n1\n");
    for r in 0..m {
        let row: Vec<&str> = (0..m).map(|c| if cells[c + (m - 1 - r) * m] { "1" } else { "0" }).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Two-column `t,phi0` CSV; `#` comments and a non-numeric header are skipped.
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let mut t = Vec::new();
    let mut phi = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(format_err(path, format!("line {}: expected two columns", n + 1)));
        }
        match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                phi.push(b);
            }
            _ if t.is_empty() => continue,
            _ => return Err(format_err(path, format!("line {}: non-numeric entry", n + 1))),
        }
    }
    Ok((t, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_dat_carry_hash() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![1.0, 0.1]);
        let csv = t.to_csv("abc");
        assert_eq!(csv, "# config_sha256=abc\na,b\n1,0.1\n");
        assert!(t.to_dat("abc").starts_with("# config_sha256=abc\n# a b\n"));
        assert_eq!(Table::new(["x"]).to_csv("h"), "# config_sha256=h\nx\n");
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cells: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
        let p = write_file(dir.path(), "k.pgm", &pgm_mask(4, &cells)).unwrap();
        assert_eq!(read_pgm_mask(&p).unwrap(), (4, cells));
    }

    #[test]
    fn binary_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = b"P5\n# comment\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 7]);
        let p = dir.path().join("b.pgm");
        std::fs::write(&p, bytes).unwrap();
        // top row (255, 0) is axis-1 index 1
        assert_eq!(read_pgm_mask(&p).unwrap(), (2, vec![false, true, true, false]));
    }

    #[test]
    fn profile_csv_skips_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "p.csv", "t,phi0\n# c\n0.5, 2\n1.0,1\n").unwrap();
        assert_eq!(read_profile_csv(&p).unwrap(), (vec![0.5, 1.0], vec![2.0, 1.0]));
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
