//! Plain-text matrix, label and manifest files.
//!
//! Matrix file: first line `rows cols`, then `rows` lines of `cols`
//! whitespace-separated decimal numbers. Label file: one 0-based class id
//! per line. Manifest: `key = value` lines, `view = <path>` once per view in
//! order and an optional `labels = <path>`; `#` starts a comment and paths
//! are relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::MultiViewDataset;
use crate::error::{PsdmfError, Result};
use crate::numerics::Matrix;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PsdmfError + '_ {
    move |source| PsdmfError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> PsdmfError {
    PsdmfError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty matrix file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hline, "header must be `rows cols`"));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(path, hline, format!("bad dimension `{s}`")))
    };
    let rows = parse_dim(dims[0])?;
    let cols = parse_dim(dims[1])?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(path, hline, "matrix dimensions must be positive"));
    }

    let mut entries = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        if seen == rows {
            return Err(parse_err(
                path,
                lineno,
                format!("more than {rows} data rows"),
            ));
        }
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, format!("non-finite value `{tok}`")));
            }
            entries.push(v);
        }
        if entries.len() - before != cols {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {cols} values, found {}", entries.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_err(
            path,
            hline,
            format!("expected {rows} data rows, found {seen}"),
        ));
    }
    Matrix::from_vec(rows, cols, entries)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write_scalar(&mut out, *v);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

// Both forms print the shortest string that parses back to the same bits.
fn write_scalar(out: &mut String, v: f64) {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        let _ = write!(out, "{v:e}");
    } else {
        let _ = write!(out, "{v}");
    }
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, format!("bad label `{}`", l.trim())))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(io_err(path))
}

struct Manifest {
    views: Vec<PathBuf>,
    labels: Option<PathBuf>,
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut views = Vec::new();
    let mut labels = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, i + 1, "expected `key = value`"))?;
        let value = value.trim().trim_matches('"');
        let resolved = base.join(value);
        match key.trim() {
            "view" => views.push(resolved),
            "labels" => {
                if labels.replace(resolved).is_some() {
                    return Err(parse_err(path, i + 1, "duplicate `labels` entry"));
                }
            }
            "name" => {}
            other => return Err(parse_err(path, i + 1, format!("unknown key `{other}`"))),
        }
    }
    if views.is_empty() {
        return Err(parse_err(path, 1, "manifest lists no views"));
    }
    Ok(Manifest { views, labels })
}

/// Loads every view and the optional labels a manifest lists.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset> {
    let manifest = read_manifest(manifest_path)?;
    let views = manifest
        .views
        .iter()
        .map(|p| read_matrix(p))
        .collect::<Result<Vec<_>>>()?;
    let n = views[0].cols();
    for (p, v) in views.iter().enumerate().skip(1) {
        if v.cols() != n {
            return Err(PsdmfError::Dataset(format!(
                "view 0 ({}) has {n} samples but view {p} ({}) has {}",
                manifest.views[0].display(),
                manifest.views[p].display(),
                v.cols()
            )));
        }
    }
    let truth = match &manifest.labels {
        Some(p) => {
            let labels = read_labels(p)?;
            if labels.len() != n {
                return Err(PsdmfError::Dataset(format!(
                    "{} has {} labels but the views have {n} samples",
                    p.display(),
                    labels.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    MultiViewDataset::new(views, truth)
}

/// Writes `view<p>.txt`, `labels.txt` (when present) and `manifest.txt`
/// into `dir`; returns the manifest path.
pub fn save_dataset(dir: &Path, ds: &MultiViewDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::from("# multi-view dataset manifest\n");
    for (p, v) in ds.views.iter().enumerate() {
        let name = format!("view{p}.txt");
        write_matrix(&dir.join(&name), v)?;
        let _ = writeln!(manifest, "view = {name}");
    }
    if let Some(t) = &ds.truth {
        write_labels(&dir.join("labels.txt"), t)?;
        manifest.push_str("labels = labels.txt\n");
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_view_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "2 4\n1 2 3 4\n5 6 7 8\n").unwrap();
        fs::write(dir.path().join("b.txt"), "1 4\n0.5 -1e-3 2 3\n").unwrap();
        fs::write(dir.path().join("y.txt"), "0\n1\n1\n0\n").unwrap();
        fs::write(
            dir.path().join("m.txt"),
            "# demo\nview = a.txt\nview = b.txt\nlabels = y.txt\n",
        )
        .unwrap();
        let ds = load_dataset(&dir.path().join("m.txt")).unwrap();
        assert_eq!(ds.n_samples(), 4);
        assert_eq!(ds.view_dims(), vec![2, 1]);
        assert_eq!(ds.class_count, 2);
        assert_eq!(ds.views[1][(0, 1)], -1e-3);
    }

    #[test]
    fn mismatched_views_name_both() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "1 4\n1 2 3 4\n").unwrap();
        fs::write(dir.path().join("b.txt"), "1 5\n1 2 3 4 5\n").unwrap();
        fs::write(dir.path().join("m.txt"), "view = a.txt\nview = b.txt\n").unwrap();
        let msg = load_dataset(&dir.path().join("m.txt"))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("a.txt") && msg.contains("b.txt"), "{msg}");
    }

    #[test]
    fn malformed_files_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        fs::write(&p, "2 2\n1 2\n3 x\n").unwrap();
        match read_matrix(&p) {
            Err(PsdmfError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&p, "2 2\n1 2 3\n3 4\n").unwrap();
        assert!(matches!(
            read_matrix(&p),
            Err(PsdmfError::Parse { line: 2, .. })
        ));
        fs::write(&p, "2 2\n1 2\n").unwrap();
        assert!(read_matrix(&p).is_err());
        fs::write(&p, "1 1\nNaN\n").unwrap();
        assert!(read_matrix(&p).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let values = [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            0.0,
            -0.0,
            std::f64::consts::PI,
            123456.789,
        ];
        let m = Matrix::from_vec(2, 4, values.to_vec()).unwrap();
        let ds =
            MultiViewDataset::new(vec![m.clone(), m.scale(2.5)], Some(vec![0, 1, 2, 1])).unwrap();
        let manifest = save_dataset(dir.path(), &ds).unwrap();
        let back = load_dataset(&manifest).unwrap();
        for (a, b) in ds.views.iter().zip(&back.views) {
            let bits_a: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
        assert_eq!(back.truth, ds.truth);
    }
}
