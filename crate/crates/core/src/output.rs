//! File artifacts: field snapshots (CSV + binary PGM), diagnostics tables,
//! and content-digest manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::diagnostics::{DiagnosticsRecord, DiagnosticsRow};
use crate::error::OutputError;
use crate::grid::Field;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `bytes` to `path`, creating parent directories, and fsync.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(io_err(path))?;
    let file = w.into_inner().map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    file.sync_all().map_err(io_err(path))
}

/// `x,y,value` rows (or `x,value` in 1D) in node order, 17 significant digits.
pub fn snapshot_csv(field: &Field) -> String {
    let grid = field.grid();
    let mut out = String::with_capacity(field.len() * 72);
    out.push_str(if grid.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (k, v) in field.values().iter().enumerate() {
        let x = grid.coords(k);
        if grid.dim() == 1 {
            out.push_str(&format!("{:.16e},{v:.16e}\n", x[0]));
        } else {
            out.push_str(&format!("{:.16e},{:.16e},{v:.16e}\n", x[0], x[1]));
        }
    }
    out
}

/// Parse the value column of a snapshot CSV.
pub fn parse_snapshot_values(csv: &str) -> Option<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().and_then(|v| v.parse().ok()))
        .collect()
}

/// 8-bit binary graymap, one pixel per node, rows along x.
///
/// Values map affinely from `[min, max]` to `[0, 255]`; a constant field is
/// mid-gray 128.
pub fn snapshot_pgm(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let width = grid.nodes()[0];
    let height = grid.node_count() / width;
    let (lo, hi) = (field.min(), field.max());
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(field.values().iter().map(|&v| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            128
        }
    }));
    out
}

/// Append `.ext` without touching dots already in the stem.
fn with_suffix(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Write `<stem>.csv` and `<stem>.pgm`; returns both paths.
pub fn write_snapshot(field: &Field, stem: &Path) -> Result<[PathBuf; 2], OutputError> {
    let csv = with_suffix(stem, "csv");
    let pgm = with_suffix(stem, "pgm");
    write_file(&csv, snapshot_csv(field).as_bytes())?;
    write_file(&pgm, &snapshot_pgm(field))?;
    Ok([csv, pgm])
}

pub fn diagnostics_csv(record: &DiagnosticsRecord) -> String {
    let mut out = DiagnosticsRow::COLUMNS.join(",");
    out.push('\n');
    for row in &record.rows {
        out.push_str(&row.csv_fields().join(","));
        out.push('\n');
    }
    out
}

/// Files produced by one invocation, relative to `root`.
#[derive(Debug, Clone, Default)]
pub struct ArtifactSet {
    pub root: PathBuf,
    pub files: Vec<PathBuf>,
}

impl ArtifactSet {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ArtifactSet {
            root: root.into(),
            files: Vec::new(),
        }
    }

    /// Write `bytes` under `root/rel` and register the file.
    pub fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<(), OutputError> {
        let rel = rel.as_ref();
        write_file(&self.root.join(rel), bytes)?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    pub fn snapshot(&mut self, rel_stem: impl AsRef<Path>, field: &Field) -> Result<(), OutputError> {
        let rel = rel_stem.as_ref();
        self.write(with_suffix(rel, "csv"), snapshot_csv(field).as_bytes())?;
        self.write(with_suffix(rel, "pgm"), &snapshot_pgm(field))
    }

    pub fn extend(&mut self, other: ArtifactSet, prefix: &Path) {
        self.files.extend(other.files.into_iter().map(|f| prefix.join(f)));
    }

    /// `sha256  path` lines sorted by path.
    pub fn manifest(&self) -> Result<String, OutputError> {
        let mut files = self.files.clone();
        files.sort();
        files.dedup();
        let mut out = String::new();
        for rel in files {
            let path = self.root.join(&rel);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            out.push_str(&format!("{digest}  {}\n", rel.display()));
        }
        Ok(out)
    }

    /// Write `manifest.txt` at the root and return its contents.
    pub fn write_manifest(&self) -> Result<String, OutputError> {
        let text = self.manifest()?;
        write_file(&self.root.join("manifest.txt"), text.as_bytes())?;
        Ok(text)
    }
}

/// File stem for a snapshot of `name` at time `t`.
pub fn snapshot_stem(name: &str, t: f64) -> String {
    format!("{name}_t{t:.4}")
}
