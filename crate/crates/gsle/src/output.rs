//! File formats: CSV tables with a `#` comment header carrying the master
//! seed and the resolved-config digest, snapshot files with grid metadata,
//! and the JSON error record.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gsle_core::bath::NoiseRealization;
use gsle_core::bohmian::{TrajectoryEnsemble, WeakValueField};
use gsle_core::classical::ClassicalEnsemble;
use gsle_core::evolver::{RecordRow, Snapshot};
use gsle_core::{Complex64, Grid, ObservableSet, WaveFunction};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiment::{Comparison, EnsembleSummary};

pub fn digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Shortest round-trip representation, so reruns are byte-identical and
/// readers recover the exact value.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub seed: u64,
    pub digest: String,
    /// Extra `# ` lines.
    pub notes: Vec<String>,
}

impl Header {
    pub fn new(seed: u64, digest: impl Into<String>) -> Self {
        Self { seed, digest: digest.into(), notes: Vec::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn write(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# config_sha256 = {}", self.digest)?;
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        Ok(())
    }
}

fn table(path: &Path, header: &Header, extra: &[(&str, String)], columns: &[&str]) -> io::Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    header.write(&mut w)?;
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    let mut c = csv::Writer::from_writer(w);
    c.write_record(columns)?;
    Ok(c)
}

fn finish(mut c: csv::Writer<BufWriter<File>>) -> io::Result<()> {
    c.flush()?;
    c.into_inner().map_err(|e| e.into_error())?.flush()
}

pub fn write_observables(path: &Path, header: &Header, rows: &[RecordRow]) -> io::Result<()> {
    let mut c = table(path, header, &[], &["t", "norm", "mean_x", "mean_p", "var_x", "energy", "W", "xi"])?;
    for r in rows {
        c.write_record([r.t, r.norm, r.mean_x, r.mean_p, r.var_x, r.energy, r.gauge, r.xi].map(num))?;
    }
    finish(c)
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("psi_{step}.csv"))
}

pub fn write_snapshot(dir: &Path, header: &Header, snap: &Snapshot) -> io::Result<()> {
    let g = snap.psi.grid();
    let meta = [
        ("step", snap.step.to_string()),
        ("t", num(snap.t)),
        ("x_min", num(g.x_min())),
        ("x_max", num(g.x_max())),
        ("n_points", g.n_points().to_string()),
    ];
    let mut c = table(&snapshot_path(dir, snap.step), header, &meta, &["x", "re", "im"])?;
    for (j, z) in snap.psi.values().iter().enumerate() {
        c.write_record([g.x(j), z.re, z.im].map(num))?;
    }
    finish(c)
}

fn bad(message: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, message.into())
}

/// Numeric rows of a comma-separated file. `#` lines and one leading
/// non-numeric header row are skipped.
pub fn read_table(path: &Path) -> io::Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(io::Error::other)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(io::Error::other)?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => {}
            Err(e) => return Err(bad(format!("{}: row {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

fn metadata(text: &str, key: &str) -> Option<String> {
    text.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
}

pub fn read_snapshot(path: &Path) -> io::Result<Snapshot> {
    let text = fs::read_to_string(path)?;
    let field = |key: &str| metadata(&text, key).ok_or_else(|| bad(format!("{}: missing `{key}`", path.display())));
    let float = |key: &str| field(key)?.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
    let int = |key: &str| field(key)?.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
    let grid = Grid::new(float("x_min")?, float("x_max")?, int("n_points")?).map_err(|e| bad(e.to_string()))?;
    let rows = read_table(path)?;
    if rows.len() != grid.n_points() || rows.iter().any(|r| r.len() != 3) {
        return Err(bad(format!("{}: expected {} rows of x, re, im", path.display(), grid.n_points())));
    }
    let values = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
    let psi = WaveFunction::new(grid, values).map_err(|e| bad(e.to_string()))?;
    Ok(Snapshot { step: int("step")?, t: float("t")?, psi })
}

/// All `psi_<step>.csv` files of a directory, ordered by step.
pub fn read_snapshots(dir: &Path) -> io::Result<Vec<Snapshot>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let step = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("psi_"))
            .and_then(|n| n.strip_suffix(".csv"))
            .and_then(|n| n.parse::<usize>().ok());
        if let Some(step) = step {
            found.push((step, path));
        }
    }
    found.sort();
    found.into_iter().map(|(_, p)| read_snapshot(&p)).collect()
}

pub fn write_trajectories(path: &Path, header: &Header, e: &TrajectoryEnsemble) -> io::Result<()> {
    let names: Vec<String> =
        std::iter::once("t".to_string()).chain((1..=e.n_trajectories()).map(|k| format!("x_{k}"))).collect();
    let cols: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut c = table(path, header, &[], &cols)?;
    for (i, t) in e.times.iter().enumerate() {
        c.write_record(std::iter::once(num(*t)).chain(e.at(i).iter().map(|x| num(*x))))?;
    }
    finish(c)
}

pub fn weak_values_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("weak_values_{step}.csv"))
}

/// Masked cells are written with empty value columns.
pub fn write_weak_values(path: &Path, header: &Header, w: &WeakValueField) -> io::Result<()> {
    let g = w.real_part.grid();
    let mut c = table(path, header, &[], &["x", "re_p", "im_p"])?;
    for j in 0..g.n_points() {
        if w.node_mask[j] {
            c.write_record([num(g.x(j)), String::new(), String::new()])?;
        } else {
            c.write_record([g.x(j), w.real_part.values()[j], w.imag_part.values()[j]].map(num))?;
        }
    }
    finish(c)
}

pub fn write_noise(path: &Path, header: &Header, noise: &NoiseRealization) -> io::Result<()> {
    let mut c = table(path, header, &[], &["t", "xi"])?;
    for (t, v) in noise.times.iter().zip(&noise.values) {
        c.write_record([*t, *v].map(num))?;
    }
    finish(c)
}

const MOMENT_COLUMNS: [&str; 7] = ["t", "mean_x", "stderr_x", "mean_p", "stderr_p", "var_x", "stderr_var_x"];

pub fn write_classical(path: &Path, header: &Header, e: &ClassicalEnsemble) -> io::Result<()> {
    let mut c = table(path, header, &[("n_particles", e.n_particles.to_string())], &MOMENT_COLUMNS)?;
    for i in 0..e.times.len() {
        c.write_record(
            [e.times[i], e.mean_x[i], e.stderr_x[i], e.mean_p[i], e.stderr_p[i], e.var_x[i], e.stderr_var_x[i]]
                .map(num),
        )?;
    }
    finish(c)
}

pub fn write_summary(path: &Path, header: &Header, s: &EnsembleSummary) -> io::Result<()> {
    let mut c = table(path, header, &[("members", s.members.to_string())], &MOMENT_COLUMNS)?;
    for i in 0..s.times.len() {
        c.write_record(
            [s.times[i], s.mean_x[i], s.stderr_x[i], s.mean_p[i], s.stderr_p[i], s.var_x[i], s.stderr_var_x[i]]
                .map(num),
        )?;
    }
    finish(c)
}

pub fn write_comparison(path: &Path, header: &Header, cmp: &Comparison) -> io::Result<()> {
    let meta = [
        ("score", num(cmp.score)),
        ("score_mean_x", num(cmp.score_mean_x)),
        ("score_var_x", num(cmp.score_var_x)),
        ("fraction_mean_x_within_3_stderr", num(cmp.fraction_mean_x_within)),
    ];
    let cols = [
        "t",
        "q_mean_x",
        "q_stderr_x",
        "cl_mean_x",
        "cl_stderr_x",
        "q_mean_p",
        "q_stderr_p",
        "cl_mean_p",
        "cl_stderr_p",
        "q_var_x",
        "q_stderr_var_x",
        "cl_var_x",
        "cl_stderr_var_x",
        "z_mean_x",
        "z_mean_p",
        "z_var_x",
    ];
    let mut c = table(path, header, &meta, &cols)?;
    for r in &cmp.rows {
        c.write_record(
            [
                r.t,
                r.quantum[0],
                r.quantum[1],
                r.classical[0],
                r.classical[1],
                r.quantum[2],
                r.quantum[3],
                r.classical[2],
                r.classical[3],
                r.quantum[4],
                r.quantum[5],
                r.classical[4],
                r.classical[5],
                r.z[0],
                r.z[1],
                r.z[2],
            ]
            .map(num),
        )?;
    }
    finish(c)
}

/// Machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last: Option<LastObservables>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LastObservables {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub energy: f64,
}

impl From<&ObservableSet> for LastObservables {
    fn from(o: &ObservableSet) -> Self {
        Self { norm: o.norm, mean_x: o.mean_x, mean_p: o.mean_p, var_x: o.var_x, energy: o.energy }
    }
}

pub fn write_error(dir: &Path, record: &ErrorRecord) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(record).map_err(io::Error::other)?;
    fs::write(dir.join("error.json"), text + "\n")
}

/// Rows of `t, max_abs_difference, weighted_rms_difference`.
pub fn write_gup_report(path: &Path, header: &Header, gup_alpha: f64, rows: &[[f64; 3]]) -> io::Result<()> {
    let mut c = table(path, header, &[("gup_alpha", num(gup_alpha))], &["t", "max_abs_difference", "weighted_rms_difference"])?;
    for r in rows {
        c.write_record(r.map(num))?;
    }
    finish(c)
}
