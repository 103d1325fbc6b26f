//! Experiment orchestration: GSLE seed ensembles, classical ensembles,
//! quantum-classical comparison and Bohmian post-processing.

use std::fs;
use std::io;
use std::ops::Range;
use std::path::{Path, PathBuf};

use gsle_core::bohmian::{
    advance_trajectories, polar_decompose, sample_positions, weak_value, TrajectoryEnsemble,
};
use gsle_core::classical::{
    particle_chunks, record_times, simulate_chunk, ClassicalEnsemble, EnsembleAccumulator, LangevinConfig,
};
use gsle_core::coupling::CouplingFunction;
use gsle_core::evolver::{self, RunRecord, RunWarning, SimConfig, Snapshot};
use gsle_core::potentials::{gup_discrepancy, DampingSign, MeasurementSign};
use gsle_core::{ObservableSet, PhysicalParams};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{ConfigError, CouplingSection, Emit, ExperimentSpec, Mode};
use crate::output::{self, ErrorRecord, Header, LastObservables};

/// Trajectories advanced per parallel task.
const TRAJECTORY_CHUNK: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {message}")]
    Numerical { message: String, t: Option<f64>, last: Option<ObservableSet> },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl From<gsle_core::Error> for RunError {
    fn from(e: gsle_core::Error) -> Self {
        use gsle_core::Error as E;
        match e {
            E::NumericalBlowup { t, last } => {
                RunError::Numerical { message: format!("numerical blowup at t = {t}"), t: Some(t), last }
            }
            E::InvalidConfig(_)
            | E::InvalidGrid(_)
            | E::InvalidFriction(_)
            | E::InvalidResolution(_)
            | E::InvalidBath(_)
            | E::EmptyBath
            | E::InvalidSpline(_)
            | E::NonmonotonePotential { .. }
            | E::MemoryBudgetExceeded { .. } => RunError::Config(e.into()),
            other => RunError::Numerical { message: other.to_string(), t: None, last: None },
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::Numerical { .. } => 2,
            RunError::Io(_) => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, t, last) = match self {
            RunError::Config(_) => ("config", None, None),
            RunError::Numerical { t, last, .. } => ("numerical", *t, last.as_ref().map(LastObservables::from)),
            RunError::Io(_) => ("io", None, None),
        };
        ErrorRecord { kind, exit_code: self.exit_code(), message: self.to_string(), t, last }
    }
}

/// Seed of ensemble member `k`.
pub fn member_seed(master: u64, k: usize) -> u64 {
    master.wrapping_add(k as u64)
}

/// Runs `n` realizations concurrently; results are in member order.
pub fn run_members(sim: &SimConfig, n: usize) -> gsle_core::Result<Vec<RunRecord>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut c = sim.clone();
            c.seed = member_seed(sim.seed, k);
            evolver::run(&c)
        })
        .collect()
}

/// Per-time statistics over ensemble members. `var_x` is the total position
/// variance, mean packet width plus the spread of the packet centres.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub members: usize,
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub stderr_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub stderr_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub stderr_var_x: Vec<f64>,
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if n > 1.0 { values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt(), var)
}

impl EnsembleSummary {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let n_rows = records.iter().map(|r| r.rows.len()).min().unwrap_or(0);
        let mut s = Self {
            members: records.len(),
            times: Vec::with_capacity(n_rows),
            mean_x: Vec::with_capacity(n_rows),
            stderr_x: Vec::with_capacity(n_rows),
            mean_p: Vec::with_capacity(n_rows),
            stderr_p: Vec::with_capacity(n_rows),
            var_x: Vec::with_capacity(n_rows),
            stderr_var_x: Vec::with_capacity(n_rows),
        };
        for i in 0..n_rows {
            let rows = records.iter().map(move |r| &r.rows[i]);
            let (mx, sx, spread) = mean_and_stderr(rows.clone().map(|r| r.mean_x));
            let (mp, sp, _) = mean_and_stderr(rows.clone().map(|r| r.mean_p));
            let (width, sw, _) = mean_and_stderr(rows.clone().map(|r| r.var_x));
            s.times.push(records[0].rows[i].t);
            s.mean_x.push(mx);
            s.stderr_x.push(sx);
            s.mean_p.push(mp);
            s.stderr_p.push(sp);
            s.var_x.push(width + spread);
            s.stderr_var_x.push(sw);
        }
        s
    }
}

/// Classical ensemble with particle chunks simulated concurrently and merged
/// in chunk order.
pub fn classical_ensemble(config: &LangevinConfig, seed: u64) -> gsle_core::Result<ClassicalEnsemble> {
    config.validate()?;
    let chunks: Vec<Range<usize>> = particle_chunks(config.n_particles).collect();
    let parts: Vec<EnsembleAccumulator> =
        chunks.into_par_iter().map(|r| simulate_chunk(config, seed, r)).collect::<gsle_core::Result<_>>()?;
    let mut total = EnsembleAccumulator::new(config.record_steps().count());
    for p in &parts {
        total.merge(p);
    }
    Ok(ClassicalEnsemble::from_accumulator(&total, record_times(config)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    /// `[mean_x, stderr_x, mean_p, stderr_p, var_x, stderr_var_x]`.
    pub quantum: [f64; 6],
    pub classical: [f64; 6],
    /// `|quantum − classical| / combined stderr` for mean_x, mean_p, var_x.
    pub z: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Largest z of `mean_x` and `mean_p` over all rows.
    pub score: f64,
    pub score_mean_x: f64,
    /// Largest z of `var_x`; quantum widths keep their zero-point part, so
    /// this is reported but kept out of `score`.
    pub score_var_x: f64,
    /// Fraction of rows with `z[0] < 3`.
    pub fraction_mean_x_within: f64,
}

fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let d = (a - b).abs();
    let s = sa.hypot(sb);
    if s > 0.0 {
        d / s
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Matches classical record `i` with quantum row `i·stride`.
pub fn compare(quantum: &EnsembleSummary, classical: &ClassicalEnsemble, stride: usize) -> Comparison {
    let mut rows = Vec::new();
    for (i, &t) in classical.times.iter().enumerate() {
        let n = i * stride;
        if n >= quantum.times.len() {
            break;
        }
        let q = [
            quantum.mean_x[n],
            quantum.stderr_x[n],
            quantum.mean_p[n],
            quantum.stderr_p[n],
            quantum.var_x[n],
            quantum.stderr_var_x[n],
        ];
        let c = [
            classical.mean_x[i],
            classical.stderr_x[i],
            classical.mean_p[i],
            classical.stderr_p[i],
            classical.var_x[i],
            classical.stderr_var_x[i],
        ];
        let z = [z_score(q[0], q[1], c[0], c[1]), z_score(q[2], q[3], c[2], c[3]), z_score(q[4], q[5], c[4], c[5])];
        rows.push(ComparisonRow { t, quantum: q, classical: c, z });
    }
    let max_of = |k: usize| rows.iter().map(|r| r.z[k]).fold(0.0, f64::max);
    let (score_mean_x, score_var_x) = (max_of(0), max_of(2));
    let score = score_mean_x.max(max_of(1));
    let within = rows.iter().filter(|r| r.z[0] < 3.0).count();
    let fraction_mean_x_within = if rows.is_empty() { 0.0 } else { within as f64 / rows.len() as f64 };
    Comparison { rows, score, score_mean_x, score_var_x, fraction_mean_x_within }
}

/// Samples `count` starting points from the first snapshot and advances them
/// in parallel chunks.
pub fn trajectories(
    history: &[Snapshot],
    count: usize,
    seed: u64,
    params: &PhysicalParams,
) -> gsle_core::Result<TrajectoryEnsemble> {
    let first = history.first().ok_or(gsle_core::Error::InsufficientData("empty snapshot history"))?;
    if count == 0 {
        return Err(gsle_core::Error::InvalidConfig("trajectory count must be at least 1"));
    }
    let initial = sample_positions(&first.psi, count, seed)?;
    let parts: Vec<TrajectoryEnsemble> = initial
        .par_chunks(TRAJECTORY_CHUNK)
        .map(|chunk| advance_trajectories(history, chunk, params))
        .collect::<gsle_core::Result<_>>()?;
    TrajectoryEnsemble::concat(&parts)
}

fn write_weak_values(dir: &Path, header: &Header, history: &[Snapshot], params: &PhysicalParams) -> Result<(), RunError> {
    history.par_iter().try_for_each(|snap| -> Result<(), RunError> {
        let w = weak_value(&polar_decompose(&snap.psi, params)?, params)?;
        output::write_weak_values(&output::weak_values_path(dir, snap.step), header, &w)?;
        Ok(())
    })
}

/// Trajectories and weak values from a snapshot history.
pub fn bohmian_post(
    dir: &Path,
    header: &Header,
    history: &[Snapshot],
    params: &PhysicalParams,
    count: usize,
    seed: u64,
    emit_trajectories: bool,
    emit_weak_values: bool,
) -> Result<(), RunError> {
    if emit_trajectories {
        let e = trajectories(history, count, seed, params)?;
        output::write_trajectories(&dir.join("trajectories.csv"), header, &e)?;
    }
    if emit_weak_values {
        write_weak_values(dir, header, history, params)?;
    }
    Ok(())
}

/// What a finished experiment produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub output: PathBuf,
    pub warnings: Vec<String>,
    pub comparison: Option<Comparison>,
}

fn sign_notes(sim: &SimConfig) -> Vec<String> {
    let mut notes = vec![match sim.sign {
        DampingSign::Damping => "sign = damping".to_string(),
        DampingSign::Paper => {
            "sign = paper: literal sign of the dissipative potential, which anti-damps; `damping` reverses it"
                .to_string()
        }
    }];
    if sim.kappa > 0.0 {
        notes.push(match sim.measurement_sign {
            MeasurementSign::Localizing => "measurement_sign = localizing".to_string(),
            MeasurementSign::Paper => {
                "measurement_sign = paper: literal sign of the measurement term, which delocalizes".to_string()
            }
        });
    }
    notes
}

fn describe(w: &RunWarning) -> String {
    match w {
        RunWarning::BoundaryContamination { t, boundary_density } => {
            format!("warning: boundary density {} at t = {}", output::num(*boundary_density), output::num(*t))
        }
        RunWarning::StabilityGuard { t, ratio } => {
            format!("warning: dt*max|U|/hbar = {} at t = {}", output::num(*ratio), output::num(*t))
        }
    }
}

/// Executes the experiment and writes its files into `spec.document.output`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Outcome, RunError> {
    let workers = spec.document.workers;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Io(io::Error::other(e)))?;
    pool.install(|| execute(spec))
}

fn execute(spec: &ExperimentSpec) -> Result<Outcome, RunError> {
    let doc = &spec.document;
    let out = PathBuf::from(&doc.output);
    fs::create_dir_all(&out)?;
    match fs::remove_file(out.join("error.json")) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
        _ => {}
    }
    let echo = spec.echo();
    fs::write(out.join("resolved_config.txt"), &echo)?;
    let mut header = Header::new(doc.seed, spec.digest());
    header.notes = sign_notes(&spec.sim);
    let mut outcome = Outcome { output: out.clone(), ..Outcome::default() };
    info!("mode {:?}, output {}", doc.mode, out.display());

    match doc.mode {
        Mode::Gsle => {
            let records = run_members(&spec.sim, doc.ensemble_seeds)?;
            write_members(spec, &out, &header, &records, &mut outcome)?;
        }
        Mode::Classical => {
            let cl = spec.classical.as_ref().expect("validated");
            let e = classical_ensemble(cl, doc.seed)?;
            output::write_classical(&out.join("classical.csv"), &header, &e)?;
        }
        Mode::Compare => {
            let cl = spec.classical.as_ref().expect("validated");
            let records = run_members(&spec.sim, doc.ensemble_seeds)?;
            write_members(spec, &out, &header, &records, &mut outcome)?;
            let e = classical_ensemble(cl, doc.seed)?;
            output::write_classical(&out.join("classical.csv"), &header, &e)?;
            let cmp = compare(&EnsembleSummary::from_records(&records), &e, cl.record_stride);
            output::write_comparison(&out.join("comparison.csv"), &header, &cmp)?;
            info!("comparison score {:.3}, mean_x within 3 stderr at {:.3}", cmp.score, cmp.fraction_mean_x_within);
            outcome.comparison = Some(cmp);
        }
        Mode::BohmianPost => {
            let input = PathBuf::from(doc.trajectories.input.as_ref().expect("validated"));
            let snaps = input.join("snapshots");
            let source = if snaps.is_dir() { snaps } else { input };
            let history = output::read_snapshots(&source)?;
            if history.is_empty() {
                return Err(ConfigError::Invalid(format!("no snapshots in {}", source.display())).into());
            }
            bohmian_post(&out, &header, &history, &spec.sim.params, doc.trajectories.count, doc.seed, true, true)?;
        }
    }
    Ok(outcome)
}

fn write_members(
    spec: &ExperimentSpec,
    out: &Path,
    header: &Header,
    records: &[RunRecord],
    outcome: &mut Outcome,
) -> Result<(), RunError> {
    let doc = &spec.document;
    let single = records.len() == 1;
    for (k, record) in records.iter().enumerate() {
        let dir = if single { out.to_path_buf() } else { out.join(format!("member_{k}")) };
        let mut h = header.clone();
        if !single {
            h = h.with_note(format!("member_seed = {}", record.seed));
            let mut member = doc.clone();
            member.mode = Mode::Gsle;
            member.seed = record.seed;
            member.ensemble_seeds = 1;
            member.output = dir.to_string_lossy().into_owned();
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("resolved_config.txt"), crate::config::echo_document(&member))?;
        }
        for w in &record.warnings {
            let text = describe(w);
            warn!("{}{text}", if single { String::new() } else { format!("member {k}: ") });
            outcome.warnings.push(text.clone());
            h = h.with_note(text);
        }
        if spec.emits(Emit::Observables) {
            output::write_observables(&dir.join("observables.csv"), &h, &record.rows)?;
        }
        if spec.emits(Emit::Noise) {
            let mut c = spec.sim.clone();
            c.seed = record.seed;
            output::write_noise(&dir.join("noise.csv"), &h, &c.noise_realization()?)?;
        }
        if spec.emits(Emit::Snapshots) {
            let snaps = dir.join("snapshots");
            fs::create_dir_all(&snaps)?;
            for s in &record.snapshots {
                output::write_snapshot(&snaps, &h, s)?;
            }
        }
        bohmian_post(
            &dir,
            &h,
            &record.snapshots,
            &spec.sim.params,
            doc.trajectories.count,
            record.seed,
            spec.emits(Emit::Trajectories),
            spec.emits(Emit::WeakValues),
        )?;
        if matches!(doc.coupling, CouplingSection::Gup) && !record.snapshots.is_empty() {
            write_gup_report(&dir.join("gup_report.csv"), &h, spec, &record.snapshots)?;
        }
    }
    if !single {
        output::write_summary(&out.join("ensemble.csv"), header, &EnsembleSummary::from_records(records))?;
    }
    Ok(())
}

/// Closed-form versus generic damping potential for the induced coupling,
/// one row per snapshot.
fn write_gup_report(path: &Path, header: &Header, spec: &ExperimentSpec, history: &[Snapshot]) -> Result<(), RunError> {
    let sim = &spec.sim;
    debug_assert!(matches!(sim.coupling, CouplingFunction::Tabulated(_)));
    let rows: Vec<[f64; 3]> = history
        .par_iter()
        .map(|s| {
            let d = gup_discrepancy(&s.psi, &sim.potential, sim.friction, &sim.params)?;
            Ok([s.t, d.max_abs_difference, d.weighted_rms_difference])
        })
        .collect::<gsle_core::Result<_>>()?;
    output::write_gup_report(path, header, sim.friction, &rows)?;
    Ok(())
}
