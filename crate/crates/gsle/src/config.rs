//! Experiment configuration: the sectioned TOML document, its default table
//! and its translation into engine configurations.

use std::fs;
use std::path::{Path, PathBuf};

use gsle_core::bath::OhmicSpec;
use gsle_core::classical::{LangevinConfig, Memory, ParticleCloud};
use gsle_core::coupling::{gup_coupling, CouplingFunction, TabulatedCoupling};
use gsle_core::evolver::{InitialState, NoiseSpec, SimConfig};
use gsle_core::potentials::{DampingSign, MeasurementSign, PotentialSpec};
use gsle_core::spline::CubicSpline;
use gsle_core::{Grid, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::output;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    /// Syntax errors and unknown keys; the message names the offending key.
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl From<gsle_core::Error> for ConfigError {
    fn from(e: gsle_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(message.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Gsle,
    Classical,
    Compare,
    BohmianPost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Observables,
    Snapshots,
    Trajectories,
    WeakValues,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Document {
    pub mode: Mode,
    pub seed: u64,
    /// Number of GSLE realizations; member `k` runs with seed `seed + k`.
    pub ensemble_seeds: usize,
    /// Worker threads, 0 for one per core.
    pub workers: usize,
    pub output: String,
    /// Steps between stored snapshots, 0 for none.
    pub snapshot_stride: usize,
    pub emit: Vec<Emit>,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub potential: PotentialSection,
    pub coupling: CouplingSection,
    pub dissipation: DissipationSection,
    pub noise: NoiseSection,
    pub time: TimeSection,
    pub initial: InitialSection,
    pub classical: ClassicalSection,
    pub trajectories: TrajectorySection,
}

impl Default for Document {
    fn default() -> Self {
        Self {
            mode: Mode::Gsle,
            seed: 0,
            ensemble_seeds: 1,
            workers: 0,
            output: "out".into(),
            snapshot_stride: 0,
            emit: vec![Emit::Observables],
            grid: GridSection::default(),
            physics: PhysicsSection::default(),
            potential: PotentialSection::Free,
            coupling: CouplingSection::Linear,
            dissipation: DissipationSection::default(),
            noise: NoiseSection::Zero,
            time: TimeSection::default(),
            initial: InitialSection::default(),
            classical: ClassicalSection::default(),
            trajectories: TrajectorySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x_min: -20.0, x_max: 20.0, n_points: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Free,
    /// `½ mass ω² x²`; `mass` defaults to the particle mass.
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass: Option<f64>,
    },
    LinearRamp {
        #[serde(default = "one")]
        slope: f64,
    },
    /// `a x⁴ − b x²`.
    DoubleWell {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// Two-column table `x, V`.
    Tabulated { file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSection {
    Linear,
    Constant {
        value: f64,
    },
    Power {
        exponent: u32,
    },
    Sinusoidal {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// Table `x, f` or `x, f, f′, f″`.
    Tabulated { file: String },
    /// Coupling induced by a deformed commutator, `f = ∫₀ˣ √V′`.
    Gup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignChoice {
    #[default]
    Damping,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementChoice {
    #[default]
    Localizing,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DissipationSection {
    pub friction: f64,
    pub sign: SignChoice,
    pub kappa: f64,
    pub measurement_sign: MeasurementChoice,
}

fn default_cutoff() -> f64 {
    20.0
}

fn default_oscillators() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    Zero,
    White {
        temperature: f64,
    },
    /// Ohmic bath with the run's friction constant.
    Ohmic {
        temperature: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
        #[serde(default = "default_oscillators")]
        n_oscillators: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub n_steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 0.005, n_steps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// `sigma` defaults to the harmonic ground-state width, or 1.
    Gaussian {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        p0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Eigenstate {
        #[serde(default)]
        index: usize,
    },
    /// A snapshot file (`x, re, im`) on the run grid.
    File { path: String },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Gaussian { x0: 0.0, p0: 0.0, sigma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryChoice {
    #[default]
    Markovian,
    /// Memory kernel of the `[noise]` Ohmic bath.
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalSection {
    pub n_particles: usize,
    pub record_stride: usize,
    pub memory: MemoryChoice,
    pub history_cap: usize,
    /// Cloud parameters; default to the Gaussian initial state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_p: Option<f64>,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self {
            n_particles: 10_000,
            record_stride: 1,
            memory: MemoryChoice::Markovian,
            history_cap: 1 << 20,
            x0: None,
            p0: None,
            sigma_x: None,
            sigma_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub count: usize,
    /// Run directory read by `bohmian-post`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self { count: 1000, input: None }
    }
}

/// A validated experiment: the resolved document and the engine configs
/// built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub document: Document,
    pub sim: SimConfig,
    /// Present whenever the initial state determines a classical cloud.
    pub classical: Option<LangevinConfig>,
}

impl ExperimentSpec {
    /// The resolved document as TOML; parsing it gives back this spec.
    pub fn echo(&self) -> String {
        echo_document(&self.document)
    }

    /// Digest of the resolved document with `output` and `workers` blanked,
    /// so it depends only on what determines the results.
    pub fn digest(&self) -> String {
        let mut doc = self.document.clone();
        doc.output.clear();
        doc.workers = 0;
        output::digest(&echo_document(&doc))
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.document.emit.contains(&e)
    }
}

pub fn echo_document(doc: &Document) -> String {
    toml::to_string(doc).expect("documents serialize")
}

/// Parses a document with relative file paths taken from the working
/// directory.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    resolve(parse_document(text)?, Path::new("."))
}

pub fn parse_document(text: &str) -> Result<Document, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
}

/// Reads a config file; relative table paths are made absolute against its
/// directory so the resolved echo is location-independent.
pub fn load_document(path: &Path) -> Result<(Document, PathBuf), ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
    Ok((parse_document(&text)?, base))
}

fn absolute(base: &Path, file: &str) -> String {
    let p = Path::new(file);
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    fs::canonicalize(&joined).unwrap_or(joined).to_string_lossy().into_owned()
}

/// Fills defaults, validates and builds the engine configurations.
pub fn resolve(mut doc: Document, base: &Path) -> Result<ExperimentSpec, ConfigError> {
    let params = PhysicalParams::new(doc.physics.hbar, doc.physics.mass)?;
    let grid = Grid::new(doc.grid.x_min, doc.grid.x_max, doc.grid.n_points)?;
    if doc.ensemble_seeds == 0 {
        return Err(invalid("ensemble_seeds must be at least 1"));
    }
    if doc.seed > i64::MAX as u64 {
        return Err(invalid("seed must fit in a signed 64-bit integer"));
    }
    doc.emit.sort();
    doc.emit.dedup();

    match &mut doc.potential {
        PotentialSection::Harmonic { mass, .. } => {
            mass.get_or_insert(params.mass);
        }
        PotentialSection::Tabulated { file } => *file = absolute(base, file),
        _ => {}
    }
    if let CouplingSection::Tabulated { file } = &mut doc.coupling {
        *file = absolute(base, file);
    }
    let ground_width = match doc.potential {
        PotentialSection::Harmonic { omega, mass: Some(mv) } => {
            let w = (mv * omega * omega / params.mass).sqrt();
            Some((params.hbar / (2.0 * params.mass * w)).sqrt())
        }
        _ => None,
    };
    match &mut doc.initial {
        InitialSection::Gaussian { sigma, .. } => {
            sigma.get_or_insert(ground_width.unwrap_or(1.0));
        }
        InitialSection::File { path } => *path = absolute(base, path),
        InitialSection::Eigenstate { .. } => {}
    }
    let cloud = match doc.initial {
        InitialSection::Gaussian { x0, p0, sigma: Some(s) } => Some((x0, p0, s, params.hbar / (2.0 * s))),
        InitialSection::Eigenstate { index: 0 } => ground_width.map(|s| (0.0, 0.0, s, params.hbar / (2.0 * s))),
        _ => None,
    };
    {
        let c = &mut doc.classical;
        if let Some((x0, p0, sx, sp)) = cloud {
            c.x0.get_or_insert(x0);
            c.p0.get_or_insert(p0);
            c.sigma_x.get_or_insert(sx);
            c.sigma_p.get_or_insert(sp);
        }
    }
    if let Some(input) = &mut doc.trajectories.input {
        *input = absolute(base, input);
    }

    let potential = build_potential(&doc.potential)?;
    let coupling = build_coupling(&doc.coupling, &potential, &grid)?;
    let noise = match doc.noise {
        NoiseSection::Zero => NoiseSpec::Zero,
        NoiseSection::White { temperature } => NoiseSpec::White { temperature },
        NoiseSection::Ohmic { temperature, cutoff, n_oscillators } => NoiseSpec::Ohmic(OhmicSpec {
            friction: doc.dissipation.friction,
            cutoff,
            n_oscillators,
            temperature,
        }),
    };
    let initial_state = match &doc.initial {
        InitialSection::Gaussian { x0, p0, sigma } => {
            InitialState::Gaussian { x0: *x0, p0: *p0, sigma: sigma.unwrap_or(1.0) }
        }
        InitialSection::Eigenstate { index } => InitialState::Eigenstate { index: *index },
        InitialSection::File { path } => {
            let snap = output::read_snapshot(Path::new(path))
                .map_err(|e| ConfigError::Io { path: path.into(), message: e.to_string() })?;
            if snap.psi.grid() != &grid {
                return Err(invalid("initial state file does not match the grid"));
            }
            InitialState::Samples(snap.psi.into_values())
        }
    };

    let mut sim = SimConfig::new(grid, potential.clone(), initial_state, doc.time.dt, doc.time.n_steps);
    sim.params = params;
    sim.coupling = coupling.clone();
    sim.friction = doc.dissipation.friction;
    sim.noise = noise.clone();
    sim.kappa = doc.dissipation.kappa;
    sim.seed = doc.seed;
    sim.sign = match doc.dissipation.sign {
        SignChoice::Damping => DampingSign::Damping,
        SignChoice::Paper => DampingSign::Paper,
    };
    sim.measurement_sign = match doc.dissipation.measurement_sign {
        MeasurementChoice::Localizing => MeasurementSign::Localizing,
        MeasurementChoice::Paper => MeasurementSign::Paper,
    };
    sim.snapshot_stride = doc.snapshot_stride;
    sim.validate()?;

    let classical = match (doc.classical.x0, doc.classical.p0, doc.classical.sigma_x, doc.classical.sigma_p) {
        (Some(x0), Some(p0), Some(sigma_x), Some(sigma_p)) => {
            let c = &doc.classical;
            let mut lc = LangevinConfig::new(
                potential,
                ParticleCloud { x0, p0, sigma_x, sigma_p },
                doc.time.dt,
                doc.time.n_steps,
                c.n_particles,
            );
            lc.params = params;
            lc.coupling = coupling;
            lc.friction = doc.dissipation.friction;
            lc.noise = noise;
            lc.history_cap = c.history_cap;
            lc.record_stride = c.record_stride;
            lc.memory = match c.memory {
                MemoryChoice::Markovian => Memory::Markovian,
                MemoryChoice::Kernel => match &lc.noise {
                    NoiseSpec::Ohmic(spec) => {
                        Memory::Kernel(gsle_core::bath::discretize_ohmic(spec, params.mass)?)
                    }
                    _ => return Err(invalid("memory = \"kernel\" needs an ohmic [noise] bath")),
                },
            };
            lc.validate()?;
            Some(lc)
        }
        _ => None,
    };

    let needs_snapshots = [Emit::Snapshots, Emit::Trajectories, Emit::WeakValues].iter().any(|e| doc.emit.contains(e));
    match doc.mode {
        Mode::Gsle if needs_snapshots && doc.snapshot_stride == 0 => {
            return Err(invalid("snapshot_stride must be positive to emit snapshots, trajectories or weak values"))
        }
        Mode::Classical | Mode::Compare if classical.is_none() => {
            return Err(invalid("the classical cloud needs x0, p0, sigma_x and sigma_p for this initial state"))
        }
        Mode::BohmianPost if doc.trajectories.input.is_none() => {
            return Err(invalid("mode bohmian-post needs [trajectories] input"))
        }
        _ => {}
    }
    if doc.emit.contains(&Emit::Trajectories) && doc.trajectories.count == 0 {
        return Err(invalid("trajectories count must be at least 1"));
    }
    if let Some(c) = &classical {
        if doc.mode == Mode::Compare && c.n_particles < 2 {
            return Err(invalid("compare needs at least two classical particles"));
        }
    }
    Ok(ExperimentSpec { document: doc, sim, classical })
}

fn build_potential(p: &PotentialSection) -> Result<PotentialSpec, ConfigError> {
    Ok(match p {
        PotentialSection::Free => PotentialSpec::Free,
        PotentialSection::Harmonic { omega, mass } => {
            PotentialSpec::Harmonic { omega: *omega, mass: mass.unwrap_or(1.0) }
        }
        PotentialSection::LinearRamp { slope } => PotentialSpec::LinearRamp { slope: *slope },
        PotentialSection::DoubleWell { a, b } => PotentialSpec::DoubleWell { a: *a, b: *b },
        PotentialSection::Tabulated { file } => {
            let cols = read_columns(file, &[2])?;
            PotentialSpec::Tabulated(CubicSpline::not_a_knot(cols[0].clone(), cols[1].clone())?)
        }
    })
}

fn build_coupling(c: &CouplingSection, potential: &PotentialSpec, grid: &Grid) -> Result<CouplingFunction, ConfigError> {
    Ok(match c {
        CouplingSection::Linear => CouplingFunction::Linear,
        CouplingSection::Constant { value } => CouplingFunction::Constant(*value),
        CouplingSection::Power { exponent } => CouplingFunction::Power(*exponent),
        CouplingSection::Sinusoidal { amplitude, wavenumber } => {
            CouplingFunction::Sinusoidal { amplitude: *amplitude, wavenumber: *wavenumber }
        }
        CouplingSection::Tabulated { file } => {
            let cols = read_columns(file, &[2, 4])?;
            let spline = |k: usize| CubicSpline::not_a_knot(cols[0].clone(), cols[k].clone());
            let table = if cols.len() == 4 {
                TabulatedCoupling::with_derivatives(spline(1)?, spline(2)?, spline(3)?)?
            } else {
                TabulatedCoupling::new(spline(1)?)
            };
            CouplingFunction::Tabulated(table)
        }
        CouplingSection::Gup => gup_coupling(potential, grid)?,
    })
}

/// Numeric columns of a comma-separated table; `#` lines and a non-numeric
/// header row are skipped.
fn read_columns(file: &str, allowed: &[usize]) -> Result<Vec<Vec<f64>>, ConfigError> {
    let io = |message: String| ConfigError::Io { path: file.into(), message };
    let rows = output::read_table(Path::new(file)).map_err(|e| io(e.to_string()))?;
    let width = rows.first().map_or(0, Vec::len);
    if !allowed.contains(&width) || rows.iter().any(|r| r.len() != width) {
        return Err(io(format!("expected {allowed:?} numeric columns")));
    }
    Ok((0..width).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
}


#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[potential]\nkind = \"harmonic\"\nomega = 1.0\n\n[time]\nn_steps = 100\n";

    #[test]
    fn minimal_document_resolves_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        let s = &spec.sim;
        assert_eq!(s.params, PhysicalParams::new(1.0, 1.0).unwrap());
        assert_eq!(s.grid, Grid::new(-20.0, 20.0, 512).unwrap());
        assert_eq!(s.dt, 0.005);
        assert_eq!(s.n_steps, 100);
        assert_eq!(s.friction, 0.0);
        assert_eq!(s.noise, NoiseSpec::Zero);
        assert_eq!(s.kappa, 0.0);
        assert_eq!(s.sign, DampingSign::Damping);
        assert_eq!(s.coupling, CouplingFunction::Linear);
        assert_eq!(s.potential, PotentialSpec::Harmonic { omega: 1.0, mass: 1.0 });
        let InitialState::Gaussian { sigma, .. } = s.initial_state else { panic!() };
        assert!((sigma - 0.5_f64.sqrt()).abs() < 1e-15);
        let echo = spec.echo();
        assert!(echo.contains("dt = 0.005") && echo.contains("n_points = 512") && echo.contains("sign = \"damping\""));
    }

    #[test]
    fn negative_dt_is_rejected() {
        let e = parse_config("[time]\ndt = -1.0\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
        assert!(e.to_string().contains("dt must be positive"), "{e}");
    }

    #[test]
    fn unknown_keys_are_named() {
        for (doc, key) in [
            ("bogus = 1\n", "bogus"),
            ("[grid]\nnpoints = 64\n", "npoints"),
            ("[potential]\nkind = \"linear_ramp\"\nomega = 2.0\n", "omega"),
            ("[extra]\nx = 1\n", "extra"),
        ] {
            let e = parse_config(doc).unwrap_err();
            assert!(matches!(e, ConfigError::Parse(_)));
            assert!(e.to_string().contains(&format!("`{key}`")), "{e}");
        }
    }

    #[test]
    fn sign_passes_through() {
        let spec = parse_config("[dissipation]\nfriction = 0.1\nsign = \"paper\"\n").unwrap();
        assert_eq!(spec.sim.sign, DampingSign::Paper);
        assert!(spec.echo().contains("sign = \"paper\""));
        let spec = parse_config("[dissipation]\nkappa = 0.1\nmeasurement_sign = \"paper\"\n").unwrap();
        assert_eq!(spec.sim.measurement_sign, MeasurementSign::Paper);
    }

    #[test]
    fn echo_round_trips() {
        let dir = std::env::temp_dir().join(format!("gsle-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let table: String = (0..=80).map(|i| {
            let x = -20.0 + i as f64 * 0.5;
            format!("{x},{}\n", 0.02 * x * x * x * x - x * x)
        }).collect();
        fs::write(dir.join("v.csv"), format!("x,V\n{table}")).unwrap();
        let text = "mode = \"compare\"\nseed = 17\nensemble_seeds = 3\nsnapshot_stride = 10\n\
                    emit = [\"weak_values\", \"observables\", \"snapshots\"]\n\
                    [potential]\nkind = \"tabulated\"\nfile = \"v.csv\"\n\
                    [coupling]\nkind = \"sinusoidal\"\nwavenumber = 0.5\n\
                    [dissipation]\nfriction = 0.2\nkappa = 0.01\n\
                    [noise]\nkind = \"ohmic\"\ntemperature = 0.1\nn_oscillators = 50\n\
                    [initial]\nkind = \"gaussian\"\nx0 = 1.5\np0 = -0.25\n\
                    [classical]\nn_particles = 64\nrecord_stride = 5\nmemory = \"kernel\"\n";
        let spec = resolve(parse_document(text).unwrap(), &dir).unwrap();
        let again = parse_config(&spec.echo()).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.echo(), spec.echo());
        assert_eq!(spec.document.emit, vec![Emit::Observables, Emit::Snapshots, Emit::WeakValues]);
        let cl = spec.classical.as_ref().unwrap();
        assert!(matches!(cl.memory, Memory::Kernel(_)));
        assert_eq!(cl.initial, ParticleCloud { x0: 1.5, p0: -0.25, sigma_x: 1.0, sigma_p: 0.5 });
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn inconsistent_documents_are_rejected() {
        for doc in [
            "mode = \"compare\"\n[potential]\nkind = \"harmonic\"\n[initial]\nkind = \"eigenstate\"\nindex = 1\n",
            "[classical]\nmemory = \"kernel\"\n",
            "emit = [\"snapshots\"]\n",
            "mode = \"bohmian-post\"\n",
            "ensemble_seeds = 0\n",
            "[grid]\nn_points = 100\n",
            "[dissipation]\nfriction = -0.1\n",
            "[potential]\nkind = \"harmonic\"\n[coupling]\nkind = \"gup\"\n",
        ] {
            assert!(matches!(parse_config(doc), Err(ConfigError::Invalid(_))), "{doc}");
        }
    }

    #[test]
    fn eigenstate_ground_state_defines_a_cloud() {
        let spec = parse_config("[potential]\nkind = \"harmonic\"\nomega = 2.0\n[initial]\nkind = \"eigenstate\"\n").unwrap();
        let c = spec.classical.unwrap().initial;
        assert!((c.sigma_x * c.sigma_x - 0.25).abs() < 1e-15);
        assert!((c.sigma_x * c.sigma_p - 0.5).abs() < 1e-15);
    }
}
