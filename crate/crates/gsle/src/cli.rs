//! `gsle run | compare | post` with exit codes 0 (success), 2 (numerical
//! failure) and 3 (configuration error); 1 is left for IO failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::error;

use crate::config::{self, ConfigError, Document, Mode};
use crate::experiment::{run_experiment, RunError};
use crate::output;

#[derive(Debug, Parser)]
#[command(name = "gsle", version, about = "Generalized Schrödinger-Langevin simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the mode named in the config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the config as a quantum-classical comparison.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Trajectories and weak values from the snapshots of a finished run.
    Post {
        run_dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Flags {
    fn apply(&self, doc: &mut Document) {
        if let Some(s) = self.seed {
            doc.seed = s;
        }
        if let Some(w) = self.workers {
            doc.workers = w;
        }
        if let Some(o) = &self.out {
            doc.output = o.to_string_lossy().into_owned();
        }
    }
}

fn load(path: &Path, flags: &Flags, edit: impl FnOnce(&mut Document)) -> Result<config::ExperimentSpec, ConfigError> {
    let (mut doc, base) = config::load_document(path)?;
    edit(&mut doc);
    flags.apply(&mut doc);
    config::resolve(doc, &base)
}

/// Runs a parsed command; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let (flags, spec) = match &cli.command {
        Command::Run { config, flags } => (flags, load(config, flags, |_| {})),
        Command::Compare { config, flags } => (flags, load(config, flags, |d| d.mode = Mode::Compare)),
        Command::Post { run_dir, flags } => (
            flags,
            load(&run_dir.join("resolved_config.txt"), flags, |d| {
                let input = std::fs::canonicalize(run_dir).unwrap_or_else(|_| run_dir.clone());
                d.mode = Mode::BohmianPost;
                d.trajectories.input = Some(input.to_string_lossy().into_owned());
                d.output = run_dir.to_string_lossy().into_owned();
            }),
        ),
    };
    let result = spec.map_err(RunError::from).and_then(|spec| run_experiment(&spec).map(|o| (spec, o)));
    match result {
        Ok((_, outcome)) => {
            println!("wrote {}", outcome.output.display());
            0
        }
        Err(e) => {
            error!("{e}");
            eprintln!("gsle: {e}");
            let dir = flags.out.clone().unwrap_or_else(|| match &cli.command {
                Command::Post { run_dir, .. } => run_dir.clone(),
                Command::Run { config, .. } | Command::Compare { config, .. } => output_dir_of(config),
            });
            if let Err(io) = output::write_error(&dir, &e.record()) {
                eprintln!("gsle: cannot write error record to {}: {io}", dir.display());
            }
            e.exit_code()
        }
    }
}

/// The `output` key of a config if it can be read, else `out`.
fn output_dir_of(config: &Path) -> PathBuf {
    config::load_document(config).map(|(d, _)| PathBuf::from(d.output)).unwrap_or_else(|_| PathBuf::from("out"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
