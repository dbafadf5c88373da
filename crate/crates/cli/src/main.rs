//! `infolat` command line.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid input (bad
//! flags, config or state file), 3 on numerical failure. Inputs are
//! validated before the output directory is touched.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use infolat::hilbert::{build_sector_basis, neel_state, StateVector};
use infolat::info_lattice::{bipartite_entropy_profile, full_info_lattice_with};
use infolat::io::{self, ConfigFile, OutputDir, RunManifest};
use infolat::protocols::{
    fig7_desk_configs, run_scattering, run_spectrum, run_string_quench, scattering_sweep,
    solve_vacuum, RunStatus, ScatteringConfig,
};
use infolat::schwinger::ModelParams;
use infolat::spectral::strong_coupling_states;
use infolat::{Error, Execution, C64};

#[derive(Parser)]
#[command(name = "infolat", version, about = "Lattice Schwinger model quenches and information-lattice diagnostics")]
struct Cli {
    /// Worker threads; 1 forces sequential execution.
    #[arg(long, global = true, env = "INFOLAT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, env = "INFOLAT_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, env = "INFOLAT_OUT")]
    out: Option<PathBuf>,
    /// Seed for the eigensolver start vectors (overrides `output.seed`).
    #[arg(long, env = "INFOLAT_SEED")]
    seed: Option<u64>,
    /// Largest recorded scale (overrides `analysis.ell_max`).
    #[arg(long, env = "INFOLAT_LMAX")]
    lmax: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Four scattering runs at ka = 0.7, 1.0, 1.2, 1.3 on the desk lattice.
    Fig7Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    Neel,
    Bell,
    Vector,
    Scalar,
    Vacuum,
}

#[derive(Subcommand)]
enum Cmd {
    /// Low-lying spectrum with gap, momentum and meson overlaps.
    Spectrum(RunArgs),
    /// Two-packet meson scattering.
    Scatter {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Light-cone string quench with external charges.
    String(RunArgs),
    /// Information lattice of a stored state.
    Infolattice {
        /// State file written by `save-state`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, env = "INFOLAT_LMAX")]
        lmax: Option<usize>,
        #[arg(long, env = "INFOLAT_OUT")]
        out: Option<PathBuf>,
    },
    /// Writes a reference state to a file.
    SaveState {
        #[arg(long, value_enum)]
        kind: StateKind,
        #[arg(long, default_value_t = 8)]
        sites: usize,
        /// Coupling for `vacuum`.
        #[arg(long, default_value_t = 1.0)]
        ga: f64,
        /// Mass for `vacuum`.
        #[arg(long, default_value_t = 0.0)]
        ma: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            3
        } else if matches!(e, Error::Io(_)) {
            1
        } else {
            2
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(args: &RunArgs) -> CliResult<ConfigFile> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| invalid("--config is required"))?;
    let mut cfg = ConfigFile::load(path)?;
    if let Some(seed) = args.seed {
        cfg.output.seed = Some(seed);
    }
    if let Some(l) = args.lmax {
        cfg.analysis.get_or_insert_with(Default::default).ell_max = Some(l);
    }
    Ok(cfg)
}

fn out_dir(args: &RunArgs, cfg: Option<&ConfigFile>, fallback: &str) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

/// Runs `body` between an incomplete manifest and the final one.
fn managed_run<C, F>(command: &str, config: &C, dir: &Path, body: F) -> CliResult
where
    C: serde::Serialize,
    F: FnOnce(&mut OutputDir) -> infolat::Result<RunStatus>,
{
    let started = Instant::now();
    let mut manifest = RunManifest::begin(command, config)?;
    let mut out = OutputDir::create(dir)?;
    manifest.write(dir)?;
    let result = body(&mut out);
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok(status) => {
            let message = status.error.as_ref().map(|e| e.to_string());
            manifest.finish(&out, elapsed, status.complete, message.clone());
            manifest.write(dir)?;
            match status.error {
                Some(e) => Err(Failure::from(e)),
                None => Ok(()),
            }
        }
        Err(e) => {
            manifest.finish(&out, elapsed, false, Some(e.to_string()));
            manifest.write(dir)?;
            Err(e.into())
        }
    }
}

fn complete() -> RunStatus {
    RunStatus {
        complete: true,
        error: None,
    }
}

fn cmd_spectrum(args: &RunArgs, exec: Execution) -> CliResult {
    let file = load_config(args)?;
    let cfg = file.spectrum_config()?;
    let dir = out_dir(args, Some(&file), "out/spectrum");
    managed_run("spectrum", &cfg, &dir, |out| {
        let run = run_spectrum(&cfg, exec)?;
        io::write_spectrum(out, &run)?;
        Ok(complete())
    })
}

fn cmd_scatter(args: &RunArgs, preset: Option<Preset>, exec: Execution) -> CliResult {
    match preset {
        Some(Preset::Fig7Desk) => {
            let cfgs: Vec<ScatteringConfig> = fig7_desk_configs()
                .into_iter()
                .map(|mut c| {
                    if let Some(s) = args.seed {
                        c.seed = s;
                    }
                    if args.lmax.is_some() {
                        c.ell_max = args.lmax;
                    }
                    c
                })
                .collect();
            for c in &cfgs {
                c.validate()?;
            }
            let dir = out_dir(args, None, "out/fig7-desk");
            managed_run("scatter --preset fig7-desk", &cfgs, &dir, |out| {
                let mut status = complete();
                for (cfg, run) in cfgs.iter().zip(scattering_sweep(&cfgs, exec)) {
                    let run = run?;
                    let prefix = format!("ka-{:.2}", cfg.k);
                    let mut child = out.child(&prefix)?;
                    io::write_scattering(&mut child, &run)?;
                    out.absorb(&prefix, child);
                    if !run.status.complete && status.complete {
                        status = run.status;
                    }
                }
                Ok(status)
            })
        }
        None => {
            let file = load_config(args)?;
            let cfg = file.scattering_config()?;
            let dir = out_dir(args, Some(&file), "out/scatter");
            managed_run("scatter", &cfg, &dir, |out| {
                let run = run_scattering(&cfg, exec)?;
                io::write_scattering(out, &run)?;
                Ok(run.status)
            })
        }
    }
}

fn cmd_string(args: &RunArgs, exec: Execution) -> CliResult {
    let file = load_config(args)?;
    let cfg = file.string_config()?;
    let dir = out_dir(args, Some(&file), "out/string");
    managed_run("string", &cfg, &dir, |out| {
        let run = run_string_quench(&cfg, exec)?;
        io::write_string(out, &run)?;
        Ok(run.status)
    })
}

fn cmd_infolattice(state: &Path, lmax: Option<usize>, out: Option<PathBuf>, exec: Execution) -> CliResult {
    let psi = io::read_state(state)?;
    let n = psi.n_sites();
    let ell_max = lmax.unwrap_or(n - 1);
    if ell_max >= n {
        return Err(invalid(format!("--lmax {ell_max} must be below N = {n}")));
    }
    let dir = out.unwrap_or_else(|| PathBuf::from("out/infolattice"));
    let echo = serde_json::json!({ "state": state.display().to_string(), "ell_max": ell_max });
    managed_run("infolattice", &echo, &dir, |out| {
        let lattice = full_info_lattice_with(&psi, ell_max, exec)?;
        let entropy = bipartite_entropy_profile(&psi)?;
        io::write_state_analysis(out, &lattice, &entropy)?;
        Ok(complete())
    })
}

fn build_state(kind: StateKind, sites: usize, ga: f64, ma: f64) -> infolat::Result<StateVector> {
    match kind {
        StateKind::Bell => {
            let b = build_sector_basis(2, None)?;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            StateVector::from_amplitudes(
                b,
                vec![C64::new(h, 0.0), C64::default(), C64::default(), C64::new(h, 0.0)],
            )
        }
        StateKind::Neel => neel_state(&build_sector_basis(sites, Some((sites % 2) as i32))?),
        StateKind::Vector | StateKind::Scalar => {
            let sc = strong_coupling_states(&build_sector_basis(sites, Some((sites % 2) as i32))?)?;
            Ok(if matches!(kind, StateKind::Vector) {
                sc.vector
            } else {
                sc.scalar
            })
        }
        StateKind::Vacuum => Ok(solve_vacuum(&ModelParams::new(sites, ga, ma)?, 0)?.1),
    }
}

fn configure_threads(threads: Option<usize>) -> CliResult<Execution> {
    match threads {
        Some(0) => Err(invalid("--threads must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(k) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::default()),
    }
}

fn run(cli: Cli) -> CliResult {
    let exec = configure_threads(cli.threads)?;
    match cli.command {
        Cmd::Spectrum(args) => cmd_spectrum(&args, exec),
        Cmd::Scatter { run, preset } => cmd_scatter(&run, preset, exec),
        Cmd::String(args) => cmd_string(&args, exec),
        Cmd::Infolattice { state, lmax, out } => cmd_infolattice(&state, lmax, out, exec),
        Cmd::SaveState {
            kind,
            sites,
            ga,
            ma,
            out,
        } => {
            let psi = build_state(kind, sites, ga, ma)?;
            io::write_state(&out, &psi)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("infolat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
