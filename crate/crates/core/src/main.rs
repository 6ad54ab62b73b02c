use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaxo::acquisition::{Strategy, WaitTime};
use relaxo::workbench::config::{
    AcquisitionBlock, DecayFitBlock, EprBlock, FieldGrid, LatticeBlock, ModelBlock, PaperReproBlock,
    ProfileFitBlock,
};
use relaxo::workbench::{execute, output_dir, Pipeline, RunConfig};
use relaxo::{Error, ErrorClass};

/// Field-cycling 13C relaxometry workbench.
///
/// Every subcommand writes CSV/JSON outputs plus manifest.json into one
/// directory, atomically. Values in a --config file take precedence over
/// command-line flags. Exit codes: 0 success, 2 validation, 3 numerical,
/// 4 I/O.
#[derive(Parser)]
#[command(name = "relaxo", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $RELAXO_OUTPUT_ROOT/<command> or relaxo-out/<command>]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed [default: 20160101]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write units.csv describing every exported column
    #[arg(long, global = true)]
    units_report: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Lowest field of the log grid, T
    #[arg(long, default_value_t = 1e-4)]
    b_min: f64,
    /// Highest field of the log grid, T
    #[arg(long, default_value_t = 7.0)]
    b_max: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 400)]
    points: usize,
}

impl GridArgs {
    fn grid(&self) -> FieldGrid {
        FieldGrid {
            b_min_t: self.b_min,
            b_max_t: self.b_max,
            points: self.points,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Carbon and electron bath statistics from lattice Monte Carlo
    LatticeStats {
        /// 13C enrichment fractions
        #[arg(long = "eta", num_args = 1.., default_values_t = [0.011])]
        eta: Vec<f64>,
        /// Electron concentrations, ppm
        #[arg(long = "ppm", num_args = 1.., default_values_t = [17.0, 48.0])]
        ppm: Vec<f64>,
        /// Lattice box edge, nm
        #[arg(long, default_value_t = 3.0)]
        size_nm: f64,
        #[arg(long, default_value_t = 20)]
        realizations: usize,
        /// Also run the Monte-Carlo P1 hyperfine estimate
        #[arg(long)]
        numeric_hyperfine: bool,
    },
    /// Evaluate a rate model, its derivatives and knee fields on a grid
    ModelEval {
        /// Model TOML file
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Fit a two-Tsallian profile to a B_T,R1_per_s,err CSV
    ProfileFit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Fit stretched exponentials to a B_T,t_s,signal CSV
    DecayFit {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Hold the stretch factor fixed
        #[arg(long)]
        fix_p: Option<f64>,
    },
    /// Simulate a field-cycling acquisition
    AcqSim {
        /// full-2d or accelerated-1d
        #[arg(long, value_parser = ["full-2d", "accelerated-1d"], default_value = "accelerated-1d")]
        strategy: String,
        /// Fixed wait time, s [default: half-contrast dynamic waits]
        #[arg(long)]
        wait_s: Option<f64>,
        /// Field-map CSV (position_mm,B_T) [default: built-in synthetic map]
        #[arg(long)]
        fieldmap: Option<PathBuf>,
        /// Truth model TOML [default: built-in two-Tsallian]
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Segment, fit and integrate derivative EPR spectra (field_G,signal)
    Epr {
        #[arg(long = "input", num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Spins per unit double integral
        #[arg(long, default_value_t = 1.0)]
        spin_scale: f64,
    },
    /// Model curves and derived numbers for the 17 ppm and 48 ppm samples
    PaperRepro {
        #[command(flatten)]
        grid: GridArgs,
    },
}

fn flags_config(cmd: &Command, common: &Common) -> (Pipeline, RunConfig) {
    let mut c = RunConfig {
        seed: common.seed,
        output_dir: common.out.clone(),
        units_report: common.units_report.then_some(true),
        ..Default::default()
    };
    let p = match cmd {
        Command::LatticeStats { eta, ppm, size_nm, realizations, numeric_hyperfine } => {
            c.lattice = Some(LatticeBlock {
                enrichments: eta.clone(),
                concentrations_ppm: ppm.clone(),
                lattice_size_nm: *size_nm,
                nv_lattice_size_nm: *size_nm,
                realizations: *realizations,
                numeric_hyperfine: *numeric_hyperfine,
                ..Default::default()
            });
            Pipeline::LatticeStats
        }
        Command::ModelEval { model, grid } => {
            c.model = model.as_ref().map(|m| ModelBlock {
                path: Some(m.clone()),
                definition: None,
                grid: grid.grid(),
                phase_noise_reference_t: 1e-3,
            });
            Pipeline::ModelEval
        }
        Command::ProfileFit { input, grid } => {
            c.profile_fit = input.as_ref().map(|i| ProfileFitBlock { input: i.clone(), grid: grid.grid() });
            Pipeline::ProfileFit
        }
        Command::DecayFit { input, fix_p } => {
            c.decay_fit = input.as_ref().map(|i| DecayFitBlock { input: i.clone(), fix_p: *fix_p });
            Pipeline::DecayFit
        }
        Command::AcqSim { strategy, wait_s, fieldmap, truth } => {
            let mut a = AcquisitionBlock::default();
            a.plan.strategy = if strategy == "full-2d" { Strategy::Full2d } else { Strategy::Accelerated1d };
            if let Some(t) = wait_s {
                a.plan.wait = WaitTime::Fixed { t_w_s: *t };
            }
            a.fieldmap = fieldmap.clone();
            a.truth.model_path = truth.clone();
            c.acquisition = Some(a);
            Pipeline::AcqSim
        }
        Command::Epr { inputs, spin_scale } => {
            c.epr = (!inputs.is_empty()).then(|| EprBlock {
                inputs: inputs.clone(),
                baseline_overrides: vec![],
                spin_scale: *spin_scale,
                segment: Default::default(),
            });
            Pipeline::Epr
        }
        Command::PaperRepro { grid } => {
            c.paper_repro = Some(PaperReproBlock { grid: grid.grid() });
            Pipeline::PaperRepro
        }
    };
    (p, c)
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (pipeline, flags) = flags_config(&cli.command, &cli.common);
    let cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?.overlay(flags),
        None => flags,
    };
    let dir = output_dir(pipeline, &cfg);
    let m = execute(pipeline, &cfg, &dir)?;
    println!("{}: wrote {} files to {}", pipeline.name(), m.outputs.len() + 1, dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
