//! `borel`: file-based front-end to `borel-core`.
//!
//! Every subcommand reads JSON documents, writes its artifacts atomically
//! into `--out-dir`, and exits with a code from [`job::Failure`].

mod commands;
mod job;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "borel", version, about = "Filtered sets, deformations and convolution products in the Borel plane")]
pub struct Cli {
    /// Directory receiving the artifacts; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Reserved; no command uses randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Union, sum, fine sum or saturation of filtered sets; writes `set.json`.
    SetOp {
        op: SetOp,
        a: PathBuf,
        /// Second operand; not used by `saturate`.
        b: Option<PathBuf>,
    },
    /// Admissible levels and distance to the set; writes `path_check.json`
    /// and `path.csv`.
    PathCheck {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        path: PathBuf,
        /// Uniform samples in the CSV export.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Glimpsed points in direction `theta`; writes `glimpse.json`.
    Glimpse {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        /// Cross-check against the inductive construction; exit 5 on mismatch.
        #[arg(long)]
        verify: bool,
    },
    /// Deformation grid of `γ`; writes `grid.csv`, `report.json`, `overlay.svg`.
    Deform {
        #[command(flatten)]
        inputs: DeformInputs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Convolution product along `γ`; writes `trace.csv`, and `probe.json`
    /// with `--probe`.
    Convolve {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
        #[command(flatten)]
        inputs: DeformInputs,
        #[command(flatten)]
        grid: GridArgs,
        /// Gauss–Legendre order per cell.
        #[arg(long, default_value_t = 16)]
        n_q: usize,
        /// Terms kept by series re-expansion.
        #[arg(long, default_value_t = 64)]
        n_ser: usize,
        /// Candidate singular point `re,im` to probe.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        probe: Option<[f64; 2]>,
        #[arg(long, default_value_t = 0.25)]
        probe_radius: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol_mono: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Sum,
    FineSum,
    Saturate,
}

#[derive(Args, Debug)]
pub struct DeformInputs {
    #[arg(long)]
    pub gamma: PathBuf,
    #[arg(long)]
    pub set_a: PathBuf,
    #[arg(long)]
    pub set_b: PathBuf,
    /// Working level; defaults to the largest admissible one.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, default_value_t = 64)]
    pub n_s: usize,
    #[arg(long, default_value_t = 512)]
    pub n_t: usize,
    /// Relative threshold of the flow denominator guard.
    #[arg(long, default_value_t = 1e-8)]
    pub guard_rel: f64,
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let (re, im) = s.split_once(',').ok_or("expected re,im")?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok([p(re)?, p(im)?])
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { job::Failure::PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
