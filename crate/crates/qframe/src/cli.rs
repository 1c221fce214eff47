//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::state::StateSpec;

#[derive(Debug, Parser)]
#[command(name = "qframe", version, about = "Spin reference frames with separate batteries for S_x, S_y, S_z")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the framed rotation exp(-i alpha.s) once and check its bounds.
    Rotate(RotateArgs),
    /// Run the rotation over several N and seeds.
    Sweep(SweepArgs),
    /// Move the spin of a qubit into the three batteries.
    Extract(ExtractArgs),
    /// Print the error and separation bounds.
    Bounds(BoundsArgs),
    /// Check the Pauli-string operator basis on n qubits.
    Basis(BasisArgs),
    /// Commutator of the step unitary with each total spin component.
    Conserve(ConserveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Comma-separated floats.
pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            let v: f64 = p.trim().parse().map_err(|e| format!("bad number {p:?}: {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{p:?} is not finite"))
            }
        })
        .collect()
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s)?;
    <[f64; 3]>::try_from(v.as_slice()).map_err(|_| format!("expected three comma-separated values, got {s:?}"))
}

#[derive(Debug, Args)]
pub struct RotateArgs {
    /// Spin of the system and of every reference particle.
    #[arg(long = "s", default_value_t = 0.5)]
    pub spin: f64,
    /// Rotation vector alpha_x,alpha_y,alpha_z, each |alpha_k| <= pi.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    pub alpha: [f64; 3],
    #[arg(long = "N")]
    pub iterations: usize,
    /// bloch:THETA,PHI | mixed | random | file:PATH
    #[arg(long, default_value = "bloch:0,0")]
    pub state: StateSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "s", default_value_t = 0.5)]
    pub spin: f64,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0.3,0.7,-0.2")]
    pub alpha: [f64; 3],
    /// Strictly increasing list, e.g. 128,256,512.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub iterations: Vec<usize>,
    #[arg(long, default_value = "random")]
    pub state: StateSpec,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Qubit state: bloch:THETA,PHI | mixed | random | file:PATH
    #[arg(long, default_value = "bloch:0,0")]
    pub state: StateSpec,
    #[arg(long = "N")]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Battery part that books the ancillas' spin.
    #[arg(long, value_enum, default_value = "z")]
    pub ancilla_part: PartArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Rotation vector; the step bounds use its largest component.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "3.141592653589793,0,0")]
    pub alpha: [f64; 3],
    #[arg(long = "N")]
    pub iterations: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Number of qubits.
    #[arg(long = "n")]
    pub qubits: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConserveArgs {
    #[arg(long = "s", default_value_t = 0.5)]
    pub spin: f64,
    /// One or more step angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3.141592653589793")]
    pub alpha: Vec<f64>,
    #[arg(long = "N")]
    pub iterations: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}
