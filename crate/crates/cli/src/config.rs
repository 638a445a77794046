use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use hecke_sphere::poly::Precision;
use hecke_sphere::Parity;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hecke-sphere", version, about = "Hecke-Laplace eigenforms on S^3: exact checks and moment experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Degree of the harmonic polynomials.
    #[arg(long, global = true)]
    pub n: Option<u32>,

    /// Degrees as `a:b:step` (inclusive; step defaults to 2).
    #[arg(long, global = true, value_name = "A:B:STEP")]
    pub n_range: Option<String>,

    /// Odd primes used to split the eigenspaces, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,

    /// Series or range cutoff (K, X or k_max depending on the command).
    #[arg(long, global = true)]
    pub cutoff: Option<u64>,

    /// Number of grid points on S^3.
    #[arg(long, global = true, default_value_t = 5000)]
    pub grid: usize,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, env = "HECKE_SPHERE_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Output directory for JSON and CSV artifacts.
    #[arg(long, global = true, default_value = "hecke-sphere-out")]
    pub out: PathBuf,

    /// `double` or `extended`.
    #[arg(long, global = true, default_value = "double")]
    pub precision: Precision,

    /// Shell norm for `shells`.
    #[arg(long, global = true)]
    pub k: Option<u64>,

    /// `integral` or `coset`.
    #[arg(long, global = true, default_value = "integral")]
    pub parity: Parity,

    /// Random point pairs for `pretrace-check`.
    #[arg(long, global = true, default_value_t = 100)]
    pub pairs: usize,

    /// Largest prime power exponent for `hecke-check`.
    #[arg(long, global = true, default_value_t = 2)]
    pub alpha_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// List a norm shell of B(Z) or its coset.
    Shells,
    /// Harmonic polynomial basis with exact coefficients.
    Basis,
    /// Exact Hecke algebra relations (T_1 vanishing for odd n).
    HeckeCheck,
    /// Joint eigenspaces and eigenvalue tables.
    Spectral,
    /// Eigenform expansion of the reproducing kernel at random pairs.
    PretraceCheck,
    /// Spectral side against the theta coefficients for k <= cutoff.
    ThetaIdentity,
    /// Modularity of F_n under [[1,0],[4,1]] at z = i/2.
    Modularity,
    /// Normalized Petersson norms and their growth in n.
    Petersson,
    /// Cylinder class counts, A(X) growth and successive minima.
    Counting,
    /// Fourth-moment sups over a grid and their growth in n.
    Moments,
    /// Run every command with its defaults and summarize.
    Report,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Shells,
        Command::Basis,
        Command::HeckeCheck,
        Command::Spectral,
        Command::PretraceCheck,
        Command::ThetaIdentity,
        Command::Modularity,
        Command::Petersson,
        Command::Counting,
        Command::Moments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Shells => "shells",
            Command::Basis => "basis",
            Command::HeckeCheck => "hecke-check",
            Command::Spectral => "spectral",
            Command::PretraceCheck => "pretrace-check",
            Command::ThetaIdentity => "theta-identity",
            Command::Modularity => "modularity",
            Command::Petersson => "petersson",
            Command::Counting => "counting",
            Command::Moments => "moments",
            Command::Report => "report",
        }
    }

    fn default_degrees(self) -> Vec<u32> {
        match self {
            Command::Shells => vec![],
            Command::Basis => vec![0, 1, 2, 3, 4],
            Command::HeckeCheck => vec![1, 2, 3, 4, 5, 6, 7, 8, 10],
            Command::Spectral | Command::ThetaIdentity => vec![2, 4, 6, 8],
            Command::PretraceCheck => (2..=16).step_by(2).collect(),
            Command::Modularity => vec![2, 4],
            Command::Petersson => (8..=64).step_by(2).collect(),
            Command::Counting => vec![64, 128, 256],
            Command::Moments => (2..=24).step_by(2).collect(),
            Command::Report => vec![],
        }
    }

    fn needs_even(self) -> bool {
        !matches!(self, Command::Shells | Command::Basis | Command::HeckeCheck | Command::Counting)
    }
}

/// The resolved configuration, embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: Vec<u32>,
    pub primes: Vec<u64>,
    pub cutoff: Option<u64>,
    pub grid: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub precision: Precision,
    pub k: Option<u64>,
    pub parity: Parity,
    pub pairs: usize,
    pub alpha_max: u32,
}

pub fn parse_range(s: &str) -> anyhow::Result<Vec<u32>> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("--n-range `{s}` must look like a:b or a:b:step");
    }
    let num = |p: &str| p.trim().parse::<u32>().with_context(|| format!("bad number `{p}` in --n-range"));
    let (a, b) = (num(parts[0])?, num(parts[1])?);
    let step = if parts.len() == 3 { num(parts[2])? } else { 2 };
    if step == 0 || a > b {
        bail!("--n-range `{s}` is empty (need a <= b and step > 0)");
    }
    Ok((a..=b).step_by(step as usize).collect())
}

fn is_odd_prime(p: u64) -> bool {
    p > 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

impl RunConfig {
    /// Resolves defaults for `command` and validates the flags.
    pub fn resolve(cli: &Cli, command: Command) -> anyhow::Result<Self> {
        Self::resolve_with(cli, command, None)
    }

    /// As [`Self::resolve`], with a fallback shell norm for `shells`.
    pub fn resolve_with(cli: &Cli, command: Command, default_k: Option<u64>) -> anyhow::Result<Self> {
        let k = cli.k.or(default_k);
        let n = match (&cli.n_range, cli.n) {
            (Some(_), Some(_)) => bail!("give either --n or --n-range, not both"),
            (Some(r), None) => parse_range(r)?,
            (None, Some(n)) => vec![n],
            (None, None) => command.default_degrees(),
        };
        if command.needs_even() {
            if let Some(odd) = n.iter().find(|&&v| v % 2 == 1) {
                bail!("`{}` needs even degrees; got n = {odd}", command.name());
            }
        }
        let primes = cli.primes.clone().unwrap_or_else(|| vec![3, 5, 7]);
        if primes.is_empty() {
            bail!("--primes needs at least one odd prime");
        }
        if let Some(p) = primes.iter().find(|&&p| !is_odd_prime(p)) {
            bail!("--primes: {p} is not an odd prime");
        }
        if command == Command::Shells && k.unwrap_or(0) == 0 {
            bail!("`shells` needs --k with a positive norm");
        }
        if command == Command::Moments && cli.grid == 0 {
            bail!("--grid must be positive");
        }
        if command == Command::Petersson {
            if let Some(k) = cli.cutoff {
                if let Some(&bad) = n.iter().find(|&&v| k < 10 * v as u64 || k == 0) {
                    bail!("--cutoff {k} is too small for n = {bad}; the Petersson sum needs K >= 10n");
                }
            }
        }
        Ok(RunConfig {
            command,
            n,
            primes,
            cutoff: cli.cutoff,
            grid: cli.grid,
            seed: cli.seed,
            threads: rayon::current_num_threads(),
            out: cli.out.clone(),
            precision: cli.precision,
            k,
            parity: cli.parity,
            pairs: cli.pairs,
            alpha_max: cli.alpha_max,
        })
    }
}
