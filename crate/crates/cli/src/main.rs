//! `involute` command-line front end.

mod commands;
mod inputs;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use involute::qform::FormSource;
use involute::solver::DEFAULT_TOL;
use involute::system::Params;

use commands::{Ctx, QFormArgs, SolveArgs};
use report::{InputDigest, RunReport, Timings};

#[derive(Debug, Parser)]
#[command(name = "involute", version, about = "Checks, complexes, quadratic forms and grid solves for first-order PDE systems")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Also write the report to this path.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,

    /// Include per-stage wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RankArg {
    IncludeZeroOrder,
    PrincipalOnly,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SourceArg {
    UseE,
    UseD,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Involutivity checks (all when no flag is given)
    Check {
        system: PathBuf,
        #[arg(long)]
        a1: bool,
        #[arg(long)]
        a2: bool,
        #[arg(long)]
        a3: bool,
        #[arg(long, value_enum)]
        rank: Option<RankArg>,
    },
    /// Prove that consecutive operators of the complex compose to zero
    Complex {
        system: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        /// Also verify the formal adjoint
        #[arg(long)]
        adjoint: bool,
    },
    /// Verify the formal adjoint and the divergence certificate
    Adjoint {
        system: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        /// Random cochain pairs per level
        #[arg(long, default_value_t = 10)]
        pairs: usize,
    },
    /// Hermitian quadratic form of a weight
    Qform {
        system: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        /// Single point, comma separated
        #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
        point: Option<Vec<f64>>,
        /// Samples per axis over the system box
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, value_enum, default_value = "use-e")]
        source: SourceArg,
    },
    /// Weighted least-squares solve of P_q u = f on a grid
    Solve {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        rhs: PathBuf,
        /// Nodes per axis; resamples expression right-hand sides
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        weight: Option<String>,
        #[arg(long)]
        maxit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve p_j eta = a_j^0 on the system box
    Eta {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split an additive Cousin datum
    Cousin { config: PathBuf },
    /// Write a builtin system file
    Builtin {
        name: String,
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        m: Option<i64>,
        #[arg(long)]
        r: Option<i64>,
        #[arg(long)]
        deg: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Complex { .. } => "complex",
            Command::Adjoint { .. } => "adjoint",
            Command::Qform { .. } => "qform",
            Command::Solve { .. } => "solve",
            Command::Eta { .. } => "eta",
            Command::Cousin { .. } => "cousin",
            Command::Builtin { .. } => "builtin",
        }
    }
}

fn run(cli: Cli) -> RunReport {
    let name = cli.command.name();
    let mut ctx = Ctx { seed: cli.seed, tol: cli.tol, digest: InputDigest::default(), timings: Timings::new() };
    let outcome = match cli.command {
        Command::Check { system, a1, a2, a3, rank } => {
            let mut ids = Vec::new();
            for (on, id) in [(a1, "a1"), (a2, "a2"), (a3, "a3")] {
                if on {
                    ids.push(id);
                }
            }
            match rank {
                Some(RankArg::IncludeZeroOrder) => ids.push("rank-full"),
                Some(RankArg::PrincipalOnly) => ids.push("rank-principal"),
                None => {}
            }
            commands::check(&mut ctx, &system, ids)
        }
        Command::Complex { system, q, adjoint } => commands::complex(&mut ctx, &system, q, adjoint),
        Command::Adjoint { system, q, pairs } => commands::adjoint(&mut ctx, &system, q, pairs),
        Command::Qform { system, phi, point, grid, q, source } => {
            let source = match source {
                SourceArg::UseE => FormSource::UseE,
                SourceArg::UseD => FormSource::UseD,
            };
            commands::qform(&mut ctx, &system, QFormArgs { phi, point, grid, q, source })
        }
        Command::Solve { system, q, rhs, grid, weight, maxit, out } => {
            commands::solve(&mut ctx, SolveArgs { system, q, rhs, grid, weight, maxit, out })
        }
        Command::Eta { system, grid, out } => commands::eta(&mut ctx, &system, grid, out.as_deref()),
        Command::Cousin { config } => commands::cousin(&mut ctx, &config),
        Command::Builtin { name, n, m, r, deg, out } => {
            let params: Params = [("n", n), ("m", m), ("r", r), ("deg", deg)]
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
                .collect();
            commands::builtin(&mut ctx, &name, params, out.as_deref())
        }
    };
    let Ctx { seed, digest, timings, .. } = ctx;
    match outcome {
        Ok(o) => RunReport::assemble(name, digest.finish(), seed, o, cli.timings.then_some(timings)),
        Err(e) => RunReport::input_error(name, digest.finish(), seed, e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let json_out = cli.json_out.clone();
    let report = run(cli);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    for c in &report.checks {
        eprintln!("{} {}", if c.pass { "pass" } else { "FAIL" }, c.id);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    if let Some(path) = json_out {
        if let Err(e) = std::fs::write(&path, &text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(report.exit_code as u8)
}
