use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hh_core::report::emit_plot_data;
use hh_core::suite::{self, Command, ExperimentConfig};
use hh_core::Error;

/// Seeded verification suites and experiments for Fourier multipliers on the Heisenberg group.
///
/// Exit status: 0 when every check passes, 1 when a check fails or a run errors, 2 on usage errors.
/// HH_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "hh", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory for JSON reports and CSV files.
    #[arg(long)]
    out: Option<String>,
    /// Dimension n of H^n.
    #[arg(long)]
    n: Option<String>,
    /// Hermite truncation K.
    #[arg(long)]
    k: Option<String>,
    /// λ-grid as `min,max,ratio`.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Grid numbers: `radius,points` for z-grids or `half_width,z_points,t_points` for boxes.
    #[arg(long)]
    grid: Option<String>,
    /// Number of seeded test functions.
    #[arg(long)]
    functions: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Operator identities: plancherel, ladder, coefficients, derivations, gamma, corollary,
    /// approximate-identity, envelope or all.
    Identities {
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Moment slopes of the ψ_r kernels over a dyadic r-sweep.
    KernelDecay {
        /// Moment orders, e.g. `0,1,2`.
        #[arg(long)]
        l: Option<String>,
        /// `none`, `T`, `X<i>` or `Y<i>`.
        #[arg(long)]
        field: Option<String>,
        /// `a:b` with endpoints like `2^-6`.
        #[arg(long)]
        r_sweep: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Dyadic cubes, sparse families, sparse domination and the weak-type sweep.
    SparseExp {
        /// Truncation levels N, e.g. `2,4,6`.
        #[arg(long)]
        n_range: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// A_p characteristics and weighted norm ratios.
    WeightedExp {
        /// Exponents ε of the ρ^ε weights.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        n_range: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Heat kernels, functional calculus and the maximal bound on finite graphs.
    GraphExp {
        /// Spaces as `kind:size`, e.g. `path:128,grid2d:256`.
        #[arg(long)]
        spaces: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-emits plot CSVs and axis metadata from a report file.
    Report {
        path: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Resolution { .. } | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn configure(common: Common, extra: Vec<(&str, Option<String>)>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    let flags = [
        ("seed", common.seed),
        ("out", common.out),
        ("n", common.n),
        ("k", common.k),
        ("lambda-grid", common.lambda_grid),
        ("grid", common.grid),
        ("functions", common.functions),
    ];
    for (key, value) in flags.into_iter().chain(extra) {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg)
}

fn threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("HH_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Usage(format!("HH_THREADS: expected a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("HH_THREADS: {e}")))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    threads()?;
    let (command, cfg) = match cli.command {
        Cmd::Report { path, out } => {
            for p in emit_plot_data(&path, &out)? {
                println!("wrote {}", p.display());
            }
            return Ok(true);
        }
        Cmd::Identities { suite, common } => (Command::Identities, configure(common, vec![("suite", suite)])?),
        Cmd::KernelDecay { l, field, r_sweep, common } => {
            (Command::KernelDecay, configure(common, vec![("l", l), ("field", field), ("r-sweep", r_sweep)])?)
        }
        Cmd::SparseExp { n_range, common } => (Command::SparseExp, configure(common, vec![("n-range", n_range)])?),
        Cmd::WeightedExp { weights, p, n_range, common } => {
            (Command::WeightedExp, configure(common, vec![("weights", weights), ("p", p), ("n-range", n_range)])?)
        }
        Cmd::GraphExp { spaces, p, common } => (Command::GraphExp, configure(common, vec![("spaces", spaces), ("p", p)])?),
    };
    let reports = suite::run(command, &cfg)?;
    let mut pass = true;
    for rep in &reports {
        for c in &rep.checks {
            let value = c.value.map_or("non-finite".to_string(), |v| format!("{v:.3e}"));
            println!("{} {}/{} value={value} tolerance={:.1e}", if c.pass { "PASS" } else { "FAIL" }, rep.suite, c.name, c.tolerance);
        }
        for p in rep.write(&cfg.out_dir)? {
            println!("wrote {}", p.display());
        }
        pass &= rep.pass();
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hh: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
