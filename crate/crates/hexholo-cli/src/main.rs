//! `hexholo`: command-line driver for the hexagonator checks.
//!
//! Every subcommand prints deterministic JSON (or CSV where offered) and exits
//! nonzero when one of its assertions fails.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{AssocMethod, Report};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "hexholo", version, about = "Hexagonator series from 2-holonomies of the KZ 2-connection")]
struct Cli {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Truncation order N.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Single ε for commands that take one.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated, strictly decreasing ε grid.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    /// Output file (or directory for `all`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit CSV instead of JSON where the command has a table.
    #[arg(long, global = true, conflicts_with = "json")]
    csv: bool,
    /// Emit JSON (the default).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Multiple zeta values by two independent evaluators.
    Mzv {
        /// Comma-separated index, e.g. `2,1`; omit for the standard table.
        #[arg(long, value_delimiter = ',')]
        index: Option<Vec<u32>>,
    },
    /// The Drinfeld KZ associator by one of three routes.
    Associator {
        #[arg(long, value_enum, default_value = "lm")]
        method: AssocMethod,
    },
    /// List catalog paths or sample one.
    Paths {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        sample: Option<String>,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Parallel transport along a catalog 1-path.
    Transport {
        #[arg(long)]
        path: String,
    },
    /// Surface holonomy of a catalog 2-path with its grade-2 convergence.
    Holonomy {
        #[arg(long)]
        path2: String,
    },
    /// Fake flatness and 2-flatness at seeded random points.
    FlatnessCheck,
    /// Boundary contracts of every modification builder.
    DpartialCheck {
        #[arg(long)]
        all: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Pre-hexagonator: direct series and holonomy convergence.
    HexagonCheck,
    /// Breen polytope: symbolic identity, ad-relation lemma and 2-loop holonomy.
    BreenCheck,
    /// Run every check.
    All,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.order {
        cfg.order = n;
    }
    if let Some(g) = &cli.eps_grid {
        cfg.eps_grid = g.clone();
    }
    if let Some(t) = cli.quad_tol {
        cfg.rel_tol = t;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render(r: &Report, csv: bool) -> Result<String> {
    match (&r.csv, csv) {
        (Some(table), true) => Ok(table.clone()),
        _ => Ok(serde_json::to_string_pretty(&r.json)? + "\n"),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve_config(&cli)?;
    let first_eps = cli.eps.unwrap_or(cfg.eps_grid[0]);
    let report = match &cli.cmd {
        Cmd::Mzv { index } => commands::mzv(index.clone())?,
        Cmd::Associator { method } => commands::associator(&cfg, *method, cli.eps)?,
        Cmd::Paths { list, sample, n } => match sample {
            Some(key) if !list => commands::paths_sample(key, first_eps, *n)?,
            _ => commands::paths_list(),
        },
        Cmd::Transport { path } => commands::transport(&cfg, path, first_eps)?,
        Cmd::Holonomy { path2 } => commands::holonomy(&cfg, path2, cli.eps)?,
        Cmd::FlatnessCheck => commands::flatness(&cfg)?,
        Cmd::DpartialCheck { all, name } => {
            let filter = if *all { None } else { name.as_deref() };
            commands::dpartial(&cfg, filter)?
        }
        Cmd::HexagonCheck => commands::hexagon(&cfg, cli.eps)?,
        Cmd::BreenCheck => commands::breen(&cfg)?,
        Cmd::All => {
            let reports = commands::all(&cfg)?;
            let mut summary = serde_json::Map::new();
            let mut pass = true;
            for (name, r) in &reports {
                pass &= r.pass;
                summary.insert(name.clone(), serde_json::Value::Bool(r.pass));
                if let Some(dir) = &cfg.output {
                    std::fs::create_dir_all(dir)?;
                    emit(&render(r, false)?, Some(&dir.join(format!("{name}.json"))))?;
                }
            }
            let text = serde_json::to_string_pretty(&serde_json::json!({"command": "all", "results": summary, "pass": pass}))? + "\n";
            print!("{text}");
            return Ok(pass);
        }
    };
    emit(&render(&report, cli.csv)?, cfg.output.as_ref())?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
