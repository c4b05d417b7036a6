use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use susyprop_cli::commands::{self, evolve_csv, potential_csv, propagator_csv};
use susyprop_cli::config::{Example, ScenarioConfig};
use susyprop_cli::output::{json_bytes, write_atomic};
use susyprop_cli::verify;

/// Exact propagators for complex SUSY partners of the oscillator and the
/// free particle.
#[derive(Parser)]
#[command(name = "susyprop", version)]
struct Cli {
    /// Scenario file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path for the command's main dataset or report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks; recorded in the verify report.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Values that replace the corresponding scenario fields.
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true, value_parser = ["oscillator", "soliton"])]
    example: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    c_re: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    c_im: Option<f64>,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Method to run; repeat for several.
    #[arg(long = "method", global = true)]
    methods: Vec<String>,
    #[arg(long, global = true)]
    spectral_terms: Option<usize>,
    /// Times for `propagator` (lattice) or `evolve` (snapshots), comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    truncation_radius: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write x, Re V_c, Im V_c over the grid.
    Potential,
    /// Write K_c(x, y, t) on the lattice for each method.
    Propagator,
    /// Evolve the packet with each method and the Crank-Nicolson oracle.
    Evolve {
        /// Path of the JSON summary (default: next to the dataset).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the verification suite and write a JSON report.
    Verify {
        /// Run only checks whose name contains this; repeat for several.
        #[arg(long)]
        filter: Vec<String>,
        /// Override a tolerance, `name=value`; repeatable.
        #[arg(long = "tol", value_parser = parse_tolerance)]
        tolerances: Vec<(String, f64)>,
    },
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value.parse().map_err(|e| format!("tolerance for {name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn apply_overrides(cfg: &mut ScenarioConfig, o: &Overrides, command: &Command, seed: Option<u64>) {
    if let Some(e) = &o.example {
        cfg.example = if e == "soliton" { Example::Soliton } else { Example::Oscillator };
    }
    let p = &mut cfg.params;
    for (field, value) in [(&mut p.c_re, o.c_re), (&mut p.c_im, o.c_im), (&mut p.a, o.a), (&mut p.b, o.b)] {
        if let Some(v) = value {
            *field = v;
        }
    }
    if !o.methods.is_empty() {
        cfg.methods.run = o.methods.clone();
    }
    if let Some(n) = o.spectral_terms {
        cfg.methods.spectral_terms = n;
    }
    if !o.times.is_empty() {
        match command {
            Command::Evolve { .. } => cfg.evolution.t = o.times.clone(),
            _ => cfg.lattice.t = o.times.clone(),
        }
    }
    if let Some(v) = o.x_min {
        cfg.grid.x_min = v;
    }
    if let Some(v) = o.x_max {
        cfg.grid.x_max = v;
    }
    if let Some(n) = o.points {
        cfg.grid.points = n;
    }
    let q = &mut cfg.quadrature;
    for (field, value) in [(&mut q.abs_tol, o.abs_tol), (&mut q.rel_tol, o.rel_tol), (&mut q.truncation_radius, o.truncation_radius)] {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Command::Verify { filter, tolerances } = command {
        if !filter.is_empty() {
            cfg.verify.filter = filter.clone();
        }
        for (name, tol) in tolerances {
            cfg.verify.tolerances.insert(name.clone(), *tol);
        }
    }
    if let Some(s) = seed {
        cfg.verify.seed = s;
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".summary.json");
    out.with_file_name(name)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    apply_overrides(&mut cfg, &cli.overrides, &cli.command, cli.seed);
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("--threads")?;
    }

    match &cli.command {
        Command::Potential => {
            let path = cli.out.clone().unwrap_or(cfg.output.potential.clone());
            let rows = commands::potential(&cfg)?;
            write_atomic(&path, &potential_csv(&rows)?)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::Propagator => {
            let path = cli.out.clone().unwrap_or(cfg.output.propagator.clone());
            let rep = commands::propagator(&cfg)?;
            write_atomic(&path, &propagator_csv(&rep.rows)?)?;
            let flagged = rep.rows.iter().filter(|r| r.flag != "ok").count();
            eprintln!("wrote {} rows ({flagged} flagged) to {}", rep.rows.len(), path.display());
            for p in &rep.pairwise {
                eprintln!("max |K_{} - K_{}| = {:.3e}", p.a, p.b, p.max_abs_diff);
            }
        }
        Command::Evolve { summary } => {
            let path = cli.out.clone().unwrap_or(cfg.output.evolve.clone());
            let summary = match (summary, &cli.out) {
                (Some(s), _) => s.clone(),
                (None, Some(out)) => summary_path(out),
                (None, None) => cfg.output.evolve_summary.clone(),
            };
            let rep = commands::evolve(&cfg)?;
            write_atomic(&path, &evolve_csv(&rep.snapshots)?)?;
            write_atomic(&summary, &json_bytes(&rep.summary)?)?;
            for ts in &rep.summary.times {
                if let Some(m) = ts.max_pairwise_rel_l2 {
                    eprintln!("t = {}: max pairwise relative L2 = {m:.3e}", ts.t);
                }
                for f in &ts.failures {
                    eprintln!("t = {}: {} failed: {}", ts.t, f.method, f.error);
                }
            }
            eprintln!("wrote {} and {}", path.display(), summary.display());
        }
        Command::Verify { .. } => {
            let path = cli.out.clone().unwrap_or(cfg.output.verify.clone());
            let rep = verify::run(&cfg)?;
            write_atomic(&path, &json_bytes(&rep)?)?;
            for c in &rep.checks {
                let metric = c.metric.map_or("n/a".to_string(), |m| format!("{m:.3e}"));
                println!(
                    "[{}] {}: {metric} (tolerance {:.1e}) [{:.1} s]",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.tolerance,
                    c.seconds
                );
            }
            let passed = rep.checks.iter().filter(|c| c.pass).count();
            println!("{passed} of {} checks passed; report in {}", rep.checks.len(), path.display());
            return Ok(rep.all_pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
