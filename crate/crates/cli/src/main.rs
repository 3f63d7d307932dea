//! `rpinn`: run, sweep and inspect adaptive PINN experiments.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rpinn::config::{load_run_spec, RunSpec};
use rpinn::problems::{BurgersReference, BURGERS_NU};

#[derive(Parser)]
#[command(name = "rpinn", version, about = "PINN training with recovery-type adaptive sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train once and write reports, loss trace, point dumps and parameters.
    Run(SpecArgs),
    /// Train every point of the configured sweep.
    Sweep(SpecArgs),
    /// Estimate element errors of a checkpointed network.
    Estimate(SpecArgs),
    /// Write the Burgers reference grid.
    BurgersRef {
        #[arg(long, default_value_t = 256)]
        nx: usize,
        #[arg(long, default_value_t = 256)]
        nt: usize,
        /// Quadrature nodes per evaluation.
        #[arg(long, default_value_t = 4000)]
        nodes: usize,
        #[arg(long, default_value = "data/burgers_reference.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// JSON run specification.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` applied to the specification, e.g. `n1=500` or
    /// `lbfgs.history=20`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl SpecArgs {
    fn load(&self) -> Result<RunSpec, ExitCode> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(out) = &self.out {
            overrides.push(format!("out_dir={}", serde_string(&out.to_string_lossy())));
        }
        load_run_spec(&self.config, &overrides).map_err(|e| {
            eprintln!("config error in {}: {e}", self.config.display());
            ExitCode::from(1)
        })
    }
}

/// JSON string literal, so that paths are never read as numbers.
fn serde_string(s: &str) -> String {
    let escaped: String = s
        .chars()
        .flat_map(|c| match c {
            '"' | '\\' => vec!['\\', c],
            _ => vec![c],
        })
        .collect();
    format!("\"{escaped}\"")
}

fn runtime<T>(r: rpinn::Result<T>) -> Result<T, ExitCode> {
    r.map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn execute(cmd: Command) -> Result<(), ExitCode> {
    match cmd {
        Command::Run(args) => {
            let spec = args.load()?;
            let summary = runtime(spec.run())?;
            println!("{}", summary.line());
        }
        Command::Sweep(args) => {
            let spec = args.load()?;
            let runs = runtime(spec.sweep(|s| println!("{}", s.line())))?;
            println!(
                "{} runs, summary in {}",
                runs.len(),
                spec.out_dir.join("sweep_summary.csv").display()
            );
        }
        Command::Estimate(args) => {
            let spec = args.load()?;
            let global = runtime(spec.estimate())?;
            println!(
                "{}: global estimate {global:.6e}, per-element values in {}",
                spec.checkpoint_path().display(),
                spec.out_dir.join("eta.csv").display()
            );
        }
        Command::BurgersRef { nx, nt, nodes, out } => {
            let started = Instant::now();
            let r = runtime(BurgersReference::generate(nx, nt, nodes))?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                runtime(std::fs::create_dir_all(dir).map_err(Into::into))?;
            }
            runtime(r.save(&out))?;
            println!(
                "{}: {nx}x{nt} grid, nu = {BURGERS_NU:.6e}, {:.1}s",
                out.display(),
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
