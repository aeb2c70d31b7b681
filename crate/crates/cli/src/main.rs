use std::path::PathBuf;
use std::process::ExitCode;

use atomtf_cli::config::{Format, RunConfig};
use atomtf_cli::table::emit_table;
use atomtf_cli::{run, CliError, Command};
use clap::Parser;

#[derive(Parser)]
#[command(name = "atomtf", version, about = "Thomas-Fermi type atoms on a radial grid")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "Z", global = true, value_delimiter = ',', num_args = 1..)]
    z: Vec<f64>,
    #[arg(long = "N", global = true, value_delimiter = ',', num_args = 1..)]
    n: Vec<f64>,
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    kappa: Vec<f64>,
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    r: Vec<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Args {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for (flag, field) in [
            (&self.z, &mut cfg.z),
            (&self.n, &mut cfg.n),
            (&self.kappa, &mut cfg.kappa),
            (&self.r, &mut cfg.r),
        ] {
            if !flag.is_empty() {
                *field = flag.clone();
            }
        }
        cfg.out = self.out.clone().or(cfg.out);
        cfg.format = self.format.unwrap_or(cfg.format);
        cfg.jobs = self.jobs.or(cfg.jobs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        Ok(cfg)
    }
}

fn main_inner(args: &Args) -> Result<i32, CliError> {
    let cfg = args.config()?;
    let outcome = run(args.command, &cfg)?;
    let text = emit_table(&outcome.table, cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(outcome.status.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ATOMTF_LOG")).init();
    let args = Args::parse();
    let code = match main_inner(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("atomtf: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
