use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use pharmonic_cli::runner::{self, Failure};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pharmonic", version, about = "p-harmonic maps to the circle on 2D lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its artifacts.
    Run(RunArgs),
    /// Check a configuration and print it fully resolved.
    Validate(ConfigArgs),
    /// Run the closed-form oracle checks.
    Oracle(RunArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Sectioned key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides such as `schedule.p=1.5,1.9` or `n=64`.
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn overrides(&self, experiment: Option<&str>) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(e) = experiment {
            o.push(format!("experiment.name={e}"));
        }
        o.extend(self.config.overrides.iter().cloned());
        if let Some(p) = &self.out {
            o.push(format!("experiment.out={}", p.display()));
        }
        if let Some(s) = self.seed {
            o.push(format!("experiment.seed={s}"));
        }
        if let Some(t) = self.threads {
            o.push(format!("experiment.threads={t}"));
        }
        o
    }
}

fn fail(e: Failure) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn run(args: &RunArgs, experiment: Option<&str>) -> ExitCode {
    let cfg = match runner::load(args.config.config.as_deref(), &args.overrides(experiment)) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    info!("running {} (config {})", cfg.experiment.name(), cfg.hash());
    match runner::run(&cfg) {
        Ok(summary) => {
            println!("{}", json!({"status": summary.status, "out": cfg.out.display().to_string(), "config_hash": summary.config_hash}));
            let all_pass = summary.results.get("all_pass").and_then(|v| v.as_bool());
            if all_pass == Some(false) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run(&args, None),
        Command::Oracle(args) => run(&args, Some("oracle-suite")),
        Command::Validate(args) => match runner::load(args.config.as_deref(), &args.overrides) {
            Ok(cfg) => {
                println!("{}", json!({"status": "ok", "config_hash": cfg.hash(), "config": cfg.echo()}));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
