use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use serm::commands::{run, write_error_record, Command, ErrorRecord};
use serm::config::RunConfig;
use serm::Error;

/// Strategic classification: train, evaluate and probe models under
/// simulated user responses.
#[derive(Parser)]
#[command(name = "serm", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model per seed; writes seed-<s>/model.txt and train_report.json.
    Train(Common),
    /// Evaluate a saved model on each seed's validation and test split.
    Evaluate(Common),
    /// Per-example responses to a saved model.
    Respond(Common),
    /// Sweep gamma, the cost scale t or lambda across seeds.
    Sweep(Common),
    /// Write the configured synthetic dataset as CSV.
    Synth(Common),
    /// Time training across batch sizes.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set cost.scale=2` (repeatable).
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set out=DIR`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Shorthand for `--set model=PATH`.
    #[arg(short, long)]
    model: Option<PathBuf>,
    /// Shorthand for `--set method=NAME`.
    #[arg(long)]
    method: Option<String>,
    /// Shorthand for `--set data=SOURCE`.
    #[arg(long)]
    data: Option<String>,
    /// Shorthand for `--set seeds=LIST`.
    #[arg(long)]
    seeds: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut all = self.set.clone();
        let path = |p: &PathBuf| p.display().to_string();
        for (key, value) in [
            ("out", self.out.as_ref().map(path)),
            ("model", self.model.as_ref().map(path)),
            ("method", self.method.clone()),
            ("data", self.data.clone()),
            ("seeds", self.seeds.clone()),
        ] {
            if let Some(v) = value {
                all.push(format!("{key}={v}"));
            }
        }
        all
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Train(a) => (Command::Train, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
        Cmd::Respond(a) => (Command::Respond, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Bench(a) => (Command::Bench, a),
    };
    let cfg = match RunConfig::resolve(args.config.as_deref(), &args.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e, args.out.as_deref(), 2),
    };
    match run(command, &cfg) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&cfg.out), 1),
    }
}

fn fail(e: &Error, out: Option<&std::path::Path>, code: u8) -> ExitCode {
    let record = ErrorRecord::from_error(e);
    if let Some(dir) = out {
        let _ = write_error_record(dir, &record);
    }
    eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
    ExitCode::from(code)
}
