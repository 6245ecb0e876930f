use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blindbeam::experiment::{run, ExperimentConfig, ExperimentError, ExperimentKind, Overrides};

/// Blind multi-IRS beamforming experiments. Rows go to --out (or stdout) as
/// CSV; summary lines are appended as `#` comments and echoed on stderr.
#[derive(Debug, Parser)]
#[command(name = "blindbeam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (rayon default when absent).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write per-trial JSON details to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Keep every CSM sample batch in the JSON details.
    #[arg(long, global = true)]
    trace: bool,
    /// Override any config key, e.g. `--set N=8,16,32`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boost versus N with a log-log slope per method.
    Scaling,
    /// Every method on the same scenario realisations.
    Compare,
    /// How often the optimality conditions hold on random deployments.
    Conditions,
    /// Worst-case fixtures: decisions and power growth.
    Examples,
    /// Bound on the deviation between the blind decisions and the
    /// approximate continuous optimum.
    LemmaCheck,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Scaling => ExperimentKind::Scaling,
            Command::Compare => ExperimentKind::Compare,
            Command::Conditions => ExperimentKind::Conditions,
            Command::Examples => ExperimentKind::Examples,
            Command::LemmaCheck => ExperimentKind::LemmaCheck,
        }
    }
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn overrides(g: &Global) -> Result<Overrides, String> {
    let set = g
        .set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Overrides {
        seed: g.seed,
        trials: g.trials,
        output: g.out.clone(),
        threads: g.threads,
        json: g.json.as_ref().map(|_| true),
        trace: g.trace.then_some(true),
        set,
    })
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|e| ExperimentError::Io(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = match overrides(&cli.global) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match ExperimentConfig::load(Some(cli.command.kind()), cli.global.config.as_deref(), &o) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_ASSERTION });
        }
    };
    let csv = out.csv();
    let written = match &cfg.output {
        Some(p) => write(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    };
    let written = written.and_then(|_| match &cli.global.json {
        Some(p) => write(p, &serde_json::to_string_pretty(&out.details).expect("details serialise")),
        None => Ok(()),
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ASSERTION);
    }
    for line in &out.summary {
        eprintln!("{line}");
    }
    if out.passed() {
        ExitCode::SUCCESS
    } else {
        for f in &out.failures {
            eprintln!("FAIL: {f}");
        }
        ExitCode::from(EXIT_ASSERTION)
    }
}
