use std::path::{Path, PathBuf};
use std::process::ExitCode;

use breakout::harness::{self, ExperimentConfig, PlotKind};
use breakout::policy::bind_with_model;
use breakout::{sim, Error, MdpModel, PolicySpec, ThresholdReport};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "breakout",
    version,
    about = "Backhaul-vs-core routing: MDP solver, simulator and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (CSV for `sweep`, JSON for the other subcommands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write SVG charts next to the sweep CSV.
    #[arg(long, global = true)]
    svg: bool,

    /// Master seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for `sweep`; 0 uses every available core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the MDP at the base parameters and print the result as JSON.
    Solve,
    /// Simulate the first configured policy at the base parameters.
    Simulate,
    /// Run the configured sweep and write CSV (and optionally SVG).
    Sweep,
    /// Print the optimal policy table and its threshold.
    Threshold,
}

#[derive(Serialize)]
struct ThresholdOutput {
    policy: Vec<breakout::Action>,
    threshold: Option<usize>,
    threshold_is_clean: bool,
    report: ThresholdReport,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    cfg.output.svg |= cli.svg;
    Ok(cfg)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("output serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Solve => {
            cfg.params.validate()?;
            let result = breakout::solve(&cfg.params, &cfg.delay)?;
            emit_json(&result, cfg.output.path.as_deref())
        }
        Command::Simulate => {
            let spec = cfg
                .policies
                .first()
                .copied()
                .unwrap_or(PolicySpec::MdpOptimal);
            let model = MdpModel::new(&cfg.params, &cfg.delay)?;
            let table = bind_with_model(spec, &model, None)?;
            let report = sim::run(&cfg.params, &cfg.delay, &table, &cfg.sim)?;
            emit_json(&report, cfg.output.path.as_deref())
        }
        Command::Threshold => {
            let result = breakout::solve(&cfg.params, &cfg.delay)?;
            let report = breakout::extract_threshold(&result)?;
            let out = ThresholdOutput {
                threshold: report.index(),
                threshold_is_clean: report.is_clean(),
                policy: result.policy,
                report,
            };
            emit_json(&out, cfg.output.path.as_deref())
        }
        Command::Sweep => {
            let path = cfg
                .output
                .path
                .clone()
                .ok_or_else(|| Error::Config("sweep needs --out or output.path".into()))?;
            let rows = harness::run_sweep(&cfg)?;
            harness::emit_csv(&rows, &path)?;
            if cfg.output.svg {
                harness::emit_plot(&rows, &sibling(&path, "_reward.svg"), PlotKind::Reward)?;
                harness::emit_plot(
                    &rows,
                    &sibling(&path, "_threshold.svg"),
                    PlotKind::Threshold,
                )?;
            }
            Ok(())
        }
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    let obj = ErrorObject {
        error: ErrorBody { kind, message },
    };
    eprintln!("{}", serde_json::to_string(&obj).expect("error serializes"));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string()),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
