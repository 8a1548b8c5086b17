use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reachkit::scenario::{
    emit_plots, emit_report, families, run_scenarios, ConfigFile, ReportFormat, ScenarioConfig, ScenarioError,
    ScenarioPlan, ScenarioResult,
};

#[derive(Parser)]
#[command(name = "reachkit", version, about = "Reach and extrinsic curvature checks on analytic submanifolds")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "REACHKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in scenario registry.
    List,
    /// Run the scenarios of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Directory for SVG plots.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Run one built-in scenario with its defaults and print its checks.
    Check {
        scenario: String,
        /// Also write the full report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

fn init_threads(threads: Option<usize>) -> Result<(), ScenarioError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(ScenarioError::Config("thread count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ScenarioError::Config(e.to_string()))
}

fn list() {
    for f in families() {
        let params: Vec<String> = f.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{:<34} {:<28} {}", f.name, params.join(" "), f.description);
    }
}

fn execute(plans: &[ScenarioPlan]) -> Result<Vec<ScenarioResult>, ScenarioError> {
    run_scenarios(plans).into_iter().collect()
}

fn summarize(results: &[ScenarioResult]) {
    for r in results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {} (tau-hat {:.6}, {:.2} s)", r.name, r.collision.tau_hat, r.wall_time_s);
        for c in r.checks.iter().filter(|c| !c.pass) {
            eprintln!("  failed {}: lhs {:e} rhs {:e} residual {:e}", c.check, c.lhs, c.rhs, c.residual);
        }
    }
}

fn write_outputs(
    plans: &[ScenarioPlan],
    results: &[ScenarioResult],
    format: ReportFormat,
    out: Option<&Path>,
    plots: Option<&Path>,
) -> Result<(), ScenarioError> {
    emit_report(plans, results, format, out)?;
    if let Some(dir) = plots {
        emit_plots(results, dir)?;
    }
    Ok(())
}

fn verdict(results: &[ScenarioResult]) -> u8 {
    if results.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}

fn main_inner(cli: Cli) -> Result<u8, ScenarioError> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::List => {
            list();
            Ok(0)
        }
        Command::Run {
            config,
            out,
            format,
            plots,
        } => {
            let file = ConfigFile::load(&config)?;
            let plans = file.plans()?;
            let format = format.map(ReportFormat::from).or(file.output.format).unwrap_or_default();
            let out = out.or(file.output.report.clone());
            let plots = plots.or(file.output.plots.clone());
            let results = execute(&plans)?;
            summarize(&results);
            write_outputs(&plans, &results, format, out.as_deref(), plots.as_deref())?;
            Ok(verdict(&results))
        }
        Command::Check {
            scenario,
            out,
            format,
            plots,
        } => {
            let plans = vec![ScenarioConfig::builtin(&scenario).resolve()?];
            let results = execute(&plans)?;
            summarize(&results);
            println!("{:<32} {:>14} {:>14} {:>12} pass", "check", "lhs", "rhs", "residual");
            for c in &results[0].checks {
                println!("{:<32} {:>14.8} {:>14.8} {:>12.3e} {}", c.check, c.lhs, c.rhs, c.residual, c.pass);
            }
            if let Some(path) = out.as_deref() {
                emit_report(&plans, &results, format.into(), Some(path))?;
            }
            if let Some(dir) = plots.as_deref() {
                emit_plots(&results, dir)?;
            }
            Ok(verdict(&results))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
