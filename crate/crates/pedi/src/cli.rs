//! The `pedi` command line. Exit codes: 0 success, 2 usage error, 3 runtime
//! fault.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::Ordering;

use clap::{Args, Parser, Subcommand};
use pedi_core::control::OracleController;
use pedi_core::sim::{mix_seed, run_episode, NoHooks};
use pedi_core::tasks::{instantiate, ScriptedExpert, TaskId};

use crate::config::PediConfig;
use crate::dataset::{collect, CollectOptions, Dataset, DEFAULT_RECORDS, DEFAULT_TRAJECTORIES};
use crate::paramfile::{eval_columns, evaluate, parse_params};
use crate::report::tracking_report;
use crate::teleop::{Server, Session, SessionOptions, DEFAULT_SESSION_SECONDS};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pedi", version, about = "Quadruped loco-manipulation trajectory toolkit")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "PEDI_CONFIG")]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set controller.kp=40`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Seed for everything random in the command.
    #[arg(long, global = true, env = "PEDI_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a parameter file's curve and orientation at phase values.
    EvalCurve(EvalCurveArgs),
    /// Collect scripted-expert demonstrations into a dataset file.
    Collect(CollectArgs),
    /// Run scripted-expert episodes and report tracking errors over time.
    EvalTracking(EvalTrackingArgs),
    /// Serve a live teleoperation session.
    Serve(ServeArgs),
    /// Dump a dataset as CSV tables.
    Export(ExportArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Args)]
pub struct EvalCurveArgs {
    pub params: PathBuf,
    /// Comma-separated phase values in [0, 1].
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Add columns from the de Casteljau reference evaluation.
    #[arg(long)]
    pub oracle: bool,
    /// Comma-separated output instead of aligned columns.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long, short = 'n', default_value_t = DEFAULT_TRAJECTORIES)]
    pub trajectories: usize,
    #[arg(long, default_value_t = DEFAULT_RECORDS)]
    pub records: usize,
    /// Worker threads; defaults to the available cores.
    #[arg(long, env = "PEDI_WORKERS")]
    pub workers: Option<usize>,
    /// Also store the controller actions of every planner period.
    #[arg(long)]
    pub actions: bool,
    /// Output file; defaults to `<task>.pdset`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalTrackingArgs {
    /// One task; all nine when omitted.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Write the per-tick table here and print only the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Session length in simulated seconds.
    #[arg(long, default_value_t = DEFAULT_SESSION_SECONDS)]
    pub seconds: f64,
    /// Directory for recorded trajectories.
    #[arg(long, default_value = "recordings")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub dataset: PathBuf,
    /// Output directory for records.csv and clouds.csv.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) | Error::Parse { .. } => EXIT_USAGE,
        Error::Core(pedi_core::Error::UnknownTask(_)) => EXIT_USAGE,
        _ => EXIT_FAULT,
    }
}

/// Parses `args` and runs the command, writing to `out` and `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn task(name: &str) -> Result<TaskId> {
    Ok(TaskId::from_name(name)?)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = PediConfig::load(cli.config.as_deref(), std::env::vars(), &cli.set)?;
    match &cli.command {
        Command::EvalCurve(a) => eval_curve(a, out),
        Command::Collect(a) => cmd_collect(&cfg, cli.seed, a, out),
        Command::EvalTracking(a) => eval_tracking(&cfg, cli.seed, a, out),
        Command::Serve(a) => serve(&cfg, cli.seed, a, out, err),
        Command::Export(a) => {
            let ds = Dataset::load(&a.dataset)?;
            let (r, c) = ds.export_csv(&a.out)?;
            writeln!(out, "wrote {} and {}", r.display(), c.display())?;
            Ok(())
        }
        Command::Config => {
            write!(out, "{}", cfg.render())?;
            Ok(())
        }
    }
}

fn eval_curve(a: &EvalCurveArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.params).map_err(|e| Error::io(&a.params, e))?;
    let params = parse_params(&text, &a.params.display().to_string())?;
    if let Some(t) = a.t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Usage(format!("phase {t} outside [0, 1]")));
    }
    let rows = evaluate(&params, &a.t, a.oracle)?;
    let sep = if a.csv { "," } else { " " };
    let mut s = eval_columns(a.oracle).join(sep);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12}")).collect();
        s.push_str(&cells.join(sep));
        s.push('\n');
    }
    match &a.out {
        Some(p) => std::fs::write(p, s).map_err(|e| Error::io(p, e))?,
        None => out.write_all(s.as_bytes())?,
    }
    Ok(())
}

fn cmd_collect(cfg: &PediConfig, seed: u64, a: &CollectArgs, out: &mut dyn Write) -> Result<()> {
    let task = task(&a.task)?;
    let mut opts = CollectOptions::new(task);
    opts.trajectories = a.trajectories;
    opts.records = a.records;
    opts.seed = seed;
    opts.actions = a.actions;
    if let Some(w) = a.workers {
        opts.workers = w;
    }
    let path = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.pdset", task.name())));
    let report = collect(cfg, &opts)?;
    report.dataset.save(&path)?;
    writeln!(
        out,
        "{}: {} trajectories x {} records from {} episodes in {:.1} s with {} workers",
        task.name(),
        report.dataset.trajectories.len(),
        opts.records,
        report.attempted,
        report.wall.as_secs_f64(),
        opts.workers
    )?;
    writeln!(out, "excluded: {}", report.exclusions.len())?;
    for e in &report.exclusions {
        writeln!(out, "  seed {}: {}", e.seed, e.reason)?;
    }
    writeln!(out, "body sha256: {}", report.dataset.body_sha256()?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn eval_tracking(cfg: &PediConfig, seed: u64, a: &EvalTrackingArgs, out: &mut dyn Write) -> Result<()> {
    if a.runs == 0 {
        return Err(Error::Usage("--runs must be at least 1".to_string()));
    }
    let tasks = match &a.task {
        Some(name) => vec![task(name)?],
        None => TaskId::ALL.to_vec(),
    };
    let mut episodes = Vec::new();
    for t in tasks {
        for i in 0..a.runs {
            let s = mix_seed(seed, i as u64);
            let world = instantiate(t, s, &cfg.model, cfg.sim)?;
            let controller = OracleController::new(cfg.model.clone(), cfg.controller)?;
            let mut planner = ScriptedExpert::for_task(t, cfg.task)?;
            let ep = run_episode(world, controller, &mut planner, cfg.episode_config(20.0), s, &mut NoHooks)?;
            episodes.push((format!("{}#{i}", t.name()), ep.log));
        }
    }
    let logs: Vec<(String, &[_])> = episodes.iter().map(|(l, e)| (l.clone(), e.as_slice())).collect();
    let report = tracking_report(&logs)?;
    match &a.out {
        Some(p) => {
            std::fs::write(p, report.to_table()).map_err(|e| Error::io(p, e))?;
            for line in report.summary_lines() {
                writeln!(out, "{line}")?;
            }
            writeln!(out, "wrote {}", p.display())?;
        }
        None => out.write_all(report.to_table().as_bytes())?,
    }
    Ok(())
}

fn serve(cfg: &PediConfig, seed: u64, a: &ServeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let task = task(&a.task)?;
    if !(a.seconds > 0.0) {
        return Err(Error::Usage("--seconds must be positive".to_string()));
    }
    let mut opts = SessionOptions::new(task, seed, &a.out);
    opts.seconds = a.seconds;
    let session = Session::new(cfg, opts)?;
    let server = Server::start(session, &format!("{}:{}", a.bind, a.port))?;
    let stop = server.stop_flag();
    if let Err(e) = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)) {
        writeln!(err, "warning: no signal handler ({e}); stop with the process manager")?;
    }
    writeln!(out, "serving {} on {}", task.name(), server.local_addr())?;
    out.flush()?;
    let session = server.join()?;
    writeln!(out, "stopped {} after {} ticks", session.id(), session.tick())?;
    Ok(())
}
