//! `tectal`: config-driven front end for circuit statistics, propagation
//! checks, network training, ablation attribution and degradation scores.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tectal::pipeline::{self, Run, RunConfig};
use tectal::snn::{self, EvalMode};
use tectal::transfer::SweepKind;
use tectal::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "tectal", version, about, long_about = None)]
#[command(after_help = "Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Circuit JSON file, replacing synthesis.
    #[arg(long, global = true, conflicts_with = "synthesize")]
    matrix: Option<PathBuf>,
    /// Synthesise the surrogate circuit (the default without a config).
    #[arg(long, global = true)]
    synthesize: bool,
    /// Global seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Group configuration JSON.
    #[arg(long, global = true)]
    group_config: Option<PathBuf>,
    /// Output directory; relative paths are placed under $TECTAL_OUTPUT_ROOT
    /// when it is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Graph statistics and communities.
    Stats,
    /// Pulse propagation along source -> target pathways.
    Simulate(SimulateArgs),
    /// Train the network and save a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
    /// Ablation sweep with ESI and RSI rankings.
    Ablate(AblateArgs),
    /// Degradation scores from an accuracy sweep table.
    Scores(ScoresArgs),
    /// Markdown report from existing artifacts.
    Report,
    /// Every stage in order.
    Pipeline,
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Pathway names to run (default: all configured).
    #[arg(long = "pathway")]
    pathways: Vec<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Pulse length in steps.
    #[arg(long)]
    duration: Option<usize>,
    /// Simulated steps.
    #[arg(long)]
    window: Option<usize>,
    /// Skip the activity trace CSVs.
    #[arg(long)]
    no_trace: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    TeacherForced,
    FreeRunning,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint (default: model.json in the output directory).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
    #[arg(long, value_enum, default_value = "teacher-forced")]
    mode: Mode,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// Checkpoint (default: model.json in the output directory).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Comma-separated group names, or `all`.
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Budget,
    Noise,
}

#[derive(Debug, Args)]
struct ScoresArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// CSV with header `model,condition,accuracy` (default: bundled table).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn print_json<T: Serialize>(v: &T) -> tectal::Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn base_config(g: &Global) -> tectal::Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &g.matrix {
        cfg = cfg.with_matrix(m);
    } else if g.synthesize && cfg.synthesis.is_none() {
        cfg.matrix = None;
        cfg.synthesis = Some(tectal::circuit::defaults::synthesis_spec(cfg.seed));
    }
    if let Some(s) = g.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(p) = &g.group_config {
        cfg.groups = Some(p.clone());
    }
    if let Some(o) = &g.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, cmd: &Command) -> tectal::Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let f = &mut cfg.feasibility;
            if !a.pathways.is_empty() {
                for name in &a.pathways {
                    if !f.pathways.iter().any(|p| &p.name == name) {
                        return Err(Error::Config(format!("unknown pathway `{name}`")));
                    }
                }
                f.pathways.retain(|p| a.pathways.contains(&p.name));
            }
            if let Some(v) = a.amplitude {
                f.pulse.amplitude = v;
            }
            if let Some(v) = a.duration {
                f.pulse.duration = v;
            }
            if let Some(v) = a.window {
                f.pulse.window = v;
            }
            if a.no_trace {
                f.traces = false;
            }
        }
        Command::Train(a) => {
            if let Some(v) = a.epochs {
                cfg.train.epochs = v;
            }
            if let Some(v) = a.lr {
                cfg.train.lr = v;
            }
            if let Some(v) = a.horizon {
                cfg.train.horizon = v;
            }
        }
        Command::Ablate(a) => {
            if !a.groups.is_empty() {
                cfg.ablation.groups = a.groups.clone();
            }
            if let Some(v) = a.epsilon {
                cfg.ablation.epsilon = v;
            }
        }
        _ => {}
    }
    Ok(())
}

fn run(cli: Cli) -> tectal::Result<()> {
    let mut cfg = base_config(&cli.global)?;
    apply_overrides(&mut cfg, &cli.command)?;
    let run = Run::new(cfg)?;
    match cli.command {
        Command::Config => print!("{}", run.config.to_toml()),
        Command::Stats => print_json(&pipeline::cmd_stats(&run)?)?,
        Command::Simulate(_) => print_json(&pipeline::cmd_simulate(&run)?)?,
        Command::Train(_) => {
            let (_, doc) = pipeline::cmd_train(&run)?;
            println!(
                "held-out mse {:.6} (untrained {:.6}), selected epoch {}; wrote {}",
                doc.trained.mse,
                doc.untrained.mse,
                doc.selected_epoch,
                run.path("model.json").display()
            );
        }
        Command::Eval(a) => {
            let ckpt = a.checkpoint.unwrap_or_else(|| run.path("model.json"));
            let split = match a.split {
                Split::Train => "train",
                Split::Val => "val",
                Split::Test => "test",
            };
            let mode = match a.mode {
                Mode::TeacherForced => EvalMode::TeacherForced,
                Mode::FreeRunning => EvalMode::FreeRunning,
            };
            print_json(&pipeline::cmd_eval(&run, &ckpt, split, mode)?)?;
        }
        Command::Ablate(a) => {
            let ckpt = a.checkpoint.unwrap_or_else(|| run.path("model.json"));
            let (model, _) = snn::load_checkpoint(&ckpt)?;
            let doc = pipeline::cmd_ablate(&run, &model)?;
            print!("{}", tectal::attribution::markdown_table(&doc.report));
        }
        Command::Scores(a) => {
            let kind = match a.kind {
                Kind::Budget => SweepKind::Budget,
                Kind::Noise => SweepKind::Noise,
            };
            let doc = pipeline::cmd_scores(&run, kind, a.table.as_deref(), a.model.as_deref())?;
            for s in &doc.scores {
                println!("{}\t{:.2}", s.model, s.score);
            }
        }
        Command::Report => print!("{}", pipeline::cmd_report(&run)?),
        Command::Pipeline => {
            let r = pipeline::cmd_pipeline(&run)?;
            println!(
                "held-out mse {:.6}; energy candidate {}; robustness candidate {}; artifacts in {}",
                r.training.trained.mse,
                r.ablation.report.energy_candidate.as_ref().map_or("none", |c| c.group.as_str()),
                r.ablation.report.robustness_candidate.as_ref().map_or("none", |c| c.group.as_str()),
                run.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
