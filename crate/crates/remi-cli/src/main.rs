//! `remi`: demonstration generation, reward-machine inference, evaluation,
//! and DOT export for the shipped benchmarks or user grid files.

mod config;
mod dot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use remi::envs::{evaluate, generate_demonstration, make_env};
use remi::{anneal_chains, Demonstration, GridSpec, LabeledMdp, RewardMachine};

use config::{RunConfig, Source, UsageError};

#[derive(Parser)]
#[command(
    name = "remi",
    version,
    about = "Infer reward machines from expert demonstrations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample expert demonstrations from a benchmark's true machine
    Demo(CommonArgs),
    /// Infer a reward machine from a demonstration file
    Infer(InferArgs),
    /// Score an inferred machine against the demonstrating expert
    Eval(EvalArgs),
    /// Render a reward machine file as Graphviz DOT on stdout
    ExportDot(ExportDotArgs),
    /// Demo, infer, eval, and export in one run
    Pipeline(CommonArgs),
}

/// Options shared by every pipeline stage. Unset values fall back to the
/// config file, then to the environment's defaults.
#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// Shipped benchmark: recharge, coffee, or multi_coffee
    #[arg(long)]
    env: Option<String>,
    /// Grid file to load instead of a shipped benchmark
    #[arg(long)]
    grid: Option<PathBuf>,
    /// key=value file supplying any of the long options
    #[arg(long)]
    config: Option<PathBuf>,
    /// Demonstration episodes to record
    #[arg(long)]
    runs: Option<usize>,
    /// Steps per episode
    #[arg(long)]
    ep_len: Option<usize>,
    /// Episodes per side when scoring expert vs agent
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Machine states in every hypothesis
    #[arg(long)]
    n: Option<usize>,
    /// Annealing proposals per chain
    #[arg(long, alias = "N")]
    iterations: Option<usize>,
    /// Boltzmann rationality assumed during inference
    #[arg(long)]
    alpha: Option<f64>,
    /// Boltzmann rationality of the demonstrating expert
    #[arg(long)]
    alpha_expert: Option<f64>,
    /// Discount factor for all solvers
    #[arg(long)]
    gamma: Option<f64>,
    /// Initial temperature
    #[arg(long)]
    t0: Option<f64>,
    /// Temperature floor
    #[arg(long)]
    t_min: Option<f64>,
    /// Temperature decay per period
    #[arg(long)]
    beta_t: Option<f64>,
    /// Initial perturbance
    #[arg(long)]
    p0: Option<f64>,
    /// Perturbance floor
    #[arg(long)]
    p_min: Option<f64>,
    /// Perturbance decay per period
    #[arg(long)]
    beta_p: Option<f64>,
    /// Iterations between schedule decays
    #[arg(long)]
    k: Option<usize>,
    /// Prior probability of a self-loop transition entry
    #[arg(long)]
    pt: Option<f64>,
    /// Prior probability of a zero reward entry
    #[arg(long)]
    pr: Option<f64>,
    /// Independent annealing chains
    #[arg(long)]
    chains: Option<usize>,
    /// Seed making the whole invocation reproducible
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    /// Demonstration file to fit
    #[arg(long)]
    demo: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Reward machine file to score
    #[arg(long)]
    rm: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ExportDotArgs {
    /// Reward machine file to render
    #[arg(long)]
    rm: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Demo(args) => args.resolve().map_err(Fail::from).and_then(cmd_demo),
        Command::Infer(args) => {
            args.common.resolve().map_err(Fail::from).and_then(|cfg| cmd_infer(cfg, &args.demo))
        }
        Command::Eval(args) => {
            args.common.resolve().map_err(Fail::from).and_then(|cfg| cmd_eval(cfg, &args.rm))
        }
        Command::ExportDot(args) => cmd_export_dot(&args.rm),
        Command::Pipeline(args) => args.resolve().map_err(Fail::from).and_then(cmd_pipeline),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Fail::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Failure modes with distinct exit codes: 2 for bad invocations, 1 for
/// runtime errors. Argument syntax errors exit 2 via clap itself.
enum Fail {
    Usage(String),
    Run(String),
}

impl From<UsageError> for Fail {
    fn from(e: UsageError) -> Self {
        Fail::Usage(e.0)
    }
}

impl From<remi::Error> for Fail {
    fn from(e: remi::Error) -> Self {
        Fail::Run(e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Run(e.to_string())
    }
}

fn load_mdp(cfg: &RunConfig) -> Result<LabeledMdp, Fail> {
    match &cfg.source {
        Source::Env(name) => Ok(make_env(name)?.mdp),
        Source::Grid(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(GridSpec::parse(&text)?.compile()?)
        }
    }
}

fn write_out(cfg: &RunConfig, name: &str, contents: &str) -> Result<PathBuf, Fail> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_demo(cfg: RunConfig) -> Result<(), Fail> {
    let demo = run_demo(&cfg)?;
    write_out(&cfg, "demonstration.txt", &demo.to_text())?;
    println!("{} triples", demo.n_triples());
    Ok(())
}

fn run_demo(cfg: &RunConfig) -> Result<Demonstration, Fail> {
    let env = make_env(cfg.env_name()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let demo = generate_demonstration(
        &env.mdp,
        &env.machine,
        cfg.alpha_expert,
        &cfg.demo_params(),
        &mut rng,
    )?;
    Ok(demo)
}

fn cmd_infer(cfg: RunConfig, demo_path: &Path) -> Result<(), Fail> {
    let mdp = load_mdp(&cfg)?;
    let text = std::fs::read_to_string(demo_path)?;
    let demo = Demonstration::parse(&text, &mdp)?;
    let best_score = run_infer(&cfg, &mdp, &demo)?;
    println!("best score {best_score}");
    Ok(())
}

fn run_infer(cfg: &RunConfig, mdp: &LabeledMdp, demo: &Demonstration) -> Result<f64, Fail> {
    let anneal_cfg = cfg.anneal_config()?;
    let (outcome, traces) = anneal_chains(mdp, demo, &anneal_cfg, cfg.seed, cfg.chains)?;
    for (i, trace) in traces.iter().enumerate() {
        write_out(cfg, &format!("trace_chain{i}.csv"), &trace.to_csv())?;
    }
    write_out(cfg, "inferred.rm", &outcome.best.to_json())?;
    Ok(outcome.best_score)
}

fn cmd_eval(cfg: RunConfig, rm_path: &Path) -> Result<(), Fail> {
    let rm = RewardMachine::from_json(&std::fs::read_to_string(rm_path)?)?;
    let report = run_eval(&cfg, &rm)?;
    print!("{}", report.to_text());
    Ok(())
}

fn run_eval(cfg: &RunConfig, rm: &RewardMachine) -> Result<remi::EvalReport, Fail> {
    let env = make_env(cfg.env_name()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report = evaluate(
        &env.mdp,
        &env.machine,
        rm,
        cfg.alpha_expert,
        &cfg.eval_params(),
        &mut rng,
    )?;
    write_out(cfg, "report.txt", &report.to_text())?;
    Ok(report)
}

fn cmd_export_dot(rm_path: &Path) -> Result<(), Fail> {
    let rm = RewardMachine::from_json(&std::fs::read_to_string(rm_path)?)?;
    print!("{}", dot::to_dot(&rm));
    Ok(())
}

fn cmd_pipeline(cfg: RunConfig) -> Result<(), Fail> {
    let env = make_env(cfg.env_name()?)?;
    let demo = run_demo(&cfg)?;
    write_out(&cfg, "demonstration.txt", &demo.to_text())?;
    let best_score = run_infer(&cfg, &env.mdp, &demo)?;
    let rm_path = cfg.out.join("inferred.rm");
    let rm = RewardMachine::from_json(&std::fs::read_to_string(rm_path)?)?;
    write_out(&cfg, "inferred.dot", &dot::to_dot(&rm))?;
    let report = run_eval(&cfg, &rm)?;
    write_out(&cfg, "summary.txt", &cfg.summary(report.expert_avg_return, report.agent_avg_return))?;
    println!("best score {best_score}");
    print!("{}", report.to_text());
    Ok(())
}
