//! Command-line front end for the experiment harness.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scb_core::bandit::best_fixed_arm;
use scb_core::harness::{
    at_checkpoints, default_checkpoints, read_regret_series, run_experiment, run_sweep, summarize, write_summary,
    ExperimentConfig, MdpAlgorithm, RunLabels, SeedRegret, Setting,
};
use scb_core::mdp::io::{load_mdp, read_losses};
use scb_core::mdp::{best_policy_in_hindsight, max_reach_probability};
use scb_core::Error;

#[derive(Parser)]
#[command(name = "scb", version, about = "Scale-free bandit and MDP learners: experiments and oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bandit experiment.
    RunBandit(RunArgs),
    /// Run an MDP experiment.
    RunMdp {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        rates: RateArgs,
    },
    /// Run every variant of the config's [sweep] grid.
    Sweep(RunArgs),
    /// Best-in-hindsight and reachability oracles.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Aggregate trace files into a summary document.
    Summarize {
        /// Trace CSV files, one per seed.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the summary here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        fit_from: Option<u64>,
        #[arg(long)]
        fit_to: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long, env = "SCB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Seed list such as `1,2,5` or a half-open range `0..20`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    loss_scale: Option<f64>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Stop each exploration run early with this constant.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Best deterministic policy for the summed loss tables.
    BestPolicy {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long)]
        losses: PathBuf,
    },
    /// Largest probability of reaching each state (or one state).
    Reach {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long)]
        state: Option<usize>,
    },
    /// Best fixed arm of a loss matrix (CSV, one row per round).
    BestArm {
        #[arg(long)]
        losses: PathBuf,
    },
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        if a >= b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad seed `{x}`")))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

fn load(args: &RunArgs) -> scb_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = s.0.clone();
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(c) = args.loss_scale {
        cfg.loss_scale = c;
    }
    if args.name.is_some() {
        cfg.name = args.name.clone();
    }
    if let Some(d) = &args.output_dir {
        cfg.output_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("scb-output"))
}

fn require(cfg: &ExperimentConfig, setting: Setting) -> scb_core::Result<()> {
    if cfg.setting == setting {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "this subcommand needs setting = \"{}\"",
            match setting {
                Setting::Bandit => "bandit",
                Setting::Mdp => "mdp",
            }
        )))
    }
}

fn report(label: &str, out: &scb_core::harness::RunOutput) {
    let s = &out.summary;
    let mean = s.mean_regret.last().copied().unwrap_or(0.0);
    let slope = s.loglog_slope.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    emit(&format!(
        "{label}: {} seeds, T = {}, mean final regret {mean:.6e}, log-log slope {slope}",
        s.seeds.len(),
        s.horizon
    ));
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn print_json<T: serde::Serialize>(v: &T) {
    emit(&serde_json::to_string_pretty(v).expect("json value serializes"));
}

/// Seed encoded in a trace file name `<label>-seed<N>.csv`.
fn seed_from_name(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    stem.rsplit_once("-seed")?.1.parse().ok()
}

fn trace_setting(path: &Path) -> scb_core::Result<String> {
    let mut header = String::new();
    std::io::BufReader::new(std::fs::File::open(path)?).read_line(&mut header)?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    Ok(if cols.contains(&"phase") {
        "mdp"
    } else if cols.contains(&"arm") {
        "bandit"
    } else {
        "trace"
    }
    .into())
}

fn read_loss_matrix(path: &Path) -> scb_core::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Format { line: i + 1, message: format!("bad number `{}`", x.trim()) })
                })
                .collect()
        })
        .collect()
}

fn oracle(cmd: OracleCommand) -> scb_core::Result<()> {
    match cmd {
        OracleCommand::BestPolicy { mdp, losses } => {
            let m = load_mdp(&mdp)?;
            let (layers, tables) = read_losses(&std::fs::read_to_string(&losses)?)?;
            if &layers != m.layers() {
                return Err(Error::InvalidInput("loss file does not match the MDP's layers".into()));
            }
            let mut total = vec![0.0; layers.num_pairs()];
            for t in &tables {
                for (a, b) in total.iter_mut().zip(t) {
                    *a += b;
                }
            }
            let (pi, value) = best_policy_in_hindsight(&m, &total)?;
            let actions: Vec<usize> =
                (0..layers.num_states()).map(|s| pi.row(s).iter().position(|p| *p == 1.0).unwrap_or(0)).collect();
            print_json(&serde_json::json!({ "episodes": tables.len(), "value": value, "actions": actions }));
        }
        OracleCommand::Reach { mdp, state } => {
            let m = load_mdp(&mdp)?;
            let states: Vec<usize> = match state {
                Some(s) => vec![s],
                None => (0..m.layers().num_states()).collect(),
            };
            let reach = states
                .iter()
                .map(|s| max_reach_probability(&m, *s).map(|r| r.0))
                .collect::<scb_core::Result<Vec<_>>>()?;
            print_json(&serde_json::json!({ "states": states, "max_reach": reach }));
        }
        OracleCommand::BestArm { losses } => {
            let rows = read_loss_matrix(&losses)?;
            let (arm, total) = best_fixed_arm(&rows)?;
            print_json(&serde_json::json!({ "rounds": rows.len(), "arm": arm, "loss": total }));
        }
    }
    Ok(())
}

fn summarize_traces(
    traces: &[PathBuf],
    output: Option<PathBuf>,
    fit_from: Option<u64>,
    fit_to: Option<u64>,
) -> scb_core::Result<()> {
    let mut series = Vec::with_capacity(traces.len());
    for p in traces {
        let s = read_regret_series(std::fs::File::open(p)?)?;
        if s.is_empty() {
            return Err(Error::InvalidInput(format!("{} has no rows", p.display())));
        }
        series.push(s);
    }
    let horizon = series.iter().map(|s| s.last().expect("non-empty").0).min().expect("at least one trace");
    let checkpoints = default_checkpoints(horizon);
    let per_seed = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = seed_from_name(&traces[i]).unwrap_or(i as u64);
            Ok(SeedRegret { seed, regret: at_checkpoints(s, &checkpoints)? })
        })
        .collect::<scb_core::Result<Vec<_>>>()?;
    let labels =
        RunLabels { setting: trace_setting(&traces[0])?, algorithm: String::new(), environment: String::new() };
    let fit = (fit_from.unwrap_or(1), fit_to.unwrap_or(horizon));
    let summary = summarize(&labels, horizon, &checkpoints, &per_seed, Some(fit))?;
    match output {
        Some(path) => write_summary(&path, &summary)?,
        None => print_json(&summary),
    }
    Ok(())
}

fn execute(cli: Cli) -> scb_core::Result<()> {
    match cli.command {
        Command::RunBandit(args) => {
            let cfg = load(&args)?;
            require(&cfg, Setting::Bandit)?;
            let out = run_experiment(&cfg, Some(&output_dir(&cfg)))?;
            report(&cfg.label(), &out);
        }
        Command::RunMdp { run, rates } => {
            let mut cfg = load(&run)?;
            require(&cfg, Setting::Mdp)?;
            if let Some(spec) = cfg.mdp.as_mut() {
                let MdpAlgorithm::ScbRl { xi, beta, eta, gamma, delta, kappa, .. } = &mut spec.algorithm;
                for (slot, v) in [
                    (xi, rates.xi),
                    (beta, rates.beta),
                    (eta, rates.eta),
                    (gamma, rates.gamma),
                    (delta, rates.delta),
                    (kappa, rates.kappa),
                ] {
                    if v.is_some() {
                        *slot = v;
                    }
                }
            }
            let out = run_experiment(&cfg, Some(&output_dir(&cfg)))?;
            report(&cfg.label(), &out);
        }
        Command::Sweep(args) => {
            let cfg = load(&args)?;
            for (name, out) in run_sweep(&cfg, Some(&output_dir(&cfg)))? {
                report(&format!("{} [{name}]", cfg.label()), &out);
            }
        }
        Command::Oracle(cmd) => oracle(cmd)?,
        Command::Summarize { traces, output, fit_from, fit_to } => summarize_traces(&traces, output, fit_from, fit_to)?,
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Format { .. } => 2,
        Error::Numerical(_) | Error::InfeasibleConfidenceSet(_) => 3,
        Error::Environment(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
