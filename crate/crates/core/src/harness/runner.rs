//! Seed-parallel experiment execution.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Setting};
use super::summary::{summarize, RunLabels, SeedRegret, Summary};
use super::trace::{BanditRow, MdpRow, TraceWriter};
use crate::bandit::run_with;
use crate::error::{Error, Result};
use crate::mdp::best_policy_in_hindsight;
use crate::uob::{scb_rl_run, Phase, ScbRlConfig};

/// Result of one seed: the regret at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub regret: Vec<f64>,
    pub trace: Option<PathBuf>,
}

impl SeedOutcome {
    pub fn final_regret(&self) -> f64 {
        *self.regret.last().expect("the horizon is always a checkpoint")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcomes: Vec<SeedOutcome>,
    pub summary: Summary,
}

struct Checkpoints<'a> {
    at: &'a [u64],
    next: usize,
    values: Vec<f64>,
}

impl<'a> Checkpoints<'a> {
    fn new(at: &'a [u64]) -> Self {
        Checkpoints { at, next: 0, values: Vec::with_capacity(at.len()) }
    }

    fn record(&mut self, t: u64, regret: f64) {
        if self.at.get(self.next) == Some(&t) {
            self.values.push(regret);
            self.next += 1;
        }
    }
}

/// Runs one bandit seed. Regret is measured against the best arm of the
/// prefix `1..=t`, so the trace row at `t` is the regret of a run stopped
/// at `t`.
pub fn run_bandit_seed<W: Write>(
    cfg: &ExperimentConfig,
    seed: u64,
    checkpoints: &[u64],
    mut trace: Option<&mut TraceWriter<W>>,
) -> Result<Vec<f64>> {
    let spec = cfg.bandit.as_ref().ok_or_else(|| Error::Config("missing [bandit] section".into()))?;
    let mut adversary = spec.environment.build(seed, cfg.loss_scale)?;
    let n = spec.environment.num_arms();
    let mut totals = vec![0.0; n];
    let mut learner_total = 0.0;
    let mut cps = Checkpoints::new(checkpoints);
    run_with(&spec.algorithm, &mut adversary, cfg.horizon, seed, |r| {
        for (t, l) in totals.iter_mut().zip(&r.losses) {
            *t += l;
        }
        learner_total += r.loss;
        let comparator = totals.iter().copied().fold(f64::INFINITY, f64::min);
        let regret = learner_total - comparator;
        cps.record(r.round, regret);
        if let Some(w) = trace.as_deref_mut() {
            w.write_bandit(&BanditRow {
                t: r.round,
                arm: r.arm,
                loss: r.loss,
                cumulative_loss: learner_total,
                comparator_loss: comparator,
                cumulative_regret: regret,
                threshold: r.threshold_after,
            })?;
        }
        Ok(())
    })?;
    Ok(cps.values)
}

/// Runs one MDP seed. The learner's loss is the expected loss of the
/// policy it played under the true kernel; the comparator is the best
/// policy for the prefix's cumulative loss table.
pub fn run_mdp_seed<W: Write>(
    cfg: &ExperimentConfig,
    seed: u64,
    checkpoints: &[u64],
    mut trace: Option<&mut TraceWriter<W>>,
) -> Result<Vec<f64>> {
    let spec = cfg.mdp.as_ref().ok_or_else(|| Error::Config("missing [mdp] section".into()))?;
    let (mdp, mut adversary) = spec.environment.build(seed, cfg.loss_scale)?;
    let config = ScbRlConfig::resolve(mdp.layers(), cfg.horizon, &spec.algorithm.params())?;
    let mut cumulative = vec![0.0; mdp.layers().num_pairs()];
    let mut learner_total = 0.0;
    let mut cps = Checkpoints::new(checkpoints);
    scb_rl_run(&mdp, &mut adversary, &config, seed, |r| {
        for (c, l) in cumulative.iter_mut().zip(&r.losses) {
            *c += l;
        }
        learner_total += r.expected_loss;
        let comparator = best_policy_in_hindsight(&mdp, &cumulative)?.1;
        let regret = learner_total - comparator;
        cps.record(r.episode, regret);
        if let Some(w) = trace.as_deref_mut() {
            w.write_mdp(&MdpRow {
                t: r.episode,
                phase: match r.phase {
                    Phase::Explore { target } => format!("explore:{target}"),
                    Phase::Learn => "learn".into(),
                },
                trajectory: r.trajectory.fingerprint(),
                loss: r.realized_loss(),
                expected_loss: r.expected_loss,
                cumulative_loss: learner_total,
                comparator_loss: comparator,
                cumulative_regret: regret,
                thresholds: r.thresholds.clone(),
            })?;
        }
        Ok(())
    })?;
    Ok(cps.values)
}

fn trace_path(dir: &Path, cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    dir.join(format!("{}-seed{seed}.csv", cfg.label()))
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, checkpoints: &[u64], dir: Option<&Path>) -> Result<SeedOutcome> {
    let (regret, trace) = match dir {
        None => {
            let none: Option<&mut TraceWriter<std::io::Sink>> = None;
            let r = match cfg.setting {
                Setting::Bandit => run_bandit_seed(cfg, seed, checkpoints, none)?,
                Setting::Mdp => run_mdp_seed(cfg, seed, checkpoints, none)?,
            };
            (r, None)
        }
        Some(dir) => {
            let path = trace_path(dir, cfg, seed);
            let file = BufWriter::new(File::create(&path)?);
            let r = match cfg.setting {
                Setting::Bandit => {
                    let mut w = TraceWriter::bandit(file)?;
                    let r = run_bandit_seed(cfg, seed, checkpoints, Some(&mut w))?;
                    w.finish()?;
                    r
                }
                Setting::Mdp => {
                    let spec = cfg.mdp.as_ref().ok_or_else(|| Error::Config("missing [mdp] section".into()))?;
                    let h = spec.environment.instance()?.0.layers().horizon();
                    let mut w = TraceWriter::mdp(file, h)?;
                    let r = run_mdp_seed(cfg, seed, checkpoints, Some(&mut w))?;
                    w.finish()?;
                    r
                }
            };
            (r, Some(path))
        }
    };
    Ok(SeedOutcome { seed, checkpoints: checkpoints.to_vec(), regret, trace })
}

pub fn labels(cfg: &ExperimentConfig) -> RunLabels {
    match (&cfg.bandit, &cfg.mdp) {
        (Some(b), _) => RunLabels {
            setting: "bandit".into(),
            algorithm: b.algorithm.tag().into(),
            environment: b.environment.tag().into(),
        },
        (_, Some(m)) => RunLabels {
            setting: "mdp".into(),
            algorithm: m.algorithm.tag().into(),
            environment: m.environment.tag().into(),
        },
        _ => RunLabels::default(),
    }
}

/// Runs every seed on `workers` threads (the config's value, or one per
/// core). With an output directory, writes one trace per seed and
/// `<label>-summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, output_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let checkpoints = cfg.checkpoints();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<SeedOutcome> = pool.install(|| {
        cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed, &checkpoints, output_dir)).collect::<Result<Vec<_>>>()
    })?;
    let per_seed: Vec<SeedRegret> =
        outcomes.iter().map(|o| SeedRegret { seed: o.seed, regret: o.regret.clone() }).collect();
    let summary = summarize(&labels(cfg), cfg.horizon, &checkpoints, &per_seed, Some(cfg.fit_range()))?;
    if let Some(dir) = output_dir {
        write_summary(&dir.join(format!("{}-summary.json", cfg.label())), &summary)?;
    }
    Ok(RunOutput { outcomes, summary })
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Variant of a sweep: its directory name and configuration.
pub fn sweep_variants(cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let scales = if sweep.loss_scales.is_empty() { vec![cfg.loss_scale] } else { sweep.loss_scales };
    let horizons = if sweep.horizons.is_empty() { vec![cfg.horizon] } else { sweep.horizons };
    let mut out = Vec::new();
    for &h in &horizons {
        for &c in &scales {
            let mut v = cfg.clone();
            v.horizon = h;
            v.loss_scale = c;
            v.sweep = None;
            out.push((format!("T{h}-scale{c:e}"), v));
        }
    }
    out
}

/// Runs every sweep variant into its own subdirectory.
pub fn run_sweep(cfg: &ExperimentConfig, output_dir: Option<&Path>) -> Result<Vec<(String, RunOutput)>> {
    sweep_variants(cfg)
        .into_iter()
        .map(|(name, v)| {
            let dir = output_dir.map(|d| d.join(&name));
            let out = run_experiment(&v, dir.as_deref())?;
            Ok((name, out))
        })
        .collect()
}
