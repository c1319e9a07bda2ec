//! Adversarial multi-armed bandits: the scale-free learners, known-scale
//! baselines, the adversary interface and the round loop.

mod baselines;
mod scb;

pub use baselines::{Exp3Ix, TsallisInf};
pub use scb::{Scb, ScbIx, ThresholdRule};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Substream};
use crate::simplex::ActionDistribution;

/// Source of loss vectors. An adaptive adversary may look at the arms played
/// so far, never at the learner's distribution.
pub trait Adversary {
    fn num_arms(&self) -> usize;
    fn losses(&mut self, round: u64, history: &[usize]) -> Vec<f64>;
}

impl<A: Adversary + ?Sized> Adversary for Box<A> {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn losses(&mut self, round: u64, history: &[usize]) -> Vec<f64> {
        (**self).losses(round, history)
    }
}

/// What a learner reports back after observing the played arm's loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub clipped: f64,
    pub threshold_before: f64,
    pub threshold_after: f64,
    pub estimate: f64,
}

/// Rates in force for the current round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// `None` while the learning rate is unbounded.
    pub eta: Option<f64>,
    pub beta: f64,
    pub gamma: f64,
}

pub trait BanditLearner {
    fn num_arms(&self) -> usize;
    /// Sampling distribution `q_t` for the current round.
    fn distribution(&mut self) -> Result<ActionDistribution>;
    /// Feed back the loss of the arm played this round and advance.
    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation>;
    fn rates(&self) -> Rates;
    fn threshold(&self) -> f64;
}

impl<L: BanditLearner + ?Sized> BanditLearner for Box<L> {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn distribution(&mut self) -> Result<ActionDistribution> {
        (**self).distribution()
    }
    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation> {
        (**self).observe(arm, loss)
    }
    fn rates(&self) -> Rates {
        (**self).rates()
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub arm: usize,
    pub loss: f64,
    pub clipped: f64,
    pub threshold_before: f64,
    pub threshold_after: f64,
    pub estimate: f64,
    pub distribution: Vec<f64>,
    pub rates: Rates,
    /// Full loss vector of the round; only the played entry was revealed.
    pub losses: Vec<f64>,
}

/// Learner families available to the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Algorithm {
    Scb,
    ScbIx,
    /// Ablation: clipping with a doubling threshold started from `initial`.
    ScbDoubling {
        initial: f64,
    },
    Exp3Ix {
        known_scale: f64,
        horizon: u64,
    },
    TsallisInf {
        known_scale: f64,
    },
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Scb => "scb",
            Algorithm::ScbIx => "scb-ix",
            Algorithm::ScbDoubling { .. } => "scb-doubling",
            Algorithm::Exp3Ix { .. } => "exp3-ix",
            Algorithm::TsallisInf { .. } => "tsallis-inf",
        }
    }

    pub fn build(&self, n: usize) -> Result<Box<dyn BanditLearner + Send>> {
        if n < 1 {
            return Err(Error::invalid("a bandit needs at least one arm"));
        }
        Ok(match *self {
            Algorithm::Scb => Box::new(Scb::new(n)),
            Algorithm::ScbIx => Box::new(ScbIx::new(n)),
            Algorithm::ScbDoubling { initial } => Box::new(Scb::with_rule(n, ThresholdRule::Doubling { initial })?),
            Algorithm::Exp3Ix { known_scale, horizon } => Box::new(Exp3Ix::new(n, known_scale, horizon)?),
            Algorithm::TsallisInf { known_scale } => Box::new(TsallisInf::new(n, known_scale)?),
        })
    }
}

/// Plays one round: the adversary commits to `l_t`, the learner samples
/// `k_t ~ q_t` by inverse CDF and observes `l_{t, k_t}`.
pub fn play_round<L, A, R>(
    learner: &mut L,
    adversary: &mut A,
    history: &mut Vec<usize>,
    rng: &mut R,
) -> Result<RoundRecord>
where
    L: BanditLearner + ?Sized,
    A: Adversary + ?Sized,
    R: Rng + ?Sized,
{
    let n = learner.num_arms();
    let round = history.len() as u64 + 1;
    let losses = adversary.losses(round, history);
    if losses.len() != n {
        return Err(Error::Environment(format!(
            "adversary returned {} losses for {n} arms in round {round}",
            losses.len()
        )));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::Environment(format!("adversary returned non-finite loss {bad} in round {round}")));
    }
    let q = learner.distribution()?;
    let rates = learner.rates();
    let arm = q.sample_with(rng.random::<f64>());
    let loss = losses[arm];
    let obs = learner.observe(arm, loss)?;
    history.push(arm);
    Ok(RoundRecord {
        round,
        arm,
        loss,
        clipped: obs.clipped,
        threshold_before: obs.threshold_before,
        threshold_after: obs.threshold_after,
        estimate: obs.estimate,
        distribution: q.into_vec(),
        rates,
        losses,
    })
}

/// Runs `horizon` rounds, handing each record to `sink` as it is produced.
pub fn run_with<A, F>(algorithm: &Algorithm, adversary: &mut A, horizon: u64, seed: u64, mut sink: F) -> Result<()>
where
    A: Adversary + ?Sized,
    F: FnMut(RoundRecord) -> Result<()>,
{
    if horizon < 1 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut learner = algorithm.build(adversary.num_arms())?;
    let mut rng = stream(seed, Substream::Learner);
    let mut history = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let record = play_round(&mut learner, adversary, &mut history, &mut rng)?;
        sink(record)?;
    }
    Ok(())
}

pub fn run<A: Adversary + ?Sized>(
    algorithm: &Algorithm,
    adversary: &mut A,
    horizon: u64,
    seed: u64,
) -> Result<Vec<RoundRecord>> {
    let mut out = Vec::with_capacity(horizon as usize);
    run_with(algorithm, adversary, horizon, seed, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Best arm in hindsight with lowest-index tie-breaking.
pub fn best_fixed_arm(losses: &[Vec<f64>]) -> Result<(usize, f64)> {
    let n = losses.first().map(Vec::len).unwrap_or(0);
    if n == 0 {
        return Err(Error::invalid("empty loss matrix"));
    }
    let mut totals = vec![0.0; n];
    for row in losses {
        if row.len() != n {
            return Err(Error::invalid("ragged loss matrix"));
        }
        for (t, l) in totals.iter_mut().zip(row) {
            if !l.is_finite() {
                return Err(Error::invalid("non-finite loss"));
            }
            *t += l;
        }
    }
    Ok(argmin_lowest(&totals))
}

pub(crate) fn argmin_lowest(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v < best.1 {
            best = (k, *v);
        }
    }
    best
}
