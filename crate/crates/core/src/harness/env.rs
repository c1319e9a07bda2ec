//! Loss environments for the bandit and MDP settings.

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bandit::Adversary;
use crate::error::{Error, Result};
use crate::mdp::io::{load_mdp, read_losses};
use crate::mdp::{LayeredMdp, Layers};
use crate::rng::{stream, Substream};
use crate::uob::MdpAdversary;

fn one() -> f64 {
    1.0
}

fn default_tail_index() -> f64 {
    1.5
}

fn default_window() -> usize {
    10
}

/// Multiplies the loss scale by `factor` from round `round` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleJump {
    pub round: u64,
    pub factor: f64,
}

/// Bandit loss environments. Every loss is finally multiplied by the
/// run's `loss_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BanditEnvironment {
    /// `mean_k + std * N(0, 1)`.
    StochasticGaussian {
        means: Vec<f64>,
        #[serde(default = "one")]
        std: f64,
    },
    /// `scale * Bernoulli(mean_k)`.
    StochasticBernoulliScaled {
        means: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Bernoulli losses whose scale is multiplied at the configured rounds.
    ScaleShift {
        means: Vec<f64>,
        #[serde(default)]
        jumps: Vec<ScaleJump>,
    },
    /// `mean_k` plus symmetric Pareto noise with the given tail index,
    /// truncated to `[-cap, cap]`.
    HeavyTailTruncated {
        means: Vec<f64>,
        #[serde(default = "default_tail_index")]
        tail_index: f64,
        cap: f64,
    },
    /// Loss 1 on the arm played most often over the last `window` rounds
    /// (lowest index on ties), 0 elsewhere.
    AdaptiveBestResponse {
        arms: usize,
        #[serde(default = "default_window")]
        window: usize,
    },
}

fn check_means(means: &[f64]) -> Result<()> {
    if means.is_empty() {
        return Err(Error::Config("at least one arm mean is required".into()));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::Config("arm means must be finite".into()));
    }
    Ok(())
}

fn check_probabilities(means: &[f64]) -> Result<()> {
    check_means(means)?;
    if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::Config("Bernoulli means must lie in [0, 1]".into()));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive and finite")))
    }
}

impl BanditEnvironment {
    pub fn tag(&self) -> &'static str {
        match self {
            BanditEnvironment::StochasticGaussian { .. } => "stochastic-gaussian",
            BanditEnvironment::StochasticBernoulliScaled { .. } => "stochastic-bernoulli-scaled",
            BanditEnvironment::ScaleShift { .. } => "scale-shift",
            BanditEnvironment::HeavyTailTruncated { .. } => "heavy-tail-truncated",
            BanditEnvironment::AdaptiveBestResponse { .. } => "adaptive-best-response",
        }
    }

    pub fn num_arms(&self) -> usize {
        match self {
            BanditEnvironment::StochasticGaussian { means, .. }
            | BanditEnvironment::StochasticBernoulliScaled { means, .. }
            | BanditEnvironment::ScaleShift { means, .. }
            | BanditEnvironment::HeavyTailTruncated { means, .. } => means.len(),
            BanditEnvironment::AdaptiveBestResponse { arms, .. } => *arms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BanditEnvironment::StochasticGaussian { means, std } => {
                check_means(means)?;
                if !(std.is_finite() && *std >= 0.0) {
                    return Err(Error::Config("std must be non-negative and finite".into()));
                }
            }
            BanditEnvironment::StochasticBernoulliScaled { means, scale } => {
                check_probabilities(means)?;
                positive(*scale, "scale")?;
            }
            BanditEnvironment::ScaleShift { means, jumps } => {
                check_probabilities(means)?;
                for j in jumps {
                    positive(j.factor, "jump factor")?;
                    if j.round == 0 {
                        return Err(Error::Config("jump rounds start at 1".into()));
                    }
                }
            }
            BanditEnvironment::HeavyTailTruncated { means, tail_index, cap } => {
                check_means(means)?;
                positive(*tail_index, "tail_index")?;
                positive(*cap, "cap")?;
            }
            BanditEnvironment::AdaptiveBestResponse { arms, window } => {
                if *arms == 0 || *window == 0 {
                    return Err(Error::Config("arms and window must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Adversary for one seed; its randomness comes from the seed's
    /// adversary stream only.
    pub fn build(&self, seed: u64, loss_scale: f64) -> Result<SuiteAdversary> {
        self.validate()?;
        positive(loss_scale, "loss_scale")?;
        Ok(SuiteAdversary { env: self.clone(), rng: stream(seed, Substream::Adversary), loss_scale })
    }
}

/// A [`BanditEnvironment`] bound to a seed.
#[derive(Debug, Clone)]
pub struct SuiteAdversary {
    env: BanditEnvironment,
    rng: ChaCha8Rng,
    loss_scale: f64,
}

impl SuiteAdversary {
    fn raw(&mut self, round: u64, history: &[usize]) -> Vec<f64> {
        let rng = &mut self.rng;
        match &self.env {
            BanditEnvironment::StochasticGaussian { means, std } => means
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + std * z
                })
                .collect(),
            BanditEnvironment::StochasticBernoulliScaled { means, scale } => {
                means.iter().map(|m| if rng.random::<f64>() < *m { *scale } else { 0.0 }).collect()
            }
            BanditEnvironment::ScaleShift { means, jumps } => {
                let s: f64 = jumps.iter().filter(|j| j.round <= round).map(|j| j.factor).product();
                means.iter().map(|m| if rng.random::<f64>() < *m { s } else { 0.0 }).collect()
            }
            BanditEnvironment::HeavyTailTruncated { means, tail_index, cap } => means
                .iter()
                .map(|m| {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let noise = sign * (u.powf(-1.0 / tail_index) - 1.0);
                    (m + noise).clamp(-cap, *cap)
                })
                .collect(),
            BanditEnvironment::AdaptiveBestResponse { arms, window } => {
                let mut counts = vec![0usize; *arms];
                for &k in history.iter().rev().take(*window) {
                    counts[k] += 1;
                }
                let mut losses = vec![0.0; *arms];
                if !history.is_empty() {
                    let top = counts.iter().enumerate().fold(0, |b, (k, c)| if *c > counts[b] { k } else { b });
                    losses[top] = 1.0;
                }
                losses
            }
        }
    }
}

impl Adversary for SuiteAdversary {
    fn num_arms(&self) -> usize {
        self.env.num_arms()
    }

    fn losses(&mut self, round: u64, history: &[usize]) -> Vec<f64> {
        let scale = self.loss_scale;
        self.raw(round, history).into_iter().map(|l| l * scale).collect()
    }
}

/// How a random MDP's transition rows spread their mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reachability {
    /// Every successor gets positive probability.
    #[default]
    Dense,
    /// Each row reaches one or two successors.
    Sparse,
}

/// Per-episode noise around the pair means `mu(s, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossNoise {
    /// `Bernoulli(mu)`.
    #[default]
    Bernoulli,
    /// `mu + std * N(0, 1)`.
    Gaussian { std: f64 },
}

/// MDP environments: a kernel plus an oblivious loss sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MdpEnvironment {
    /// Random kernel and pair means drawn from `instance_seed`; the states
    /// listed in `unreachable` get no inflow.
    RandomMdp {
        layer_sizes: Vec<usize>,
        actions: usize,
        #[serde(default)]
        profile: Reachability,
        #[serde(default)]
        unreachable: Vec<usize>,
        #[serde(default)]
        instance_seed: u64,
        #[serde(default)]
        noise: LossNoise,
    },
    /// Kernel read from a file. Losses are replayed cyclically from
    /// `losses` when given, otherwise drawn around random pair means.
    MdpFile {
        path: PathBuf,
        #[serde(default)]
        losses: Option<PathBuf>,
        #[serde(default)]
        instance_seed: u64,
        #[serde(default)]
        noise: LossNoise,
    },
}

fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, support: &[usize], width: usize) -> Vec<f64> {
    let mut row = vec![0.0; width];
    for &i in support {
        let e: f64 = Exp1.sample(rng);
        row[i] = e + 1e-3;
    }
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

/// Random layered MDP. Rows are Dirichlet(1) over their support; states in
/// `unreachable` receive zero probability from every row.
pub fn random_mdp<R: Rng + ?Sized>(
    sizes: &[usize],
    actions: usize,
    profile: Reachability,
    unreachable: &[usize],
    rng: &mut R,
) -> Result<LayeredMdp> {
    let layers = Layers::new(sizes.to_vec(), actions)?;
    if let Some(s) = unreachable.iter().find(|s| **s >= layers.num_states()) {
        return Err(Error::Config(format!("unreachable state {s} out of range")));
    }
    let row = |h: usize, rng: &mut R| -> Result<Vec<f64>> {
        let offset = layers.range(h).start;
        let allowed: Vec<usize> = (0..layers.size(h)).filter(|i| !unreachable.contains(&(offset + i))).collect();
        if allowed.is_empty() {
            return Err(Error::Config(format!("every state of layer {h} is unreachable")));
        }
        let support = match profile {
            Reachability::Dense => allowed,
            Reachability::Sparse => {
                let k = if allowed.len() > 1 && rng.random::<bool>() { 2 } else { 1 };
                let mut pool = allowed;
                let mut pick = Vec::with_capacity(k);
                for _ in 0..k {
                    pick.push(pool.swap_remove(rng.random_range(0..pool.len())));
                }
                pick.sort_unstable();
                pick
            }
        };
        Ok(dirichlet_row(rng, &support, layers.size(h)))
    };
    let initial = row(0, rng)?;
    let mut kernel = Vec::with_capacity(layers.num_pairs());
    for h in 0..layers.horizon() {
        for _ in layers.range(h) {
            for _ in 0..actions {
                kernel.push(if layers.is_last(h) { Vec::new() } else { row(h + 1, rng)? });
            }
        }
    }
    LayeredMdp::new(layers, initial, kernel)
}

impl MdpEnvironment {
    pub fn tag(&self) -> &'static str {
        match self {
            MdpEnvironment::RandomMdp { .. } => "random-mdp",
            MdpEnvironment::MdpFile { .. } => "mdp-file",
        }
    }

    fn noise(&self) -> LossNoise {
        match self {
            MdpEnvironment::RandomMdp { noise, .. } | MdpEnvironment::MdpFile { noise, .. } => *noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LossNoise::Gaussian { std } = self.noise() {
            if !(std.is_finite() && std >= 0.0) {
                return Err(Error::Config("noise std must be non-negative and finite".into()));
            }
        }
        Ok(())
    }

    /// The MDP and per-pair means, both fixed by the instance seed.
    pub fn instance(&self) -> Result<(LayeredMdp, Vec<f64>)> {
        self.validate()?;
        let (mdp, seed) = match self {
            MdpEnvironment::RandomMdp { layer_sizes, actions, profile, unreachable, instance_seed, .. } => {
                let mut rng = stream(*instance_seed, Substream::Instance);
                let mdp = random_mdp(layer_sizes, *actions, *profile, unreachable, &mut rng)
                    .map_err(|e| Error::Config(e.to_string()))?;
                (mdp, *instance_seed)
            }
            MdpEnvironment::MdpFile { path, instance_seed, .. } => (load_mdp(path)?, *instance_seed),
        };
        let mut rng = stream(seed, Substream::Instance);
        // means come from a distant position of the instance stream
        rng.set_word_pos(1 << 40);
        let means = (0..mdp.layers().num_pairs()).map(|_| rng.random::<f64>()).collect();
        Ok((mdp, means))
    }

    /// The MDP and its loss sequence for one run seed.
    pub fn build(&self, seed: u64, loss_scale: f64) -> Result<(LayeredMdp, MdpSuiteAdversary)> {
        positive(loss_scale, "loss_scale")?;
        let (mdp, means) = self.instance()?;
        let source = match self {
            MdpEnvironment::MdpFile { losses: Some(path), .. } => {
                let (layers, tables) = read_losses(&std::fs::read_to_string(path)?)?;
                if &layers != mdp.layers() {
                    return Err(Error::Config("loss file does not match the MDP's layers".into()));
                }
                if tables.is_empty() {
                    return Err(Error::Config("loss file has no episodes".into()));
                }
                LossSource::Replay(tables)
            }
            _ => LossSource::Stochastic { means, noise: self.noise(), rng: stream(seed, Substream::Adversary) },
        };
        Ok((mdp, MdpSuiteAdversary { source, loss_scale }))
    }
}

#[derive(Debug, Clone)]
enum LossSource {
    Stochastic { means: Vec<f64>, noise: LossNoise, rng: ChaCha8Rng },
    Replay(Vec<Vec<f64>>),
}

/// Oblivious MDP loss sequence bound to a seed.
#[derive(Debug, Clone)]
pub struct MdpSuiteAdversary {
    source: LossSource,
    loss_scale: f64,
}

impl MdpAdversary for MdpSuiteAdversary {
    fn losses(&mut self, episode: u64) -> Vec<f64> {
        let raw: Vec<f64> = match &mut self.source {
            LossSource::Stochastic { means, noise, rng } => match noise {
                LossNoise::Bernoulli => {
                    means.iter().map(|m| if rng.random::<f64>() < *m { 1.0 } else { 0.0 }).collect()
                }
                LossNoise::Gaussian { std } => means
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + *std * z
                    })
                    .collect(),
            },
            LossSource::Replay(tables) => tables[((episode - 1) % tables.len() as u64) as usize].clone(),
        };
        raw.into_iter().map(|l| l * self.loss_scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::max_reach_probability;

    #[test]
    fn scale_shift_jumps_by_the_factor() {
        let env = BanditEnvironment::ScaleShift {
            means: vec![1.0, 1.0],
            jumps: vec![ScaleJump { round: 51, factor: 100.0 }],
        };
        let mut adv = env.build(3, 1.0).unwrap();
        let before: f64 = (1..=50).flat_map(|t| adv.losses(t, &[])).fold(0.0, |m, l: f64| m.max(l.abs()));
        let after: f64 = (51..=100).flat_map(|t| adv.losses(t, &[])).fold(0.0, |m, l: f64| m.max(l.abs()));
        assert_eq!(after / before, 100.0);
    }

    #[test]
    fn loss_scale_multiplies_exactly() {
        let env = BanditEnvironment::StochasticGaussian { means: vec![0.0, 0.5], std: 1.0 };
        let (mut a, mut b) = (env.build(9, 1.0).unwrap(), env.build(9, 1e6).unwrap());
        for t in 1..20 {
            let (x, y) = (a.losses(t, &[]), b.losses(t, &[]));
            for (p, q) in x.iter().zip(&y) {
                assert_eq!(p * 1e6, *q);
            }
        }
    }

    #[test]
    fn heavy_tail_respects_cap() {
        let env = BanditEnvironment::HeavyTailTruncated { means: vec![0.0, 0.2], tail_index: 1.1, cap: 5.0 };
        let mut adv = env.build(1, 1.0).unwrap();
        assert!((1..2000).flat_map(|t| adv.losses(t, &[])).all(|l| l.abs() <= 5.0));
    }

    #[test]
    fn best_response_punishes_the_frequent_arm() {
        let env = BanditEnvironment::AdaptiveBestResponse { arms: 3, window: 4 };
        let mut adv = env.build(0, 2.0).unwrap();
        assert_eq!(adv.losses(1, &[]), vec![0.0; 3]);
        assert_eq!(adv.losses(4, &[0, 2, 2]), vec![0.0, 0.0, 2.0]);
        assert_eq!(adv.losses(6, &[2, 2, 2, 1, 1, 0]), vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn unreachable_states_have_zero_reach() {
        let mut rng = stream(5, Substream::Instance);
        let m = random_mdp(&[2, 3, 2], 2, Reachability::Sparse, &[3, 5], &mut rng).unwrap();
        assert_eq!(max_reach_probability(&m, 3).unwrap().0, 0.0);
        assert_eq!(max_reach_probability(&m, 5).unwrap().0, 0.0);
        assert!(max_reach_probability(&m, 4).unwrap().0 > 0.0);
        assert!(random_mdp(&[2, 1], 2, Reachability::Dense, &[2], &mut rng).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad: std::result::Result<BanditEnvironment, _> =
            toml::from_str("name = \"stochastic-gaussian\"\nmeans = [0.0]\nsigma = 2.0\n");
        assert!(bad.is_err());
    }
}
