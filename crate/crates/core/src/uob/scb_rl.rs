use rand::Rng;
use serde::{Deserialize, Serialize};

use super::confidence::ConfidenceSet;
use super::reps::{PolicyChoice, UobRepsConfig, UobRepsEx};
use crate::clip::{clip, unit_loss, update_threshold, ClipState, UnitLoss};
use crate::error::{Error, Result};
use crate::explore::{rf_elp, rf_elp_es, EpisodeSampler, ExplorerConfig, MixturePolicy};
use crate::mdp::{occupancy_of_policy, sample_trajectory_split, LayeredMdp, Layers, Policy, Trajectory};
use crate::rng::{stream, Substream};

/// Oblivious source of per-episode `S x A` loss tables.
pub trait MdpAdversary {
    fn losses(&mut self, episode: u64) -> Vec<f64>;
}

impl<A: MdpAdversary + ?Sized> MdpAdversary for Box<A> {
    fn losses(&mut self, episode: u64) -> Vec<f64> {
        (**self).losses(episode)
    }
}

/// Per-layer clipping thresholds `C_{t, h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerClipState {
    layers: Vec<ClipState>,
}

impl LayerClipState {
    pub fn new(horizon: usize) -> Self {
        LayerClipState { layers: vec![ClipState::new(); horizon] }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.layers.iter().map(ClipState::threshold).collect()
    }

    /// Clips each step's loss with its layer threshold and offsets it by
    /// that threshold, then advances the thresholds.
    pub fn process(&mut self, t: &Trajectory) -> ClippedEpisode {
        let before = self.thresholds();
        let mut offsets = Vec::with_capacity(t.steps.len());
        let mut units = Vec::with_capacity(t.steps.len());
        for (step, state) in t.steps.iter().zip(self.layers.iter_mut()) {
            let next = update_threshold(step.loss, state);
            offsets.push(clip(step.loss, state) + state.threshold());
            units.push(unit_loss(step.loss, state, &next));
            *state = next;
        }
        ClippedEpisode { before, after: self.thresholds(), offsets, units }
    }
}

/// One episode's losses after per-layer clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedEpisode {
    /// Thresholds in force during the episode.
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// `clip(l_h) + C_h` for each step.
    pub offsets: Vec<f64>,
    /// The same losses in units of `C_h`, with each layer's threshold growth.
    pub units: Vec<UnitLoss>,
}

/// Optional overrides; unset rates take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScbRlParams {
    pub xi: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    /// Stop each exploration run early with this constant.
    pub early_stop: Option<f64>,
    pub explorer: Option<ExplorerConfig>,
}

/// Resolved parameters of one SCB-RL run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScbRlConfig {
    pub episodes: u64,
    pub xi: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub early_stop: Option<f64>,
    pub explorer: ExplorerConfig,
}

impl ScbRlConfig {
    /// `xi = beta = sqrt(S A / T)` and `eta = gamma = sqrt(H ln(S A T / delta) / (S A T))`.
    pub fn resolve(layers: &Layers, episodes: u64, params: &ScbRlParams) -> Result<Self> {
        if episodes == 0 {
            return Err(Error::invalid("at least one episode is required"));
        }
        let sa = (layers.num_states() * layers.actions()) as f64;
        let t = episodes as f64;
        let delta = params.delta.unwrap_or(0.1);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        let explore = (sa / t).sqrt().min(1.0);
        let rate = (layers.horizon() as f64 * (sa * t / delta).ln() / (sa * t)).sqrt();
        Ok(ScbRlConfig {
            episodes,
            xi: params.xi.unwrap_or(explore),
            beta: params.beta.unwrap_or(explore),
            eta: params.eta.unwrap_or(rate),
            gamma: params.gamma.unwrap_or(rate),
            delta,
            early_stop: params.early_stop,
            explorer: params.explorer.unwrap_or_default(),
        })
    }

    /// Exploration episodes per state, `ceil(xi T)`.
    pub fn exploration_episodes(&self) -> u64 {
        (self.xi * self.episodes as f64).ceil().max(1.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore { target: usize },
    Learn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub phase: Phase,
    pub choice: Option<PolicyChoice>,
    pub trajectory: Trajectory,
    /// Loss table of the episode.
    pub losses: Vec<f64>,
    /// Expected loss `<q^{P, pi_t}, l_t>` of the policy (mixture) played.
    pub expected_loss: f64,
    /// Per-layer thresholds after the episode.
    pub thresholds: Vec<f64>,
}

impl EpisodeRecord {
    pub fn realized_loss(&self) -> f64 {
        self.trajectory.total_loss()
    }
}

fn check_table(layers: &Layers, losses: &[f64], episode: u64) -> Result<()> {
    if losses.len() != layers.num_pairs() {
        return Err(Error::Environment(format!(
            "adversary returned {} losses for {} pairs in episode {episode}",
            losses.len(),
            layers.num_pairs()
        )));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Environment(format!("non-finite loss in episode {episode}")));
    }
    Ok(())
}

fn inner(q: &[f64], l: &[f64]) -> f64 {
    q.iter().zip(l).map(|(a, b)| a * b).sum()
}

struct ExploreSampler<'a, A: ?Sized, R1, R2, F> {
    mdp: &'a LayeredMdp,
    adversary: &'a mut A,
    actions: &'a mut R1,
    transitions: &'a mut R2,
    episode: &'a mut u64,
    target: usize,
    thresholds: Vec<f64>,
    sink: &'a mut F,
}

impl<A, R1, R2, F> EpisodeSampler for ExploreSampler<'_, A, R1, R2, F>
where
    A: MdpAdversary + ?Sized,
    R1: Rng,
    R2: Rng,
    F: FnMut(EpisodeRecord) -> Result<()>,
{
    fn layers(&self) -> &Layers {
        self.mdp.layers()
    }

    fn rollout(&mut self, policy: &Policy) -> Result<Trajectory> {
        *self.episode += 1;
        let losses = self.adversary.losses(*self.episode);
        check_table(self.mdp.layers(), &losses, *self.episode)?;
        let t = sample_trajectory_split(self.mdp, policy, &losses, self.actions, self.transitions);
        let expected_loss = inner(occupancy_of_policy(self.mdp, policy).sa(), &losses);
        (self.sink)(EpisodeRecord {
            episode: *self.episode,
            phase: Phase::Explore { target: self.target },
            choice: None,
            trajectory: t.clone(),
            losses,
            expected_loss,
            thresholds: self.thresholds.clone(),
        })?;
        Ok(t)
    }
}

/// SCB-RL: reward-free exploration for every state, then scale-clipped
/// UOB-REPS-EX for the remaining episodes. Every episode is handed to
/// `sink` as it finishes.
pub fn scb_rl_run<A, F>(mdp: &LayeredMdp, adversary: &mut A, config: &ScbRlConfig, seed: u64, mut sink: F) -> Result<()>
where
    A: MdpAdversary + ?Sized,
    F: FnMut(EpisodeRecord) -> Result<()>,
{
    let layers = mdp.layers();
    let per_state = config.exploration_episodes();
    if per_state.saturating_mul(layers.num_states() as u64) >= config.episodes {
        return Err(Error::invalid(format!(
            "exploration needs {} of {} episodes; lower xi or raise T",
            per_state * layers.num_states() as u64,
            config.episodes
        )));
    }
    let mut actions = stream(seed, Substream::Learner);
    let mut transitions = stream(seed, Substream::Environment);
    let mut episode = 0;
    let mut clip = LayerClipState::new(layers.horizon());

    let mut exploration: Vec<MixturePolicy> = Vec::with_capacity(layers.num_states());
    for target in 0..layers.num_states() {
        let mut sampler = ExploreSampler {
            mdp,
            adversary: &mut *adversary,
            actions: &mut actions,
            transitions: &mut transitions,
            episode: &mut episode,
            target,
            thresholds: clip.thresholds(),
            sink: &mut sink,
        };
        let mix = match config.early_stop {
            Some(kappa) => rf_elp_es(&mut sampler, target, per_state, kappa, config.explorer)?.0,
            None => rf_elp(&mut sampler, target, per_state, config.explorer)?,
        };
        exploration.push(mix);
    }

    let explore_occupancy: Vec<f64> = {
        let k = exploration.len() as f64;
        let mut acc = vec![0.0; layers.num_pairs()];
        for mix in &exploration {
            for (x, y) in acc.iter_mut().zip(mix.occupancy(mdp).sa()) {
                *x += y / k;
            }
        }
        acc
    };
    let reps_config = UobRepsConfig {
        eta: config.eta,
        gamma: config.gamma,
        beta: config.beta,
        log_term: ConfidenceSet::log_term_for(layers, config.episodes, config.delta),
    };
    let mut reps = UobRepsEx::new(layers, reps_config, exploration)?;
    while episode < config.episodes {
        episode += 1;
        let losses = adversary.losses(episode);
        check_table(layers, &losses, episode)?;
        let draws = [actions.random::<f64>(), actions.random::<f64>(), actions.random::<f64>()];
        let (policy, choice) = reps.choose(draws);
        let t = sample_trajectory_split(mdp, policy, &losses, &mut actions, &mut transitions);
        let learner_q = occupancy_of_policy(mdp, reps.learner_policy());
        let expected_loss =
            (1.0 - config.beta) * inner(learner_q.sa(), &losses) + config.beta * inner(&explore_occupancy, &losses);
        let clipped = clip.process(&t);
        reps.observe(&t, &clipped)?;
        let thresholds = clipped.after;
        sink(EpisodeRecord {
            episode,
            phase: Phase::Learn,
            choice: Some(choice),
            trajectory: t,
            losses,
            expected_loss,
            thresholds,
        })?;
    }
    Ok(())
}
