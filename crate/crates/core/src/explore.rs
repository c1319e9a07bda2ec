//! Reward-free exploration towards a single target state.
//!
//! An optimistic explorer learns, from sampled episodes only, a sequence of
//! greedy policies for the indicator reward of the target. RF-ELP mixes
//! all of them uniformly; RF-ELP-ES stops once the target has been visited
//! often enough.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    occupancy_of_policy, sample_trajectory_split, LayeredMdp, Layers, OccupancyMeasure, Policy, Trajectory,
};
use crate::simplex::sample_index;

/// Anything that can play one episode of a policy and report the path.
pub trait EpisodeSampler {
    fn layers(&self) -> &Layers;
    fn rollout(&mut self, policy: &Policy) -> Result<Trajectory>;
}

/// Simulator over a known MDP with separate action and transition streams.
/// Losses are reported as zero.
pub struct Simulator<'a, R1, R2> {
    mdp: &'a LayeredMdp,
    zero: Vec<f64>,
    actions: R1,
    transitions: R2,
}

impl<'a, R1: Rng, R2: Rng> Simulator<'a, R1, R2> {
    pub fn new(mdp: &'a LayeredMdp, actions: R1, transitions: R2) -> Self {
        Simulator { mdp, zero: vec![0.0; mdp.layers().num_pairs()], actions, transitions }
    }
}

impl<R1: Rng, R2: Rng> EpisodeSampler for Simulator<'_, R1, R2> {
    fn layers(&self) -> &Layers {
        self.mdp.layers()
    }

    fn rollout(&mut self, policy: &Policy) -> Result<Trajectory> {
        Ok(sample_trajectory_split(self.mdp, policy, &self.zero, &mut self.actions, &mut self.transitions))
    }
}

/// Indicator reward `r(s', a') = 1{s' = target}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachabilityReward {
    pub target: usize,
}

impl ReachabilityReward {
    pub fn reward(&self, state: usize, _action: usize) -> f64 {
        if state == self.target {
            1.0
        } else {
            0.0
        }
    }

    /// Episode return, which is 0 or 1 since every layer is visited once.
    pub fn episode_return(&self, t: &Trajectory) -> f64 {
        t.steps.iter().map(|s| self.reward(s.state, s.action)).sum()
    }
}

/// Bonus constants of the optimistic explorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorerConfig {
    pub c1: f64,
    pub c2: f64,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig { c1: 1.0, c2: 1.0 }
    }
}

/// Visit counts and derived optimistic values for one target.
#[derive(Debug, Clone)]
pub struct ExplorerState {
    layers: Layers,
    reward: ReachabilityReward,
    config: ExplorerConfig,
    visits: Vec<u64>,
    next: Vec<Vec<u64>>,
    episodes: u64,
    target_visits: u64,
}

impl ExplorerState {
    pub fn new(layers: &Layers, target: usize, config: ExplorerConfig) -> Result<Self> {
        if target >= layers.num_states() {
            return Err(Error::invalid(format!("target state {target} out of range")));
        }
        if !(config.c1 >= 0.0 && config.c2 >= 0.0) {
            return Err(Error::invalid("bonus constants must be non-negative"));
        }
        let next =
            (0..layers.num_pairs()).map(|i| vec![0; layers.next_size(layers.layer_of(i / layers.actions()))]).collect();
        Ok(ExplorerState {
            layers: layers.clone(),
            reward: ReachabilityReward { target },
            config,
            visits: vec![0; layers.num_pairs()],
            next,
            episodes: 0,
            target_visits: 0,
        })
    }

    pub fn target(&self) -> usize {
        self.reward.target
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn target_visits(&self) -> u64 {
        self.target_visits
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[self.layers.pair(s, a)]
    }

    /// `sum_{s'} M(s' | s, a) = N(s, a)` for every pair.
    pub fn counters_consistent(&self) -> bool {
        self.visits.iter().zip(&self.next).enumerate().all(|(i, (n, row))| {
            row.is_empty() && self.layers.is_last(self.layers.layer_of(i / self.layers.actions()))
                || row.iter().sum::<u64>() == *n
        })
    }

    pub fn record(&mut self, t: &Trajectory) -> Result<()> {
        if t.steps.len() != self.layers.horizon() {
            return Err(Error::invalid("trajectory length differs from the horizon"));
        }
        for (h, w) in t.steps.iter().enumerate() {
            if self.layers.layer_of(w.state) != h || w.action >= self.layers.actions() {
                return Err(Error::invalid("trajectory step outside its layer"));
            }
            let i = self.layers.pair(w.state, w.action);
            self.visits[i] += 1;
            if let Some(nx) = t.steps.get(h + 1) {
                self.next[i][nx.state - self.layers.range(h + 1).start] += 1;
            }
        }
        self.episodes += 1;
        self.target_visits += self.reward.episode_return(t) as u64;
        Ok(())
    }

    /// Greedy policy of optimistic value iteration on the empirical model
    /// with bonus `c1 sqrt(Var / N) + c2 / N`; unvisited pairs get value 1
    /// and all values are clipped to `[0, 1]`. Ties go to the lowest action.
    pub fn policy(&self) -> Policy {
        let l = &self.layers;
        let na = l.actions();
        let target = self.reward.target;
        let ht = l.layer_of(target);
        let mut v = vec![0.0; l.num_states()];
        v[target] = 1.0;
        let mut probs = vec![1.0 / na as f64; l.num_pairs()];
        for h in (0..ht).rev() {
            let start = l.range(h + 1).start;
            for s in l.range(h) {
                let mut best = (0, f64::NEG_INFINITY);
                for a in 0..na {
                    let i = l.pair(s, a);
                    let n = self.visits[i];
                    let q = if n == 0 {
                        1.0
                    } else {
                        let nf = n as f64;
                        let (mean, sq) = self.next[i].iter().enumerate().fold((0.0, 0.0), |(m, q2), (k, c)| {
                            let p = *c as f64 / nf;
                            let x = v[start + k];
                            (m + p * x, q2 + p * x * x)
                        });
                        let var = (sq - mean * mean).max(0.0);
                        (mean + self.config.c1 * (var / nf).sqrt() + self.config.c2 / nf).clamp(0.0, 1.0)
                    };
                    if q > best.1 {
                        best = (a, q);
                    }
                }
                v[s] = best.1;
                let row = &mut probs[s * na..(s + 1) * na];
                row.fill(0.0);
                row[best.0] = 1.0;
            }
        }
        Policy::from_rows(na, probs).expect("greedy rows are distributions")
    }
}

/// Uniform mixture over member policies, executed by drawing one member per
/// episode. The action row at `target` is uniform in every member.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    target: Option<usize>,
    /// Distinct members with their multiplicities, in first-seen order.
    members: Vec<(Policy, u64)>,
    total: u64,
}

impl MixturePolicy {
    pub fn new(policies: Vec<Policy>, target: Option<usize>) -> Result<Self> {
        let mut m = MixturePolicy { target, members: Vec::new(), total: 0 };
        for p in policies {
            m.push(p);
        }
        if m.total == 0 {
            return Err(Error::invalid("a mixture needs at least one member"));
        }
        Ok(m)
    }

    fn push(&mut self, mut p: Policy) {
        if let Some(t) = self.target {
            p.set_uniform_row(t);
        }
        self.total += 1;
        match self.members.last_mut() {
            Some((q, c)) if *q == p => *c += 1,
            _ => match self.members.iter_mut().find(|(q, _)| *q == p) {
                Some((_, c)) => *c += 1,
                None => self.members.push((p, 1)),
            },
        }
    }

    pub fn target(&self) -> Option<usize> {
        self.target
    }

    /// Number of member policies counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Distinct members and their mixing weights.
    pub fn weighted(&self) -> impl Iterator<Item = (&Policy, f64)> + '_ {
        let t = self.total as f64;
        self.members.iter().map(move |(p, c)| (p, *c as f64 / t))
    }

    /// The member used for one episode, from a uniform draw `u`.
    pub fn sample_member(&self, u: f64) -> &Policy {
        let weights: Vec<f64> = self.weighted().map(|(_, w)| w).collect();
        &self.members[sample_index(&weights, u)].0
    }

    pub fn occupancy(&self, mdp: &LayeredMdp) -> OccupancyMeasure {
        let mut acc: Option<OccupancyMeasure> = None;
        let mut mass = 0.0;
        for (p, w) in self.weighted() {
            let q = occupancy_of_policy(mdp, p);
            mass += w;
            acc = Some(match acc {
                None => q,
                Some(a) => q.mix(&a, w / mass),
            });
        }
        acc.expect("mixture is non-empty")
    }

    /// Probability that one episode of the mixture visits `state`.
    pub fn reach_probability(&self, mdp: &LayeredMdp, state: usize) -> f64 {
        self.weighted().map(|(p, w)| w * occupancy_of_policy(mdp, p).state(state)).sum()
    }
}

fn check_episodes(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("at least one exploration episode is required"))
    } else {
        Ok(())
    }
}

/// Runs the explorer for `episodes` episodes and returns its policies.
pub fn mvp_explore<E: EpisodeSampler + ?Sized>(
    sim: &mut E,
    reward: ReachabilityReward,
    episodes: u64,
    config: ExplorerConfig,
) -> Result<Vec<Policy>> {
    check_episodes(episodes)?;
    let mut state = ExplorerState::new(sim.layers(), reward.target, config)?;
    let mut out = Vec::with_capacity(episodes as usize);
    for _ in 0..episodes {
        let pi = state.policy();
        let t = sim.rollout(&pi)?;
        state.record(&t)?;
        out.push(pi);
    }
    Ok(out)
}

/// RF-ELP: uniform mixture of the explorer's policies with a uniform action
/// row at the target.
pub fn rf_elp<E: EpisodeSampler + ?Sized>(
    sim: &mut E,
    target: usize,
    episodes: u64,
    config: ExplorerConfig,
) -> Result<MixturePolicy> {
    let policies = mvp_explore(sim, ReachabilityReward { target }, episodes, config)?;
    MixturePolicy::new(policies, Some(target))
}

/// RF-ELP-ES: as [`rf_elp`] but stops after the first episode at which the
/// target has been visited at least `kappa * S * A * H` times. Returns the
/// mixture and the number of episodes used.
pub fn rf_elp_es<E: EpisodeSampler + ?Sized>(
    sim: &mut E,
    target: usize,
    cap: u64,
    kappa: f64,
    config: ExplorerConfig,
) -> Result<(MixturePolicy, u64)> {
    check_episodes(cap)?;
    if !(kappa > 0.0) {
        return Err(Error::invalid("stopping constant must be positive"));
    }
    let l = sim.layers().clone();
    let goal = kappa * (l.num_states() * l.actions() * l.horizon()) as f64;
    let mut state = ExplorerState::new(&l, target, config)?;
    let mut policies = Vec::new();
    while state.episodes() < cap {
        let pi = state.policy();
        let t = sim.rollout(&pi)?;
        state.record(&t)?;
        policies.push(pi);
        if state.target_visits() as f64 >= goal {
            break;
        }
    }
    let used = state.episodes();
    Ok((MixturePolicy::new(policies, Some(target))?, used))
}
