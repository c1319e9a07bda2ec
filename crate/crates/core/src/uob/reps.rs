use super::comp_uob::upper_occupancy;
use super::confidence::ConfidenceSet;
use super::ftrl::{relative_thresholds, solve_occupancy_ftrl, FtrlSolution};
use super::scb_rl::ClippedEpisode;
use crate::error::{Error, Result};
use crate::explore::MixturePolicy;
use crate::mdp::{Layers, Policy, Trajectory};
use crate::simplex::sample_index;

/// Fixed rates of UOB-REPS-EX.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UobRepsConfig {
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
    /// `ln(T S A / delta)` used by the confidence radii.
    pub log_term: f64,
}

/// Which policy an episode runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Learner,
    Explore { state: usize, member: usize },
}

/// `l_hat(s, a) = l_plus(s, a) / (u(s, a) + gamma)` on the visited pairs,
/// zero elsewhere. `offset_losses[h]` is the offset loss of step `h`.
pub fn mdp_estimator(
    layers: &Layers,
    t: &Trajectory,
    offset_losses: &[f64],
    upper: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    if offset_losses.len() != t.steps.len() || t.steps.len() != layers.horizon() {
        return Err(Error::invalid("one offset loss per layer is required"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("gamma must be non-negative"));
    }
    let mut est = vec![0.0; layers.num_pairs()];
    for (step, l) in t.steps.iter().zip(offset_losses) {
        if *l < 0.0 {
            return Err(Error::invalid("offset losses are non-negative"));
        }
        if *l == 0.0 {
            continue;
        }
        let i = layers.pair(step.state, step.action);
        let denom = upper[i] + gamma;
        if !(denom > 0.0) {
            return Err(Error::numerical(format!(
                "zero estimator denominator at pair ({}, {})",
                step.state, step.action
            )));
        }
        est[i] = l / denom;
    }
    Ok(est)
}

/// UOB-REPS with explicit exploration over fixed per-state exploration
/// mixtures.
#[derive(Debug, Clone)]
pub struct UobRepsEx {
    config: UobRepsConfig,
    confidence: ConfidenceSet,
    units: Vec<f64>,
    thresholds: Vec<f64>,
    exploration: Vec<MixturePolicy>,
    learner: Policy,
    explore_upper: Vec<f64>,
    explore_epoch: u64,
    upper: Vec<f64>,
    last: Option<FtrlSolution>,
}

impl UobRepsEx {
    pub fn new(layers: &Layers, config: UobRepsConfig, exploration: Vec<MixturePolicy>) -> Result<Self> {
        if !(config.eta > 0.0 && config.eta.is_finite()) {
            return Err(Error::invalid("eta must be positive"));
        }
        if !(config.gamma >= 0.0 && config.gamma.is_finite()) {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if !(0.0..=1.0).contains(&config.beta) {
            return Err(Error::invalid("beta must lie in [0, 1]"));
        }
        if config.beta > 0.0 && exploration.is_empty() {
            return Err(Error::invalid("positive beta needs exploration policies"));
        }
        let confidence = ConfidenceSet::new(layers, config.log_term)?;
        let mut r = UobRepsEx {
            config,
            confidence,
            units: vec![0.0; layers.num_pairs()],
            thresholds: vec![0.0; layers.horizon()],
            exploration,
            learner: Policy::uniform(layers),
            explore_upper: vec![0.0; layers.num_pairs()],
            explore_epoch: u64::MAX,
            upper: Vec::new(),
            last: None,
        };
        r.refresh_upper()?;
        Ok(r)
    }

    pub fn config(&self) -> &UobRepsConfig {
        &self.config
    }

    pub fn confidence(&self) -> &ConfidenceSet {
        &self.confidence
    }

    /// Cumulative estimated losses `L_t`.
    pub fn cumulative(&self) -> Vec<f64> {
        let l = self.confidence.layers();
        self.units.iter().enumerate().map(|(i, x)| x * self.thresholds[l.layer_of(i / l.actions())]).collect()
    }

    pub fn exploration(&self) -> &[MixturePolicy] {
        &self.exploration
    }

    /// FTRL policy `pi~_t` of the current episode.
    pub fn learner_policy(&self) -> &Policy {
        &self.learner
    }

    /// Upper occupancy bound of the mixture played this episode.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn last_solution(&self) -> Option<&FtrlSolution> {
        self.last.as_ref()
    }

    fn refresh_upper(&mut self) -> Result<()> {
        let bounds = self.confidence.bounds();
        let beta = self.config.beta;
        if beta > 0.0 && self.explore_epoch != self.confidence.epoch() {
            let k = self.exploration.len() as f64;
            let mut acc = vec![0.0; self.units.len()];
            for mix in &self.exploration {
                for (p, w) in mix.weighted() {
                    let u = upper_occupancy(p, bounds)?;
                    for (x, y) in acc.iter_mut().zip(u) {
                        *x += w * y / k;
                    }
                }
            }
            self.explore_upper = acc;
            self.explore_epoch = self.confidence.epoch();
        }
        let learner = upper_occupancy(&self.learner, bounds)?;
        self.upper = learner.iter().zip(&self.explore_upper).map(|(a, b)| (1.0 - beta) * a + beta * b).collect();
        Ok(())
    }

    /// Picks the episode's policy from three uniform draws: learner vs
    /// exploration, then the target state, then the mixture member.
    pub fn choose(&self, draws: [f64; 3]) -> (&Policy, PolicyChoice) {
        if self.config.beta == 0.0 || draws[0] >= self.config.beta {
            return (&self.learner, PolicyChoice::Learner);
        }
        let k = self.exploration.len();
        let state = ((draws[1] * k as f64) as usize).min(k - 1);
        let mix = &self.exploration[state];
        let weights: Vec<f64> = mix.weighted().map(|(_, w)| w).collect();
        let member = sample_index(&weights, draws[2]);
        let policy = mix.weighted().nth(member).expect("member index in range").0;
        (policy, PolicyChoice::Explore { state, member })
    }

    /// Feeds back one episode: builds the estimator with the current upper
    /// bound, updates the confidence set and solves the next FTRL step with
    /// the thresholds in force after the episode. Returns the estimator.
    pub fn observe(&mut self, t: &Trajectory, clipped: &ClippedEpisode) -> Result<Vec<f64>> {
        let layers = self.confidence.layers().clone();
        let h = layers.horizon();
        if clipped.before.len() != h || clipped.after.len() != h || clipped.units.len() != h {
            return Err(Error::invalid("one threshold per layer is required"));
        }
        let unit_offsets: Vec<f64> = clipped.units.iter().map(|u| u.offset).collect();
        let mut est = mdp_estimator(&layers, t, &unit_offsets, &self.upper, self.config.gamma)?;
        for (c, e) in self.units.iter_mut().zip(&est) {
            *c += e;
        }
        let na = layers.actions();
        for (h, u) in clipped.units.iter().enumerate() {
            if u.growth != 1.0 {
                let r = layers.range(h);
                self.units[r.start * na..r.end * na].iter_mut().for_each(|x| *x /= u.growth);
            }
        }
        for (i, e) in est.iter_mut().enumerate() {
            *e *= clipped.before[layers.layer_of(i / na)];
        }
        self.confidence.update(t)?;
        let rel = relative_thresholds(&clipped.after)?;
        let cumulative: Vec<f64> =
            self.units.iter().enumerate().map(|(i, x)| x * rel[layers.layer_of(i / na)]).collect();
        let weights: Vec<f64> = rel.iter().map(|w| w / self.config.eta).collect();
        let sol = solve_occupancy_ftrl(self.confidence.bounds(), &cumulative, &weights)?;
        self.thresholds.clone_from(&clipped.after);
        self.learner = sol.policy.clone();
        self.last = Some(sol);
        self.refresh_upper()?;
        Ok(est)
    }
}
