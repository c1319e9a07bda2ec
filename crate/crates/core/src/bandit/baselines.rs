//! Known-scale baselines. Both normalize losses with a fixed scale `L` to
//! `(clamp(l / L, -1, 1) + 1) / 2` and are therefore mis-tuned whenever `L`
//! is wrong.

use super::{BanditLearner, Observation, Rates};
use crate::error::{Error, Result};
use crate::simplex::{solve_shannon, solve_tsallis, ActionDistribution, LearningRate};

fn normalize(loss: f64, scale: f64) -> f64 {
    ((loss / scale).clamp(-1.0, 1.0) + 1.0) / 2.0
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("known scale must be positive, got {scale}")))
    }
}

/// EXP3-IX with `eta = sqrt(2 ln n / (n T))`, `gamma = eta / 2`.
#[derive(Debug, Clone)]
pub struct Exp3Ix {
    scale: f64,
    eta: f64,
    gamma: f64,
    cumulative: Vec<f64>,
    current: Option<ActionDistribution>,
}

impl Exp3Ix {
    pub fn new(n: usize, known_scale: f64, horizon: u64) -> Result<Self> {
        check_scale(known_scale)?;
        if horizon == 0 {
            return Err(Error::invalid("EXP3-IX needs the horizon"));
        }
        let nf = n as f64;
        let eta = (2.0 * nf.ln().max(f64::MIN_POSITIVE) / (nf * horizon as f64)).sqrt();
        Ok(Exp3Ix { scale: known_scale, eta, gamma: eta / 2.0, cumulative: vec![0.0; n], current: None })
    }
}

impl BanditLearner for Exp3Ix {
    fn num_arms(&self) -> usize {
        self.cumulative.len()
    }

    fn distribution(&mut self) -> Result<ActionDistribution> {
        if self.current.is_none() {
            self.current = Some(solve_shannon(&self.cumulative, LearningRate::finite(self.eta)?)?);
        }
        Ok(self.current.clone().expect("cached above"))
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation> {
        if arm >= self.num_arms() || !loss.is_finite() {
            return Err(Error::invalid("bad arm or loss"));
        }
        let q = self.distribution()?;
        let normalized = normalize(loss, self.scale);
        let estimate = normalized / (q.probs()[arm] + self.gamma);
        self.cumulative[arm] += estimate;
        self.current = None;
        Ok(Observation { clipped: normalized, threshold_before: self.scale, threshold_after: self.scale, estimate })
    }

    fn rates(&self) -> Rates {
        Rates { eta: Some(self.eta), beta: 0.0, gamma: self.gamma }
    }

    fn threshold(&self) -> f64 {
        self.scale
    }
}

/// Tsallis-INF with `eta_t = 2 / sqrt t` and importance weighting.
#[derive(Debug, Clone)]
pub struct TsallisInf {
    scale: f64,
    round: u64,
    cumulative: Vec<f64>,
    current: Option<ActionDistribution>,
}

impl TsallisInf {
    pub fn new(n: usize, known_scale: f64) -> Result<Self> {
        check_scale(known_scale)?;
        Ok(TsallisInf { scale: known_scale, round: 1, cumulative: vec![0.0; n], current: None })
    }

    fn eta(&self) -> f64 {
        2.0 / (self.round as f64).sqrt()
    }
}

impl BanditLearner for TsallisInf {
    fn num_arms(&self) -> usize {
        self.cumulative.len()
    }

    fn distribution(&mut self) -> Result<ActionDistribution> {
        if self.current.is_none() {
            self.current = Some(solve_tsallis(&self.cumulative, LearningRate::finite(self.eta())?)?);
        }
        Ok(self.current.clone().expect("cached above"))
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation> {
        if arm >= self.num_arms() || !loss.is_finite() {
            return Err(Error::invalid("bad arm or loss"));
        }
        let q = self.distribution()?;
        let normalized = normalize(loss, self.scale);
        let estimate = normalized / q.probs()[arm];
        self.cumulative[arm] += estimate;
        self.round += 1;
        self.current = None;
        Ok(Observation { clipped: normalized, threshold_before: self.scale, threshold_after: self.scale, estimate })
    }

    fn rates(&self) -> Rates {
        Rates { eta: Some(self.eta()), beta: 0.0, gamma: 0.0 }
    }

    fn threshold(&self) -> f64 {
        self.scale
    }
}
