//! Scale clipping: the running threshold `C_t`, loss clipping, the `+C_t`
//! offset and the importance-weighted estimators built from it.
//!
//! All rates use the natural logarithm.

use crate::error::{Error, Result};
use crate::simplex::LearningRate;

/// Clipping threshold and the index of the round about to be played.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipState {
    threshold: f64,
    round: u64,
}

impl Default for ClipState {
    fn default() -> Self {
        ClipState { threshold: 0.0, round: 1 }
    }
}

impl ClipState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_threshold(threshold: f64, round: u64) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::invalid(format!("threshold must be finite and >= 0, got {threshold}")));
        }
        if round == 0 {
            return Err(Error::invalid("rounds are numbered from 1"));
        }
        Ok(ClipState { threshold, round })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn round(&self) -> u64 {
        self.round
    }
}

/// `max(-C, min(C, loss))`.
pub fn clip(loss: f64, state: &ClipState) -> f64 {
    loss.min(state.threshold).max(-state.threshold)
}

/// `C' = 2|loss|` when `|loss| > C`, else `C`; advances the round.
pub fn update_threshold(loss: f64, state: &ClipState) -> ClipState {
    let threshold = if loss.abs() > state.threshold { 2.0 * loss.abs() } else { state.threshold };
    ClipState { threshold, round: state.round + 1 }
}

/// Mantissa bits kept by [`canonical_ratio`].
pub const RATIO_BITS: u32 = 20;

/// `num / den` rounded to [`RATIO_BITS`] mantissa bits.
///
/// Rescaling both arguments by a common positive factor leaves the result
/// unchanged unless the quotient lies within a few ulps of a rounding
/// boundary.
pub fn canonical_ratio(num: f64, den: f64) -> f64 {
    let x = num / den;
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let drop = 52 - RATIO_BITS;
    let bits = (x.to_bits() + (1u64 << (drop - 1))) & !((1u64 << drop) - 1);
    f64::from_bits(bits)
}

/// One observed loss in units of the threshold that clipped it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitLoss {
    /// `(clip(l) + C) / C` in `[0, 2]`; zero while `C = 0`.
    pub offset: f64,
    /// `C' / C` after the threshold update; 1 when `C` did not move or was 0.
    pub growth: f64,
}

/// Expresses a loss clipped under `state` relative to `state`'s threshold,
/// given the state `next` it led to.
pub fn unit_loss(loss: f64, state: &ClipState, next: &ClipState) -> UnitLoss {
    let c = state.threshold;
    if c == 0.0 {
        return UnitLoss { offset: 0.0, growth: 1.0 };
    }
    let offset = (canonical_ratio(clip(loss, state), c) + 1.0).clamp(0.0, 2.0);
    let growth = if next.threshold == c { 1.0 } else { canonical_ratio(next.threshold, c) };
    UnitLoss { offset, growth }
}

/// Loss estimator with a single non-zero entry at the played arm.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorVector(Vec<f64>);

impl EstimatorVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn estimate(clipped: f64, state: &ClipState, played: usize, n: usize, denom: f64) -> Result<EstimatorVector> {
    if played >= n {
        return Err(Error::invalid(format!("arm {played} out of range for {n} arms")));
    }
    let mut values = vec![0.0; n];
    if state.threshold > 0.0 {
        // clipped + C lies in [0, 2C]; max guards a stray negative zero
        values[played] = ((clipped + state.threshold) / denom).max(0.0);
    }
    Ok(EstimatorVector(values))
}

/// `(clipped + C) / q_k` at the played arm.
pub fn estimate_iw(clipped: f64, state: &ClipState, played: usize, prob: f64, n: usize) -> Result<EstimatorVector> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::invalid(format!("played probability must lie in (0, 1], got {prob}")));
    }
    estimate(clipped, state, played, n, prob)
}

/// `(clipped + C) / (q_k + gamma)` at the played arm.
pub fn estimate_ix(
    clipped: f64,
    state: &ClipState,
    played: usize,
    prob: f64,
    gamma: f64,
    n: usize,
) -> Result<EstimatorVector> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::invalid(format!("played probability must lie in (0, 1], got {prob}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("implicit exploration rate must be >= 0, got {gamma}")));
    }
    estimate(clipped, state, played, n, prob + gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScbSchedule {
    pub eta: LearningRate,
    /// `eta_t C_t`, the rate for cumulative losses measured in units of `C_t`.
    pub unit_eta: LearningRate,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScbIxSchedule {
    pub eta: LearningRate,
    /// `eta_t C_t`.
    pub unit_eta: LearningRate,
    pub beta: f64,
    pub gamma: f64,
}

/// `eta_t = 1 / (2 C_t sqrt t)`, `beta_t = n / (2n + sqrt(n t))`.
pub fn schedule_scb(state: &ClipState, n: usize) -> ScbSchedule {
    let t = state.round as f64;
    let n = n as f64;
    let (eta, unit_eta) = if state.threshold > 0.0 {
        (LearningRate::Finite(1.0 / (2.0 * state.threshold * t.sqrt())), LearningRate::Finite(0.5 / t.sqrt()))
    } else {
        (LearningRate::Unbounded, LearningRate::Unbounded)
    };
    ScbSchedule { eta, unit_eta, beta: n / (2.0 * n + (n * t).sqrt()) }
}

/// `eta_t = sqrt(ln n / (n t)) / C_t`, `beta_t = sqrt(n ln n / (n ln n + t))`,
/// `gamma_t = eta_t C_t / 2` (zero while `C_t = 0`).
pub fn schedule_scbix(state: &ClipState, n: usize) -> ScbIxSchedule {
    let t = state.round as f64;
    let nf = n as f64;
    let log_n = nf.ln();
    let base = (log_n / (nf * t)).sqrt();
    let (eta, unit_eta, gamma) = if state.threshold > 0.0 {
        (LearningRate::Finite(base / state.threshold), LearningRate::Finite(base), 0.5 * base)
    } else {
        (LearningRate::Unbounded, LearningRate::Unbounded, 0.0)
    };
    ScbIxSchedule { eta, unit_eta, beta: (nf * log_n / (nf * log_n + t)).sqrt(), gamma }
}
