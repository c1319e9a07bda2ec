//! FTRL over the probability simplex with the 1/2-Tsallis and Shannon
//! regularizers.
//!
//! Both solvers return `argmin_{p in simplex} <L, p> + Psi(p) / eta`. Losses
//! are shifted by their minimum before any arithmetic so the result only
//! depends on loss differences.

use crate::error::{Error, Result};

const DUAL_TOL: f64 = 1e-12;
const MAX_ITERS: usize = 200;

/// Learning rate of an FTRL step. `Unbounded` is the state of a learner whose
/// clipping threshold is still zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Finite(f64),
    Unbounded,
}

impl LearningRate {
    pub fn finite(eta: f64) -> Result<Self> {
        if eta.is_finite() && eta > 0.0 {
            Ok(LearningRate::Finite(eta))
        } else {
            Err(Error::invalid(format!("learning rate must be positive and finite, got {eta}")))
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            LearningRate::Finite(eta) => Some(eta),
            LearningRate::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, LearningRate::Unbounded)
    }
}

/// A probability vector over arms (or over the actions of one state).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "distribution over zero arms");
        ActionDistribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        ActionDistribution(p)
    }

    /// Validates non-negativity and unit mass (within 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("distribution entries must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("distribution sums to {total}")));
        }
        Ok(ActionDistribution(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `(1 - beta) p + beta / n`, evaluated as `p + beta (1/n - p)` so that
    /// the uniform vector is a fixed point.
    pub fn mix_uniform(&self, beta: f64) -> Self {
        let u = 1.0 / self.0.len() as f64;
        ActionDistribution(self.0.iter().map(|p| p + beta * (u - p)).collect())
    }

    /// Inverse-CDF sampling from a uniform draw `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        sample_index(&self.0, u)
    }
}

/// Inverse-CDF draw from an arbitrary probability row.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the final partial sum
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Regularizer families supported by the simplex solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `4 sqrt(n) - 4 sum_k sqrt(p_k)`
    Tsallis,
    /// `log n + sum_k p_k log p_k`
    Shannon,
}

impl Regularizer {
    pub fn value(&self, p: &[f64]) -> f64 {
        let n = p.len() as f64;
        match self {
            Regularizer::Tsallis => 4.0 * n.sqrt() - 4.0 * p.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>(),
            Regularizer::Shannon => n.ln() + p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>(),
        }
    }
}

/// FTRL objective `<L, p> + Psi(p) / eta`.
pub fn ftrl_objective(losses: &[f64], p: &[f64], eta: f64, reg: Regularizer) -> f64 {
    let linear: f64 = losses.iter().zip(p).map(|(l, x)| l * x).sum();
    linear + reg.value(p) / eta
}

fn check_losses(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::invalid("cumulative loss has no entries"));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::invalid(format!("non-finite cumulative loss {bad}")));
    }
    Ok(losses.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Minimizer of `<L, p> + (4 sqrt(n) - 4 sum sqrt(p_k)) / eta` over the simplex.
///
/// Stationarity gives `p_k = 4 / (eta (L_k - lambda))^2`; the scalar dual
/// variable is found by safeguarded Newton iterations inside the bracket
/// implied by `1/n <= max_k p_k <= 1`.
pub fn solve_tsallis(losses: &[f64], eta: LearningRate) -> Result<ActionDistribution> {
    let min = check_losses(losses)?;
    let n = losses.len();
    if n == 1 {
        return Ok(ActionDistribution::point_mass(1, 0));
    }
    let eta = match eta {
        LearningRate::Unbounded => return Ok(ActionDistribution::uniform(n)),
        LearningRate::Finite(eta) => eta,
    };
    let scaled: Vec<f64> = losses.iter().map(|l| eta * (l - min)).collect();
    if scaled.iter().all(|x| *x == 0.0) {
        return Ok(ActionDistribution::uniform(n));
    }

    // mu = eta * lambda, gaps d_k = x_k - mu >= 2
    let mut lo = -2.0 * (n as f64).sqrt();
    let mut hi = -2.0;
    let mut mu = hi;
    for _ in 0..MAX_ITERS {
        let (sum, deriv) = scaled.iter().fold((0.0, 0.0), |(s, ds), x| {
            let d = x - mu;
            (s + 4.0 / (d * d), ds + 8.0 / (d * d * d))
        });
        let residual = sum - 1.0;
        if residual.abs() < DUAL_TOL {
            let probs: Vec<f64> = scaled
                .iter()
                .map(|x| {
                    let d = x - mu;
                    4.0 / (d * d) / sum
                })
                .collect();
            return Ok(ActionDistribution(probs));
        }
        if residual > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        // Newton on 1 - sum^{-1/2}, which is linear in mu for equal losses.
        let h = 1.0 - sum.powf(-0.5);
        let dh = 0.5 * sum.powf(-1.5) * deriv;
        let mut next = mu - h / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == mu {
            break;
        }
        mu = next;
    }
    Err(Error::numerical(format!(
        "tsallis dual solve did not reach |sum p - 1| < {DUAL_TOL:e} within {MAX_ITERS} iterations"
    )))
}

/// Minimizer of `<L, p> + (log n + sum p log p) / eta`: the softmax of
/// `-eta L`, evaluated after subtracting the minimum loss.
pub fn solve_shannon(losses: &[f64], eta: LearningRate) -> Result<ActionDistribution> {
    let min = check_losses(losses)?;
    let n = losses.len();
    if n == 1 {
        return Ok(ActionDistribution::point_mass(1, 0));
    }
    let eta = match eta {
        LearningRate::Unbounded => return Ok(ActionDistribution::uniform(n)),
        LearningRate::Finite(eta) => eta,
    };
    let weights: Vec<f64> = losses.iter().map(|l| (-eta * (l - min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(ActionDistribution(weights.into_iter().map(|w| w / z).collect()))
}
