//! Layered episodic MDPs.
//!
//! States are numbered globally in layer order. Layer `0` is entered from a
//! fixed start state through the `initial` distribution; every state of layer
//! `h < H - 1` moves to layer `h + 1`, and the last layer exits to the
//! terminal state. Losses live on the `S x A` state-action pairs of the `H`
//! decision layers.

mod dp;
pub mod io;
mod occupancy;
mod trajectory;

pub use dp::{best_occupancy_in_hindsight, best_policy_in_hindsight, max_reach_probability, policy_value};
pub use occupancy::{occupancy_of_policy, occupancy_with_kernel, policy_of_occupancy, OccupancyMeasure};
pub use trajectory::{sample_trajectory, sample_trajectory_split, Step, Trajectory};

use std::ops::Range;

use crate::error::{Error, Result};

pub(crate) const ROW_TOL: f64 = 1e-12;

/// Layer structure shared by MDPs, policies and occupancy measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layers {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    actions: usize,
}

impl Layers {
    pub fn new(sizes: Vec<usize>, actions: usize) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::invalid("every layer needs at least one state"));
        }
        if actions == 0 {
            return Err(Error::invalid("at least one action is required"));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        for s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        offsets.push(acc);
        Ok(Layers { sizes, offsets, actions })
    }

    /// Number of decision layers `H`.
    pub fn horizon(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_states(&self) -> usize {
        *self.offsets.last().expect("offsets has H + 1 entries")
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, h: usize) -> usize {
        self.sizes[h]
    }

    pub fn range(&self, h: usize) -> Range<usize> {
        self.offsets[h]..self.offsets[h + 1]
    }

    pub fn layer_of(&self, s: usize) -> usize {
        debug_assert!(s < self.num_states());
        self.offsets.partition_point(|o| *o <= s) - 1
    }

    pub fn is_last(&self, h: usize) -> bool {
        h + 1 == self.sizes.len()
    }

    /// Index of the pair `(s, a)` in `S x A` tables.
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.actions + a
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states() * self.actions
    }

    /// Number of successors of a state in layer `h` (0 for the last layer).
    pub fn next_size(&self, h: usize) -> usize {
        if self.is_last(h) {
            0
        } else {
            self.sizes[h + 1]
        }
    }

    pub fn equal_layer_sizes(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] == w[1])
    }
}

fn check_row(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(Error::invalid(format!("{what}: expected {len} entries, got {}", row.len())));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(format!("{what}: entries must be finite and non-negative")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::invalid(format!("{what}: sums to {total}")));
    }
    Ok(())
}

/// Layered tabular MDP with a known (to the harness) transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredMdp {
    layers: Layers,
    initial: Vec<f64>,
    /// `kernel[pair(s, a)]` is a distribution over the next layer, empty for
    /// the last layer.
    kernel: Vec<Vec<f64>>,
}

impl LayeredMdp {
    pub fn new(layers: Layers, initial: Vec<f64>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        check_row(&initial, layers.size(0), "initial distribution")?;
        if kernel.len() != layers.num_pairs() {
            return Err(Error::invalid("kernel must have one row per state-action pair"));
        }
        for h in 0..layers.horizon() {
            let next = layers.next_size(h);
            for s in layers.range(h) {
                for a in 0..layers.actions() {
                    let row = &kernel[layers.pair(s, a)];
                    if next == 0 {
                        if !row.is_empty() {
                            return Err(Error::invalid("last-layer rows must be empty"));
                        }
                    } else {
                        check_row(row, next, &format!("transition row ({h}, {s}, {a})"))?;
                    }
                }
            }
        }
        Ok(LayeredMdp { layers, initial, kernel })
    }

    /// Validation flag for the equal-layer-size convention.
    pub fn require_equal_layers(self) -> Result<Self> {
        if self.layers.equal_layer_sizes() {
            Ok(self)
        } else {
            Err(Error::invalid("layer sizes differ"))
        }
    }

    pub fn layers(&self) -> &Layers {
        &self.layers
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        &self.kernel[self.layers.pair(s, a)]
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// A chain with one state per layer and a single action.
    pub fn chain(horizon: usize) -> Self {
        let layers = Layers::new(vec![1; horizon], 1).expect("valid chain");
        let kernel = (0..horizon).map(|h| if h + 1 == horizon { vec![] } else { vec![1.0] }).collect();
        LayeredMdp::new(layers, vec![1.0], kernel).expect("valid chain")
    }
}

/// Stationary Markov policy `pi(a | s)` over all decision states.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn uniform(layers: &Layers) -> Self {
        let a = layers.actions();
        Policy { actions: a, probs: vec![1.0 / a as f64; layers.num_pairs()] }
    }

    pub fn deterministic(layers: &Layers, choice: &[usize]) -> Result<Self> {
        if choice.len() != layers.num_states() || choice.iter().any(|a| *a >= layers.actions()) {
            return Err(Error::invalid("one valid action per state is required"));
        }
        let a = layers.actions();
        let mut probs = vec![0.0; layers.num_pairs()];
        for (s, c) in choice.iter().enumerate() {
            probs[s * a + c] = 1.0;
        }
        Ok(Policy { actions: a, probs })
    }

    pub fn from_rows(actions: usize, probs: Vec<f64>) -> Result<Self> {
        if actions == 0 || probs.len() % actions != 0 {
            return Err(Error::invalid("policy table shape mismatch"));
        }
        for (s, row) in probs.chunks(actions).enumerate() {
            check_row(row, actions, &format!("policy row {s}"))?;
        }
        Ok(Policy { actions, probs })
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.actions..(s + 1) * self.actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.actions + a]
    }

    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    pub fn set_uniform_row(&mut self, s: usize) {
        let a = self.actions;
        self.probs[s * a..(s + 1) * a].fill(1.0 / a as f64);
    }

    /// `(1 - beta) self + beta other` row by row (a Markov mixture, not an
    /// episode-level one).
    pub fn blend(&self, other: &Policy, beta: f64) -> Policy {
        let probs = self.probs.iter().zip(&other.probs).map(|(p, q)| (1.0 - beta) * p + beta * q).collect();
        Policy { actions: self.actions, probs }
    }
}
