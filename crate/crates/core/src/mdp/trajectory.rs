use rand::Rng;

use super::{LayeredMdp, Policy};
use crate::simplex::sample_index;

/// One decision: the state of layer `h`, the action taken and its loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub loss: f64,
}

/// A full episode, one step per decision layer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn total_loss(&self) -> f64 {
        self.steps.iter().map(|s| s.loss).sum()
    }

    pub fn visits(&self, state: usize) -> bool {
        self.steps.iter().any(|s| s.state == state)
    }

    /// FNV-1a digest of the visited `(state, action)` sequence.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for st in &self.steps {
            for x in [st.state as u64, st.action as u64] {
                for b in x.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Rolls out `policy` for one episode, drawing actions and transitions from
/// the same generator.
pub fn sample_trajectory<R: Rng + ?Sized>(
    mdp: &LayeredMdp,
    policy: &Policy,
    losses: &[f64],
    rng: &mut R,
) -> Trajectory {
    let mut steps = Vec::with_capacity(mdp.layers().horizon());
    let mut s = sample_index(mdp.initial(), rng.random::<f64>());
    for h in 0..mdp.layers().horizon() {
        let a = sample_index(policy.row(s), rng.random::<f64>());
        steps.push(Step { state: s, action: a, loss: losses[mdp.layers().pair(s, a)] });
        if !mdp.layers().is_last(h) {
            s = mdp.layers().range(h + 1).start + sample_index(mdp.row(s, a), rng.random::<f64>());
        }
    }
    Trajectory { steps }
}

/// As [`sample_trajectory`], with the learner's action draws and the
/// environment's transition draws on separate generators.
pub fn sample_trajectory_split<R1, R2>(
    mdp: &LayeredMdp,
    policy: &Policy,
    losses: &[f64],
    actions: &mut R1,
    transitions: &mut R2,
) -> Trajectory
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let layers = mdp.layers();
    let mut steps = Vec::with_capacity(layers.horizon());
    let mut s = sample_index(mdp.initial(), transitions.random::<f64>());
    for h in 0..layers.horizon() {
        let a = sample_index(policy.row(s), actions.random::<f64>());
        steps.push(Step { state: s, action: a, loss: losses[layers.pair(s, a)] });
        if !layers.is_last(h) {
            s = layers.range(h + 1).start + sample_index(mdp.row(s, a), transitions.random::<f64>());
        }
    }
    Trajectory { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Layers;
    use crate::rng::{stream, Substream};

    #[test]
    fn deterministic_mdp_and_policy_give_unique_path() {
        let l = Layers::new(vec![1, 2, 2], 2).unwrap();
        let kernel = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![],
            vec![],
            vec![],
            vec![],
        ];
        let m = LayeredMdp::new(l.clone(), vec![1.0], kernel).unwrap();
        let pi = Policy::deterministic(&l, &[1, 0, 1, 0, 0]).unwrap();
        let losses: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut rng = stream(5, Substream::Environment);
        for _ in 0..20 {
            let t = sample_trajectory(&m, &pi, &losses, &mut rng);
            let path: Vec<(usize, usize)> = t.steps.iter().map(|s| (s.state, s.action)).collect();
            assert_eq!(path, vec![(0, 1), (2, 1), (4, 0)]);
            assert_eq!(t.total_loss(), 1.0 + 5.0 + 8.0);
        }
    }

    #[test]
    fn horizon_one_is_a_bandit_pull() {
        let l = Layers::new(vec![1], 3).unwrap();
        let m = LayeredMdp::new(l.clone(), vec![1.0], vec![vec![]; 3]).unwrap();
        let pi = Policy::deterministic(&l, &[2]).unwrap();
        let t = sample_trajectory(&m, &pi, &[0.1, 0.2, 0.3], &mut stream(0, Substream::Learner));
        assert_eq!(t.steps, vec![Step { state: 0, action: 2, loss: 0.3 }]);
    }

    #[test]
    fn fingerprint_distinguishes_paths() {
        let a = Trajectory { steps: vec![Step { state: 0, action: 1, loss: 0.0 }] };
        let b = Trajectory { steps: vec![Step { state: 0, action: 0, loss: 0.0 }] };
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
