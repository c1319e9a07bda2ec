use super::{occupancy_of_policy, LayeredMdp, OccupancyMeasure, Policy};
use crate::error::{Error, Result};

fn check_losses(mdp: &LayeredMdp, losses: &[f64]) -> Result<()> {
    if losses.len() != mdp.layers().num_pairs() {
        return Err(Error::invalid(format!(
            "loss table has {} entries, expected {}",
            losses.len(),
            mdp.layers().num_pairs()
        )));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("loss table has non-finite entries"));
    }
    Ok(())
}

fn expect_next(mdp: &LayeredMdp, s: usize, a: usize, next_start: usize, values: &[f64]) -> f64 {
    mdp.row(s, a).iter().enumerate().map(|(k, p)| p * values[next_start + k]).sum()
}

/// Backward DP for the deterministic policy minimizing the total loss, with
/// lowest-index tie-breaking. Returns the policy and its value.
pub fn best_policy_in_hindsight(mdp: &LayeredMdp, losses: &[f64]) -> Result<(Policy, f64)> {
    check_losses(mdp, losses)?;
    let layers = mdp.layers();
    let na = layers.actions();
    let mut v = vec![0.0; layers.num_states()];
    let mut choice = vec![0; layers.num_states()];
    for h in (0..layers.horizon()).rev() {
        let next_start = if layers.is_last(h) { 0 } else { layers.range(h + 1).start };
        for s in layers.range(h) {
            let mut best = (0, f64::INFINITY);
            for a in 0..na {
                let mut q = losses[layers.pair(s, a)];
                if !layers.is_last(h) {
                    q += expect_next(mdp, s, a, next_start, &v);
                }
                if q < best.1 {
                    best = (a, q);
                }
            }
            choice[s] = best.0;
            v[s] = best.1;
        }
    }
    let value = layers.range(0).map(|s| mdp.initial()[s] * v[s]).sum();
    Ok((Policy::deterministic(layers, &choice)?, value))
}

/// Best occupancy measure in hindsight for the summed loss table.
pub fn best_occupancy_in_hindsight(mdp: &LayeredMdp, losses: &[f64]) -> Result<(OccupancyMeasure, f64)> {
    let (pi, value) = best_policy_in_hindsight(mdp, losses)?;
    Ok((occupancy_of_policy(mdp, &pi), value))
}

/// Expected total loss of `policy` by backward policy evaluation.
pub fn policy_value(mdp: &LayeredMdp, policy: &Policy, losses: &[f64]) -> Result<f64> {
    check_losses(mdp, losses)?;
    let layers = mdp.layers();
    if policy.num_states() != layers.num_states() || policy.actions() != layers.actions() {
        return Err(Error::invalid("policy does not match the MDP"));
    }
    let mut v = vec![0.0; layers.num_states()];
    for h in (0..layers.horizon()).rev() {
        let next_start = if layers.is_last(h) { 0 } else { layers.range(h + 1).start };
        for s in layers.range(h) {
            let mut acc = 0.0;
            for a in 0..layers.actions() {
                let mut q = losses[layers.pair(s, a)];
                if !layers.is_last(h) {
                    q += expect_next(mdp, s, a, next_start, &v);
                }
                acc += policy.prob(s, a) * q;
            }
            v[s] = acc;
        }
    }
    Ok(layers.range(0).map(|s| mdp.initial()[s] * v[s]).sum())
}

/// Largest probability with which any policy visits `target`, and a
/// deterministic policy attaining it. Rows at or after the target's layer
/// are uniform.
pub fn max_reach_probability(mdp: &LayeredMdp, target: usize) -> Result<(f64, Policy)> {
    let layers = mdp.layers();
    if target >= layers.num_states() {
        return Err(Error::invalid(format!("target state {target} out of range")));
    }
    let ht = layers.layer_of(target);
    let mut v = vec![0.0; layers.num_states()];
    v[target] = 1.0;
    let mut probs = vec![1.0 / layers.actions() as f64; layers.num_pairs()];
    for h in (0..ht).rev() {
        let next_start = layers.range(h + 1).start;
        for s in layers.range(h) {
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..layers.actions() {
                let q = expect_next(mdp, s, a, next_start, &v);
                if q > best.1 {
                    best = (a, q);
                }
            }
            v[s] = best.1;
            let row = &mut probs[s * layers.actions()..(s + 1) * layers.actions()];
            row.fill(0.0);
            row[best.0] = 1.0;
        }
    }
    let reach = layers.range(0).map(|s| mdp.initial()[s] * v[s]).sum();
    Ok((reach, Policy::from_rows(layers.actions(), probs)?))
}
