use super::confidence::{water_fill, KernelBox};
use crate::error::{Error, Result};
use crate::mdp::Policy;

fn optimistic(lo: &[f64], hi: &[f64], values: &[f64]) -> f64 {
    water_fill(lo, hi, values).iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Largest probability of visiting `target` under `policy` over all
/// kernels in `bounds`.
///
/// The rows of the set are independent, so the maximum is attained by a
/// backward recursion from the target's layer in which each row puts as
/// much of its free mass as allowed on the successors with the highest
/// values.
pub fn comp_uob(policy: &Policy, target: usize, bounds: &KernelBox) -> Result<f64> {
    let l = bounds.layers();
    if policy.num_states() != l.num_states() || policy.actions() != l.actions() {
        return Err(Error::invalid("policy does not match the confidence set"));
    }
    if target >= l.num_states() {
        return Err(Error::invalid(format!("target state {target} out of range")));
    }
    let ht = l.layer_of(target);
    let mut values: Vec<f64> = l.range(ht).map(|s| if s == target { 1.0 } else { 0.0 }).collect();
    for h in (0..ht).rev() {
        values = l
            .range(h)
            .map(|s| {
                (0..l.actions())
                    .filter(|a| policy.prob(s, *a) > 0.0)
                    .map(|a| {
                        let (lo, hi) = bounds.bounds(s, a);
                        policy.prob(s, a) * optimistic(lo, hi, &values)
                    })
                    .sum()
            })
            .collect();
    }
    let (lo, hi) = bounds.initial_bounds();
    Ok(optimistic(lo, hi, &values).clamp(0.0, 1.0))
}

/// `u(s, a) = pi(a | s) max_P q^{P, pi}(s)` for every pair.
pub fn upper_occupancy(policy: &Policy, bounds: &KernelBox) -> Result<Vec<f64>> {
    let l = bounds.layers();
    let mut u = vec![0.0; l.num_pairs()];
    for s in 0..l.num_states() {
        let reach = comp_uob(policy, s, bounds)?;
        for a in 0..l.actions() {
            u[l.pair(s, a)] = policy.prob(s, a) * reach;
        }
    }
    Ok(u)
}
