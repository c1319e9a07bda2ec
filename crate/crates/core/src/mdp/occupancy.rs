use super::{LayeredMdp, Layers, Policy};
use crate::error::{Error, Result};

/// Occupancy measure `q(s, a, s')` together with its marginals.
///
/// `initial[s]` is the mass entering layer 0 at `s`; `sa[pair(s, a)]` is
/// `q(s, a)`; `sas[pair(s, a)]` spreads `q(s, a)` over the next layer (empty
/// for the last layer).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    layers: Layers,
    initial: Vec<f64>,
    sa: Vec<f64>,
    sas: Vec<Vec<f64>>,
}

impl OccupancyMeasure {
    pub fn new(layers: Layers, initial: Vec<f64>, sa: Vec<f64>, sas: Vec<Vec<f64>>) -> Result<Self> {
        if initial.len() != layers.size(0) || sa.len() != layers.num_pairs() || sas.len() != layers.num_pairs() {
            return Err(Error::invalid("occupancy table shape mismatch"));
        }
        let q = OccupancyMeasure { layers, initial, sa, sas };
        q.validate(1e-9)?;
        Ok(q)
    }

    pub fn layers(&self) -> &Layers {
        &self.layers
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn sa(&self) -> &[f64] {
        &self.sa
    }

    pub fn pair(&self, s: usize, a: usize) -> f64 {
        self.sa[self.layers.pair(s, a)]
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.sas[self.layers.pair(s, a)]
    }

    pub fn state(&self, s: usize) -> f64 {
        let a = self.layers.actions();
        self.sa[s * a..(s + 1) * a].iter().sum()
    }

    /// Mass flowing into `s` from the previous layer (or the start state).
    pub fn inflow(&self, s: usize) -> f64 {
        let h = self.layers.layer_of(s);
        if h == 0 {
            return self.initial[s];
        }
        let offset = self.layers.range(h).start;
        self.layers
            .range(h - 1)
            .flat_map(|p| (0..self.layers.actions()).map(move |a| (p, a)))
            .map(|(p, a)| self.transition(p, a)[s - offset])
            .sum()
    }

    /// `<q, l>` for an `S x A` loss table.
    pub fn value(&self, losses: &[f64]) -> f64 {
        self.sa.iter().zip(losses).map(|(q, l)| q * l).sum()
    }

    /// Checks non-negativity, unit mass per layer, row consistency
    /// `sum_{s'} q(s, a, s') = q(s, a)` and flow conservation.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let l = &self.layers;
        let all = self.initial.iter().chain(&self.sa).chain(self.sas.iter().flatten());
        if all.clone().any(|x| !x.is_finite() || *x < -tol) {
            return Err(Error::numerical("occupancy has negative or non-finite entries"));
        }
        let init_mass: f64 = self.initial.iter().sum();
        if (init_mass - 1.0).abs() > tol {
            return Err(Error::numerical(format!("initial mass {init_mass}")));
        }
        for h in 0..l.horizon() {
            let mass: f64 = l.range(h).map(|s| self.state(s)).sum();
            if (mass - 1.0).abs() > tol {
                return Err(Error::numerical(format!("layer {h} carries mass {mass}")));
            }
            let next = l.next_size(h);
            for s in l.range(h) {
                let diff = (self.state(s) - self.inflow(s)).abs();
                if diff > tol {
                    return Err(Error::numerical(format!("flow violated at state {s} by {diff}")));
                }
                for a in 0..l.actions() {
                    let row = self.transition(s, a);
                    if row.len() != next {
                        return Err(Error::numerical("transition row has wrong width"));
                    }
                    if next > 0 {
                        let d = (row.iter().sum::<f64>() - self.pair(s, a)).abs();
                        if d > tol {
                            return Err(Error::numerical(format!("row ({s}, {a}) inconsistent by {d}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `P(s' | s, a) = q(s, a, s') / q(s, a)`, uniform where `q(s, a) = 0`.
    pub fn induced_kernel(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let kernel = self
            .sas
            .iter()
            .zip(&self.sa)
            .map(|(row, m)| {
                if row.is_empty() {
                    vec![]
                } else if *m > 0.0 {
                    row.iter().map(|x| x / m).collect()
                } else {
                    vec![1.0 / row.len() as f64; row.len()]
                }
            })
            .collect();
        (self.initial.clone(), kernel)
    }

    /// `w self + (1 - w) other`.
    pub fn mix(&self, other: &OccupancyMeasure, w: f64) -> OccupancyMeasure {
        let lin = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect::<Vec<_>>();
        OccupancyMeasure {
            layers: self.layers.clone(),
            initial: lin(&self.initial, &other.initial),
            sa: lin(&self.sa, &other.sa),
            sas: self.sas.iter().zip(&other.sas).map(|(a, b)| lin(a, b)).collect(),
        }
    }

    /// Uniform average of several measures on the same layers.
    pub fn average(measures: &[OccupancyMeasure]) -> Result<OccupancyMeasure> {
        let first = measures.first().ok_or_else(|| Error::invalid("nothing to average"))?;
        let k = measures.len() as f64;
        let mut acc = first.clone();
        for q in &measures[1..] {
            for (x, y) in acc.initial.iter_mut().zip(&q.initial) {
                *x += y;
            }
            for (x, y) in acc.sa.iter_mut().zip(&q.sa) {
                *x += y;
            }
            for (r, o) in acc.sas.iter_mut().zip(&q.sas) {
                for (x, y) in r.iter_mut().zip(o) {
                    *x += y;
                }
            }
        }
        acc.initial.iter_mut().chain(acc.sa.iter_mut()).chain(acc.sas.iter_mut().flatten()).for_each(|x| *x /= k);
        Ok(acc)
    }
}

/// Forward pass of `policy` through an arbitrary kernel on `layers`.
pub fn occupancy_with_kernel(
    layers: &Layers,
    initial: &[f64],
    kernel: &[Vec<f64>],
    policy: &Policy,
) -> OccupancyMeasure {
    let na = layers.actions();
    let mut reach = vec![0.0; layers.num_states()];
    reach[layers.range(0)].copy_from_slice(initial);
    let mut sa = vec![0.0; layers.num_pairs()];
    let mut sas = vec![Vec::new(); layers.num_pairs()];
    for h in 0..layers.horizon() {
        let next = layers.next_size(h);
        let next_start = if next > 0 { layers.range(h + 1).start } else { 0 };
        for s in layers.range(h) {
            for a in 0..na {
                let i = layers.pair(s, a);
                let m = reach[s] * policy.prob(s, a);
                sa[i] = m;
                if next > 0 {
                    let row: Vec<f64> = kernel[i].iter().map(|p| m * p).collect();
                    for (k, x) in row.iter().enumerate() {
                        reach[next_start + k] += x;
                    }
                    sas[i] = row;
                }
            }
        }
    }
    OccupancyMeasure { layers: layers.clone(), initial: initial.to_vec(), sa, sas }
}

/// Exact occupancy `q^{P, pi}` by a forward pass layer by layer.
pub fn occupancy_of_policy(mdp: &LayeredMdp, policy: &Policy) -> OccupancyMeasure {
    occupancy_with_kernel(mdp.layers(), mdp.initial(), mdp.kernel(), policy)
}

/// `pi(a | s) = q(s, a) / q(s)`; states without mass get a uniform row.
pub fn policy_of_occupancy(q: &OccupancyMeasure) -> Policy {
    let layers = q.layers();
    let na = layers.actions();
    let mut probs = vec![0.0; layers.num_pairs()];
    for s in 0..layers.num_states() {
        let row = &q.sa()[s * na..(s + 1) * na];
        let total: f64 = row.iter().map(|x| x.max(0.0)).sum();
        for a in 0..na {
            probs[s * na + a] = if total > 0.0 { row[a].max(0.0) / total } else { 1.0 / na as f64 };
        }
    }
    Policy::from_rows(na, probs).expect("normalized rows")
}
