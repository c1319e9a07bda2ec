//! Entropy-regularized FTRL over the occupancy measures compatible with a
//! kernel box, solved by a primal log-barrier method.
//!
//! Variables are the start-row split `y(s)`, the pair marginals `m(s, a)`
//! and the transported mass `x(s, a, s')`. Equalities are flow
//! conservation and row consistency `sum_{s'} x = m`; inequalities are
//! `lo m <= x <= hi m`, `lo <= y <= hi` and `m > 0`. Entries or rows that
//! the box pins to a single value are substituted out, and states no
//! kernel in the box can reach are dropped.

use nalgebra::{DMatrix, DVector};

use super::confidence::{KernelBox, FIXED_ROW_SLACK};
use crate::clip::canonical_ratio;
use crate::error::{Error, Result};
use crate::mdp::{occupancy_with_kernel, Layers, OccupancyMeasure, Policy};

const ENTRY_WIDTH_TOL: f64 = 1e-13;
const GAP_TOL: f64 = 1e-10;
const BARRIER_GROWTH: f64 = 40.0;
const MAX_NEWTON: usize = 3000;
const MAX_INNER: usize = 200;
const DECREMENT_TOL: f64 = 1e-11;

/// Objective `sum <m, L> + sum_h w_h sum_{s in h, a} m ln m` of a marginal
/// table.
pub fn objective(layers: &Layers, marginals: &[f64], cumulative: &[f64], weights: &[f64]) -> f64 {
    let na = layers.actions();
    let mut total = 0.0;
    for h in 0..layers.horizon() {
        for s in layers.range(h) {
            for a in 0..na {
                let m = marginals[s * na + a];
                total += cumulative[s * na + a] * m;
                if m > 0.0 {
                    total += weights[h] * m * m.ln();
                }
            }
        }
    }
    total
}

/// Regularization weights `C_h / eta`. Layers whose threshold is still
/// zero take the largest positive weight (or 1 when every layer is zero),
/// which keeps the program strictly convex and the solution scale-free.
pub fn layer_weights(thresholds: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    if thresholds.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("thresholds must be finite and non-negative"));
    }
    let w: Vec<f64> = thresholds.iter().map(|c| c / eta).collect();
    let fill = w.iter().copied().fold(0.0, f64::max);
    let fill = if fill > 0.0 { fill } else { 1.0 };
    Ok(w.into_iter().map(|x| if x > 0.0 { x } else { fill }).collect())
}

/// Each layer's threshold relative to the largest one, as a
/// [`canonical_ratio`]. Zero thresholds map to 1, the weight of the largest.
pub fn relative_thresholds(thresholds: &[f64]) -> Result<Vec<f64>> {
    if thresholds.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("thresholds must be finite and non-negative"));
    }
    let max = thresholds.iter().copied().fold(0.0, f64::max);
    Ok(thresholds.iter().map(|c| if *c > 0.0 { canonical_ratio(*c, max) } else { 1.0 }).collect())
}

/// Minimizer of the FTRL program and the kernel/policy realizing it.
#[derive(Debug, Clone)]
pub struct FtrlSolution {
    pub occupancy: OccupancyMeasure,
    pub policy: Policy,
    pub initial: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub objective: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone)]
enum Row {
    /// Whole row pinned to these transition probabilities.
    Fixed(Vec<f64>),
    /// `Var(k)` entries are free variables, `Ratio(p)` entries are `p m`.
    Free(Vec<Entry>),
}

#[derive(Debug, Clone, Copy)]
enum Entry {
    Var(usize),
    Ratio(f64),
}

/// `c_i z_i + c_j z_j + c0 > 0`.
#[derive(Debug, Clone, Copy)]
struct Ineq {
    i: usize,
    ci: f64,
    j: Option<(usize, f64)>,
    c0: f64,
}

impl Ineq {
    fn eval(&self, z: &[f64]) -> f64 {
        self.ci * z[self.i] + self.j.map_or(0.0, |(j, c)| c * z[j]) + self.c0
    }
}

fn interior(lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let (sl, sh) = (lo.iter().sum::<f64>(), hi.iter().sum::<f64>());
    let theta = if sh > sl { ((1.0 - sl) / (sh - sl)).clamp(0.0, 1.0) } else { 0.0 };
    let p: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l + (h - l) * theta).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|x| x / total).collect()
}

/// Splits a box row into pinned and free entries. Returns the interior
/// point of the row and, if the row is free, which entries are pinned.
fn classify(lo: &[f64], hi: &[f64]) -> (Vec<f64>, Option<Vec<bool>>) {
    let center = interior(lo, hi);
    let (sl, sh) = (lo.iter().sum::<f64>(), hi.iter().sum::<f64>());
    if 1.0 - sl <= FIXED_ROW_SLACK || sh - 1.0 <= FIXED_ROW_SLACK {
        return (center, None);
    }
    let pinned: Vec<bool> = lo.iter().zip(hi).map(|(l, h)| h - l <= ENTRY_WIDTH_TOL).collect();
    let fixed_mass: f64 = center.iter().zip(&pinned).filter(|(_, p)| **p).map(|(c, _)| c).sum();
    let (free_lo, free_hi) =
        lo.iter().zip(hi).zip(&pinned).filter(|(_, p)| !**p).fold((0.0, 0.0), |(a, b), ((l, h), _)| (a + l, b + h));
    let need = 1.0 - fixed_mass;
    if need - free_lo <= FIXED_ROW_SLACK || free_hi - need <= FIXED_ROW_SLACK {
        return (center, None);
    }
    (center, Some(pinned))
}

struct Program {
    layers: Layers,
    n: usize,
    /// Start row: variable index per layer-0 state, or a constant.
    start: Vec<Entry>,
    start_center: Vec<f64>,
    m_var: Vec<Option<usize>>,
    rows: Vec<Option<Row>>,
    centers: Vec<Vec<f64>>,
    eq: DMatrix<f64>,
    ineqs: Vec<Ineq>,
    /// Linear and entropy coefficients of each marginal variable.
    lin: Vec<(usize, f64, f64)>,
    z0: Vec<f64>,
}

impl Program {
    fn build(bounds: &KernelBox, cumulative: &[f64], weights: &[f64], scale: f64) -> Program {
        let l = bounds.layers().clone();
        let na = l.actions();
        let mut n = 0;
        let mut next_var = || {
            n += 1;
            n - 1
        };
        let mut ineqs = Vec::new();
        let mut z0 = Vec::new();

        let (ilo, ihi) = bounds.initial_bounds();
        let (start_center, start_free) = classify(ilo, ihi);
        let mut start = Vec::with_capacity(l.size(0));
        for (k, c) in start_center.iter().enumerate() {
            match &start_free {
                Some(pinned) if !pinned[k] => {
                    let v = next_var();
                    z0.push(*c);
                    ineqs.push(Ineq { i: v, ci: 1.0, j: None, c0: -ilo[k] });
                    if ihi[k] < 1.0 {
                        ineqs.push(Ineq { i: v, ci: -1.0, j: None, c0: ihi[k] });
                    }
                    start.push(Entry::Var(v));
                }
                _ => start.push(Entry::Ratio(*c)),
            }
        }

        let mut reach = vec![0.0; l.num_states()];
        for (k, s) in l.range(0).enumerate() {
            reach[s] = start_center[k];
        }
        let mut m_var = vec![None; l.num_pairs()];
        let mut rows: Vec<Option<Row>> = vec![None; l.num_pairs()];
        let mut centers = vec![Vec::new(); l.num_pairs()];
        let mut lin = Vec::new();
        for h in 0..l.horizon() {
            for s in l.range(h) {
                if reach[s] <= 0.0 {
                    continue;
                }
                for a in 0..na {
                    let i = l.pair(s, a);
                    let mv = next_var();
                    let mass = reach[s] / na as f64;
                    m_var[i] = Some(mv);
                    z0.push(mass);
                    ineqs.push(Ineq { i: mv, ci: 1.0, j: None, c0: 0.0 });
                    lin.push((mv, cumulative[i] / scale, weights[h] / scale));
                    if l.is_last(h) {
                        continue;
                    }
                    let (lo, hi) = bounds.bounds(s, a);
                    let (center, free) = classify(lo, hi);
                    let start_next = l.range(h + 1).start;
                    for (k, c) in center.iter().enumerate() {
                        reach[start_next + k] += mass * c;
                    }
                    rows[i] = Some(match free {
                        None => Row::Fixed(center.clone()),
                        Some(pinned) => Row::Free(
                            center
                                .iter()
                                .enumerate()
                                .map(|(k, c)| {
                                    if pinned[k] {
                                        Entry::Ratio(*c)
                                    } else {
                                        let xv = next_var();
                                        z0.push(c * mass);
                                        ineqs.push(Ineq { i: xv, ci: 1.0, j: Some((mv, -lo[k])), c0: 0.0 });
                                        if hi[k] < 1.0 {
                                            ineqs.push(Ineq { i: xv, ci: -1.0, j: Some((mv, hi[k])), c0: 0.0 });
                                        }
                                        Entry::Var(xv)
                                    }
                                })
                                .collect(),
                        ),
                    });
                    centers[i] = center;
                }
            }
        }

        // equality constraints
        let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        if start.iter().any(|e| matches!(e, Entry::Var(_))) {
            let mut coeffs = Vec::new();
            let mut b = 1.0;
            for e in &start {
                match e {
                    Entry::Var(v) => coeffs.push((*v, 1.0)),
                    Entry::Ratio(c) => b -= c,
                }
            }
            eq_rows.push((coeffs, b));
        }
        for h in 0..l.horizon() {
            for s in l.range(h) {
                if reach[s] <= 0.0 {
                    continue;
                }
                let mut coeffs: Vec<(usize, f64)> =
                    (0..na).map(|a| (m_var[l.pair(s, a)].expect("reachable"), 1.0)).collect();
                let mut b = 0.0;
                if h == 0 {
                    match start[s - l.range(0).start] {
                        Entry::Var(v) => coeffs.push((v, -1.0)),
                        Entry::Ratio(c) => b += c,
                    }
                } else {
                    let k = s - l.range(h).start;
                    for p in l.range(h - 1) {
                        for a in 0..na {
                            let i = l.pair(p, a);
                            let Some(mv) = m_var[i] else { continue };
                            match &rows[i] {
                                Some(Row::Fixed(prob)) if prob[k] > 0.0 => coeffs.push((mv, -prob[k])),
                                Some(Row::Free(entries)) => match entries[k] {
                                    Entry::Var(xv) => coeffs.push((xv, -1.0)),
                                    Entry::Ratio(c) if c > 0.0 => coeffs.push((mv, -c)),
                                    Entry::Ratio(_) => {}
                                },
                                _ => {}
                            }
                        }
                    }
                }
                eq_rows.push((coeffs, b));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if let Some(Row::Free(entries)) = row {
                let mv = m_var[i].expect("rows exist only for reachable pairs");
                let mut coeffs = Vec::new();
                let mut pinned = 0.0;
                for e in entries {
                    match e {
                        Entry::Var(v) => coeffs.push((*v, 1.0)),
                        Entry::Ratio(c) => pinned += c,
                    }
                }
                coeffs.push((mv, pinned - 1.0));
                eq_rows.push((coeffs, 0.0));
            }
        }
        let mut eq = DMatrix::zeros(eq_rows.len(), n);
        for (r, (coeffs, _)) in eq_rows.iter().enumerate() {
            for (c, v) in coeffs {
                eq[(r, *c)] += v;
            }
        }
        Program { layers: l, n, start, start_center, m_var, rows, centers, eq, ineqs, lin, z0 }
    }

    fn objective(&self, z: &[f64]) -> f64 {
        self.lin.iter().map(|(k, c, w)| c * z[*k] + w * z[*k] * z[*k].ln()).sum()
    }

    fn barrier(&self, z: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for g in &self.ineqs {
            let v = g.eval(z);
            if v <= 0.0 {
                return None;
            }
            acc -= v.ln();
        }
        Some(acc)
    }

    fn centering(&self, t: f64, z: &[f64]) -> Option<f64> {
        self.barrier(z).map(|b| t * self.objective(z) + b)
    }

    /// Orthonormal basis of the null space of the equality constraints.
    fn null_space(&self) -> DMatrix<f64> {
        let n = self.n;
        if self.eq.nrows() == 0 {
            return DMatrix::identity(n, n);
        }
        let gram = self.eq.transpose() * &self.eq;
        let eig = gram.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1.0);
        let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale).collect();
        DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
    }

    fn solve(&self) -> Result<(Vec<f64>, usize)> {
        let n = self.n;
        let mut z = self.z0.clone();
        if self.barrier(&z).is_none() {
            return Err(Error::numerical("interior starting point is not strictly feasible"));
        }
        let basis = self.null_space();
        if basis.ncols() == 0 {
            return Ok((z, 0));
        }
        let n_ineq = self.ineqs.len() as f64;
        let mut t = 1.0;
        let mut steps = 0;
        let mut hess = DMatrix::zeros(n, n);
        let mut grad = DVector::zeros(n);
        loop {
            for _ in 0..MAX_INNER {
                steps += 1;
                if steps > MAX_NEWTON {
                    return Err(Error::numerical(format!(
                        "occupancy FTRL did not converge within {MAX_NEWTON} Newton steps (t = {t:e})"
                    )));
                }
                hess.fill(0.0);
                grad.fill(0.0);
                for &(k, c, w) in &self.lin {
                    grad[k] += t * (c + w * (z[k].ln() + 1.0));
                    hess[(k, k)] += t * w / z[k];
                }
                for g in &self.ineqs {
                    let inv = 1.0 / g.eval(&z);
                    let inv2 = inv * inv;
                    grad[g.i] -= g.ci * inv;
                    hess[(g.i, g.i)] += g.ci * g.ci * inv2;
                    if let Some((j, cj)) = g.j {
                        grad[j] -= cj * inv;
                        hess[(j, j)] += cj * cj * inv2;
                        hess[(g.i, j)] += g.ci * cj * inv2;
                        hess[(j, g.i)] += g.ci * cj * inv2;
                    }
                }
                let rg = basis.tr_mul(&grad);
                let rh = basis.tr_mul(&(&hess * &basis));
                let dw = match rh.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&rg)),
                    None => rh
                        .lu()
                        .solve(&(-&rg))
                        .ok_or_else(|| Error::numerical("singular Newton system in occupancy FTRL"))?,
                };
                let decrement = -rg.dot(&dw);
                if !decrement.is_finite() {
                    return Err(Error::numerical("non-finite Newton step in occupancy FTRL"));
                }
                if decrement <= 2.0 * DECREMENT_TOL {
                    break;
                }
                let dz = &basis * dw;
                let f0 = self.centering(t, &z).expect("iterate is strictly feasible");
                let mut alpha = 1.0;
                let mut accepted = false;
                while alpha > 1e-12 {
                    let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + alpha * d).collect();
                    if let Some(f1) = self.centering(t, &trial) {
                        if f1 <= f0 - 0.25 * alpha * decrement {
                            z = trial;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let f = self.objective(&z);
            if n_ineq / t <= GAP_TOL * f.abs().max(1.0) {
                break;
            }
            t *= BARRIER_GROWTH;
        }
        Ok((z, steps))
    }

    /// Policy and kernel realizing the marginals in `z`.
    fn realize(&self, z: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, Policy) {
        let l = &self.layers;
        let na = l.actions();
        let mut initial: Vec<f64> = self
            .start
            .iter()
            .map(|e| match e {
                Entry::Var(v) => z[*v].max(0.0),
                Entry::Ratio(c) => *c,
            })
            .collect();
        let total: f64 = initial.iter().sum();
        if total > 0.0 {
            initial.iter_mut().for_each(|x| *x /= total);
        } else {
            initial = self.start_center.clone();
        }
        let mut kernel = vec![Vec::new(); l.num_pairs()];
        let mut probs = vec![1.0 / na as f64; l.num_pairs()];
        for h in 0..l.horizon() {
            for s in l.range(h) {
                let masses: Vec<f64> =
                    (0..na).map(|a| self.m_var[l.pair(s, a)].map_or(0.0, |v| z[v].max(0.0))).collect();
                let total: f64 = masses.iter().sum();
                if total > 0.0 {
                    for a in 0..na {
                        probs[l.pair(s, a)] = masses[a] / total;
                    }
                }
                if l.is_last(h) {
                    continue;
                }
                for a in 0..na {
                    let i = l.pair(s, a);
                    kernel[i] = match (&self.rows[i], self.m_var[i]) {
                        (Some(Row::Fixed(p)), _) => p.clone(),
                        (Some(Row::Free(entries)), Some(mv)) if z[mv] > 0.0 => {
                            let m = z[mv];
                            let raw: Vec<f64> = entries
                                .iter()
                                .map(|e| match e {
                                    Entry::Var(v) => (z[*v] / m).max(0.0),
                                    Entry::Ratio(c) => *c,
                                })
                                .collect();
                            let total: f64 = raw.iter().sum();
                            if total > 0.0 {
                                raw.into_iter().map(|x| x / total).collect()
                            } else {
                                self.centers[i].clone()
                            }
                        }
                        (Some(_), _) => self.centers[i].clone(),
                        (None, _) => {
                            let w = l.next_size(h);
                            vec![1.0 / w as f64; w]
                        }
                    };
                }
            }
        }
        let policy = Policy::from_rows(na, probs.clone()).unwrap_or_else(|_| {
            let fixed: Vec<f64> = probs
                .chunks(na)
                .flat_map(|row| {
                    let t: f64 = row.iter().sum();
                    row.iter().map(move |x| x / t).collect::<Vec<_>>()
                })
                .collect();
            Policy::from_rows(na, fixed).expect("renormalized rows")
        });
        (initial, kernel, policy)
    }
}

/// `argmin_q <q, L> + sum_h w_h sum_{s in h, a} q(s, a) ln q(s, a)` over the
/// occupancy measures of kernels in `bounds`.
pub fn solve_occupancy_ftrl(bounds: &KernelBox, cumulative: &[f64], weights: &[f64]) -> Result<FtrlSolution> {
    let l = bounds.layers();
    if cumulative.len() != l.num_pairs() || weights.len() != l.horizon() {
        return Err(Error::invalid("cumulative table or layer weights have the wrong length"));
    }
    if cumulative.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cumulative estimators must be finite"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid("layer weights must be positive"));
    }
    let scale = weights.iter().copied().fold(0.0, f64::max);
    // shifting each layer's losses by a constant leaves the argmin unchanged
    let mut shifted = cumulative.to_vec();
    for h in 0..l.horizon() {
        let idx = l.range(h).start * l.actions()..l.range(h).end * l.actions();
        let min = shifted[idx.clone()].iter().copied().fold(f64::INFINITY, f64::min);
        shifted[idx].iter_mut().for_each(|x| *x -= min);
    }
    let program = Program::build(bounds, &shifted, weights, scale);
    let (z, newton_steps) = program.solve()?;
    let (initial, kernel, policy) = program.realize(&z);
    let occupancy = occupancy_with_kernel(l, &initial, &kernel, &policy);
    occupancy.validate(1e-9)?;
    let objective = objective(l, occupancy.sa(), cumulative, weights);
    Ok(FtrlSolution { occupancy, policy, initial, kernel, objective, newton_steps })
}

/// One FTRL step with weights `C_h / eta` (see [`layer_weights`]).
pub fn occupancy_ftrl_step(
    cumulative: &[f64],
    bounds: &KernelBox,
    thresholds: &[f64],
    eta: f64,
) -> Result<FtrlSolution> {
    let w = layer_weights(thresholds, eta)?;
    solve_occupancy_ftrl(bounds, cumulative, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::LayeredMdp;
    use crate::simplex::{solve_shannon, LearningRate};

    #[test]
    fn horizon_one_is_softmax() {
        let l = Layers::new(vec![1], 4).unwrap();
        let m = LayeredMdp::new(l, vec![1.0], vec![vec![]; 4]).unwrap();
        let cum = [0.3, 2.0, -1.0, 0.7];
        let sol = occupancy_ftrl_step(&cum, &KernelBox::singleton(&m), &[2.0], 0.5).unwrap();
        let p = solve_shannon(&cum, LearningRate::finite(0.5 / 2.0).unwrap()).unwrap();
        for (a, b) in sol.occupancy.sa().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_losses_give_uniform_on_symmetric_box() {
        let l = Layers::new(vec![2, 2], 2).unwrap();
        let b = KernelBox::unconstrained(&l);
        let sol = solve_occupancy_ftrl(&b, &[0.0; 8], &[1.0, 1.0]).unwrap();
        for x in sol.occupancy.sa() {
            assert!((x - 0.25).abs() < 1e-7, "{:?} {}", sol.occupancy.sa(), sol.newton_steps);
        }
    }

    #[test]
    fn weights_fill_zero_layers() {
        assert_eq!(layer_weights(&[0.0, 4.0, 2.0], 2.0).unwrap(), vec![2.0, 2.0, 1.0]);
        assert_eq!(layer_weights(&[0.0, 0.0], 0.1).unwrap(), vec![1.0, 1.0]);
        assert!(layer_weights(&[1.0], 0.0).is_err());
    }
}
