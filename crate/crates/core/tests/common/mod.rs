#![allow(dead_code)]

use rand::Rng;
use scb_core::mdp::{LayeredMdp, Layers, Policy};
use scb_core::uob::KernelBox;

pub fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.02).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

pub fn random_mdp<R: Rng>(rng: &mut R, sizes: &[usize], actions: usize) -> LayeredMdp {
    let l = Layers::new(sizes.to_vec(), actions).unwrap();
    let initial = random_row(rng, l.size(0));
    let mut kernel = Vec::new();
    for h in 0..l.horizon() {
        for _ in l.range(h) {
            for _ in 0..actions {
                kernel.push(if l.is_last(h) { vec![] } else { random_row(rng, l.next_size(h)) });
            }
        }
    }
    LayeredMdp::new(l, initial, kernel).unwrap()
}

pub fn random_policy<R: Rng>(rng: &mut R, layers: &Layers) -> Policy {
    let probs: Vec<f64> = (0..layers.num_states()).flat_map(|_| random_row(rng, layers.actions())).collect();
    Policy::from_rows(layers.actions(), probs).unwrap()
}

/// Every (state, action) path through the MDP with its probability.
pub fn enumerate_paths(mdp: &LayeredMdp, policy: &Policy) -> Vec<(Vec<(usize, usize)>, f64)> {
    let l = mdp.layers();
    let mut paths: Vec<(Vec<(usize, usize)>, f64)> = Vec::new();
    for (i, p0) in mdp.initial().iter().enumerate() {
        if *p0 > 0.0 {
            paths.push((vec![(i, usize::MAX)], *p0));
        }
    }
    for h in 0..l.horizon() {
        let mut next = Vec::new();
        for (path, p) in paths {
            let s = path.last().unwrap().0;
            for a in 0..l.actions() {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                let mut with_a = path.clone();
                with_a.last_mut().unwrap().1 = a;
                if l.is_last(h) {
                    next.push((with_a, p * pa));
                } else {
                    let base = l.range(h + 1).start;
                    for (j, pt) in mdp.row(s, a).iter().enumerate() {
                        if *pt > 0.0 {
                            let mut ext = with_a.clone();
                            ext.push((base + j, usize::MAX));
                            next.push((ext, p * pa * pt));
                        }
                    }
                }
            }
        }
        paths = next;
    }
    paths
}

/// Grid points of the probability simplex of width `n` at step `1 / k`.
pub fn simplex_grid(n: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|c| *c as f64 / k as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, k, &mut Vec::with_capacity(n), &mut out);
    out
}

pub fn grid_max(grid: &[Vec<f64>], lo: &[f64], hi: &[f64], values: &[f64]) -> f64 {
    grid.iter()
        .filter(|p| p.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| *x >= l - 1e-12 && *x <= h + 1e-12))
        .map(|p| p.iter().zip(values).map(|(x, v)| x * v).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn epsilon_box(mdp: &LayeredMdp, eps: f64) -> KernelBox {
    let widen = |row: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (row.iter().map(|p| (p - eps).max(0.0)).collect(), row.iter().map(|p| (p + eps).min(1.0)).collect())
    };
    let (il, ih) = widen(mdp.initial());
    let (lo, hi): (Vec<_>, Vec<_>) = mdp.kernel().iter().map(|r| widen(r)).unzip();
    KernelBox::new(mdp.layers().clone(), il, ih, lo, hi).unwrap()
}

pub fn brute_reach(mdp: &LayeredMdp, pi: &Policy, bounds: &KernelBox, target: usize, k: usize) -> f64 {
    let l = mdp.layers();
    let grid0 = simplex_grid(l.size(0), k);
    let (il, ih) = bounds.initial_bounds();
    if l.layer_of(target) == 0 {
        let e: Vec<f64> = l.range(0).map(|s| if s == target { 1.0 } else { 0.0 }).collect();
        return grid_max(&grid0, il, ih, &e);
    }
    let grid1 = simplex_grid(l.size(1), k);
    let e: Vec<f64> = l.range(1).map(|s| if s == target { 1.0 } else { 0.0 }).collect();
    let values: Vec<f64> = l
        .range(0)
        .map(|s| {
            (0..l.actions())
                .map(|a| {
                    let (lo, hi) = bounds.bounds(s, a);
                    pi.prob(s, a) * grid_max(&grid1, lo, hi, &e)
                })
                .sum()
        })
        .collect();
    grid_max(&grid0, il, ih, &values)
}

/// Largest deviation between the enumerated expectation of the MDP loss
/// estimator and `q / (u + gamma)` times the offset loss, on a random
/// two-layer instance after a few observed episodes. Infinite if `u < q`
/// while the confidence set holds the true kernel.
pub fn estimator_identity_error(seed: u64) -> f64 {
    use rand::SeedableRng;
    use scb_core::clip::{clip, ClipState};
    use scb_core::explore::MixturePolicy;
    use scb_core::mdp::{occupancy_of_policy, sample_trajectory, Step, Trajectory};
    use scb_core::uob::{mdp_estimator, LayerClipState, UobRepsConfig, UobRepsEx};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mdp = random_mdp(&mut rng, &[2, 2], 2);
    let l = mdp.layers();
    let exploration: Vec<MixturePolicy> = (0..l.num_states())
        .map(|s| {
            let members = (0..3).map(|_| random_policy(&mut rng, l)).collect();
            MixturePolicy::new(members, Some(s)).unwrap()
        })
        .collect();
    let beta = 0.3;
    let gamma = 0.05;
    let mut reps =
        UobRepsEx::new(l, UobRepsConfig { eta: 0.7, gamma, beta, log_term: 2.0 }, exploration.clone()).unwrap();
    let mut clip_state = LayerClipState::new(2);
    for _ in 0..5 {
        let losses: Vec<f64> = (0..l.num_pairs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = sample_trajectory(&mdp, reps.learner_policy(), &losses, &mut rng);
        reps.observe(&t, &clip_state.process(&t)).unwrap();
    }
    let u = reps.upper().to_vec();
    let thresholds = [1.5, 3.0];
    let table: Vec<f64> = (0..l.num_pairs()).map(|_| rng.random_range(-4.0..4.0)).collect();
    let offset = |i: usize, h: usize| {
        let c = thresholds[h];
        clip(table[i], &ClipState::with_threshold(c, 10).unwrap()) + c
    };

    let mut played: Vec<(Policy, f64)> = vec![(reps.learner_policy().clone(), 1.0 - beta)];
    for mix in &exploration {
        for (p, w) in mix.weighted() {
            played.push((p.clone(), beta * w / exploration.len() as f64));
        }
    }
    let mut expectation = vec![0.0; l.num_pairs()];
    let mut q = vec![0.0; l.num_pairs()];
    for (pi, w) in &played {
        for (x, y) in q.iter_mut().zip(occupancy_of_policy(&mdp, pi).sa()) {
            *x += w * y;
        }
        for (path, p) in enumerate_paths(&mdp, pi) {
            let traj = Trajectory {
                steps: path.iter().map(|(s, a)| Step { state: *s, action: *a, loss: table[l.pair(*s, *a)] }).collect(),
            };
            let offsets: Vec<f64> = path.iter().enumerate().map(|(h, (s, a))| offset(l.pair(*s, *a), h)).collect();
            let e = mdp_estimator(l, &traj, &offsets, &u, gamma).unwrap();
            for (x, y) in expectation.iter_mut().zip(e) {
                *x += w * p * y;
            }
        }
    }
    let holds = reps.confidence().bounds().contains(&mdp, 0.0);
    let mut worst: f64 = 0.0;
    for s in 0..l.num_states() {
        for a in 0..l.actions() {
            let i = l.pair(s, a);
            if holds && u[i] + 1e-12 < q[i] {
                return f64::INFINITY;
            }
            let want = q[i] / (u[i] + gamma) * offset(i, l.layer_of(s));
            worst = worst.max((expectation[i] - want).abs());
        }
    }
    worst
}
