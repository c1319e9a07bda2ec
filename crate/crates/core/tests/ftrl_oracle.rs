//! Duality checks for the occupancy FTRL solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scb_core::mdp::{sample_trajectory, LayeredMdp, Layers, Policy};
use scb_core::uob::{solve_occupancy_ftrl, ConfidenceSet, KernelBox};

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

fn random_mdp(rng: &mut ChaCha8Rng, sizes: Vec<usize>, actions: usize) -> LayeredMdp {
    let l = Layers::new(sizes, actions).unwrap();
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

/// `max p.v` over the row box by greedy filling of the highest values.
fn best_row_value(lo: &[f64], hi: &[f64], v: &[f64]) -> f64 {
    let mut p = lo.to_vec();
    let mut free = 1.0 - lo.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|a, b| v[*b].partial_cmp(&v[*a]).unwrap());
    for i in order {
        let add = (hi[i] - lo[i]).min(free).max(0.0);
        p[i] += add;
        free -= add;
    }
    p.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Lagrange dual of the FTRL program at multipliers `v`.
fn dual(b: &KernelBox, cum: &[f64], w: &[f64], v: &[f64]) -> f64 {
    let l = b.layers();
    let (ilo, ihi) = b.initial_bounds();
    let mut g = -best_row_value(ilo, ihi, &v[l.range(0)]);
    for h in 0..l.horizon() {
        for s in l.range(h) {
            for a in 0..l.actions() {
                let ev = if l.is_last(h) {
                    0.0
                } else {
                    let (lo, hi) = b.bounds(s, a);
                    best_row_value(lo, hi, &v[l.range(h + 1)])
                };
                let c = cum[l.pair(s, a)] + v[s] - ev;
                g -= w[h] * (-c / w[h] - 1.0).exp();
            }
        }
    }
    g
}

/// Multipliers whose inner minimizer reproduces the given state masses.
fn matching_multipliers(b: &KernelBox, cum: &[f64], w: &[f64], mass: &[f64]) -> Vec<f64> {
    let l = b.layers();
    let mut v = vec![0.0; l.num_states()];
    for h in (0..l.horizon()).rev() {
        for s in l.range(h) {
            let z: f64 = (0..l.actions())
                .map(|a| {
                    let ev = if l.is_last(h) {
                        0.0
                    } else {
                        let (lo, hi) = b.bounds(s, a);
                        best_row_value(lo, hi, &v[l.range(h + 1)])
                    };
                    (-(cum[l.pair(s, a)] - ev) / w[h] - 1.0).exp()
                })
                .sum();
            v[s] = w[h] * (z / mass[s]).ln();
        }
    }
    v
}

fn check_gap(b: &KernelBox, cum: &[f64], w: &[f64]) {
    let sol = solve_occupancy_ftrl(b, cum, w).unwrap();
    let l = b.layers();
    let mass: Vec<f64> = (0..l.num_states()).map(|s| sol.occupancy.state(s)).collect();
    assert!(mass.iter().all(|m| *m > 1e-12), "unreached state in {mass:?}");
    let v = matching_multipliers(b, cum, w, &mass);
    let g = dual(b, cum, w, &v);
    let scale = w.iter().copied().fold(1.0, f64::max) * l.horizon() as f64;
    assert!(sol.objective - g <= 1e-7 * scale, "primal {} dual {}", sol.objective, g);
    assert!(g - sol.objective <= 1e-7 * scale, "dual exceeds primal: {} > {}", g, sol.objective);
}

fn learned_box(rng: &mut ChaCha8Rng, mdp: &LayeredMdp, episodes: usize) -> KernelBox {
    let mut cs = ConfidenceSet::new(mdp.layers(), 3.0).unwrap();
    let pi = Policy::uniform(mdp.layers());
    let zeros = vec![0.0; mdp.layers().num_pairs()];
    for _ in 0..episodes {
        let t = sample_trajectory(mdp, &pi, &zeros, rng);
        cs.update(&t).unwrap();
    }
    cs.bounds().clone()
}

#[test]
fn known_kernel_solution_is_dual_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let m = random_mdp(&mut rng, vec![2, 3, 2], 2);
        let cum: Vec<f64> = (0..m.layers().num_pairs()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w = [0.5, 2.0, 1.0];
        check_gap(&KernelBox::singleton(&m), &cum, &w);
    }
}

#[test]
fn confidence_box_solution_is_dual_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for episodes in [0, 5, 40, 400, 5000] {
        let m = random_mdp(&mut rng, vec![2, 3, 3, 2], 3);
        let b = learned_box(&mut rng, &m, episodes);
        let cum: Vec<f64> = (0..m.layers().num_pairs()).map(|_| rng.random_range(0.0..20.0)).collect();
        let w = [1.5, 1.5, 0.7, 3.0];
        check_gap(&b, &cum, &w);
    }
}

#[test]
fn perturbed_multipliers_never_exceed_the_primal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = random_mdp(&mut rng, vec![2, 2, 2], 2);
    let b = learned_box(&mut rng, &m, 30);
    let cum: Vec<f64> = (0..m.layers().num_pairs()).map(|_| rng.random_range(0.0..4.0)).collect();
    let w = [1.0, 1.0, 1.0];
    let sol = solve_occupancy_ftrl(&b, &cum, &w).unwrap();
    for _ in 0..200 {
        let v: Vec<f64> = (0..m.layers().num_states()).map(|_| rng.random_range(-3.0..3.0)).collect();
        assert!(dual(&b, &cum, &w, &v) <= sol.objective + 1e-9);
    }
}

#[test]
fn projected_gradient_agrees_on_a_known_kernel() {
    // two-step chain with a fixed kernel: the occupancy is determined by the
    // policy, so descend on softmax logits of the policy directly
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let m = random_mdp(&mut rng, vec![1, 2], 2);
    let cum = [0.4, -0.3, 1.2, 0.1, -0.8, 0.5];
    let w = [0.8, 1.3];
    let sol = solve_occupancy_ftrl(&KernelBox::singleton(&m), &cum, &w).unwrap();
    let objective = |th: &[f64]| {
        let mut probs = Vec::new();
        for s in 0..3 {
            let e = [th[2 * s].exp(), th[2 * s + 1].exp()];
            probs.extend([e[0] / (e[0] + e[1]), e[1] / (e[0] + e[1])]);
        }
        let pi = Policy::from_rows(2, probs).unwrap();
        let q = scb_core::mdp::occupancy_of_policy(&m, &pi);
        scb_core::uob::objective(m.layers(), q.sa(), &cum, &w)
    };
    let mut th = vec![0.0; 6];
    for _ in 0..20_000 {
        let f0 = objective(&th);
        let grad: Vec<f64> = (0..6)
            .map(|i| {
                let mut t = th.clone();
                t[i] += 1e-7;
                (objective(&t) - f0) / 1e-7
            })
            .collect();
        for (t, g) in th.iter_mut().zip(grad) {
            *t -= 0.5 * g;
        }
    }
    assert!((objective(&th) - sol.objective).abs() < 1e-6, "{} vs {}", objective(&th), sol.objective);
}
