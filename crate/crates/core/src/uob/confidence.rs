use crate::error::{Error, Result};
use crate::mdp::{LayeredMdp, Layers, Trajectory};

/// Width below which a box-simplex row is treated as a single kernel row.
pub(crate) const FIXED_ROW_SLACK: f64 = 1e-12;

/// `4 sqrt(p ln / max(1, n - 1)) + 28 ln / (3 max(1, n - 1))`.
pub fn radius(empirical: f64, visits: u64, log_term: f64) -> f64 {
    let d = (visits.max(2) - 1) as f64;
    4.0 * (empirical * log_term / d).sqrt() + 28.0 * log_term / (3.0 * d)
}

/// Per-entry bounds `lo <= P(s' | s, a) <= hi` for every row, including the
/// start row over layer 0. Rows of the last layer are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBox {
    layers: Layers,
    initial_lo: Vec<f64>,
    initial_hi: Vec<f64>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl KernelBox {
    pub fn new(
        layers: Layers,
        initial_lo: Vec<f64>,
        initial_hi: Vec<f64>,
        lo: Vec<Vec<f64>>,
        hi: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if initial_lo.len() != layers.size(0) || initial_hi.len() != layers.size(0) {
            return Err(Error::invalid("start row bounds have the wrong width"));
        }
        if lo.len() != layers.num_pairs() || hi.len() != layers.num_pairs() {
            return Err(Error::invalid("one bound row per state-action pair is required"));
        }
        let b = KernelBox { layers, initial_lo, initial_hi, lo, hi };
        b.check_row(&b.initial_lo, &b.initial_hi, b.layers.size(0), "start row")?;
        for h in 0..b.layers.horizon() {
            let width = b.layers.next_size(h);
            for s in b.layers.range(h) {
                for a in 0..b.layers.actions() {
                    let i = b.layers.pair(s, a);
                    b.check_row(&b.lo[i], &b.hi[i], width, &format!("row ({s}, {a})"))?;
                }
            }
        }
        Ok(b)
    }

    fn check_row(&self, lo: &[f64], hi: &[f64], width: usize, what: &str) -> Result<()> {
        if lo.len() != width || hi.len() != width {
            return Err(Error::invalid(format!("{what}: bounds have the wrong width")));
        }
        if width == 0 {
            return Ok(());
        }
        for (l, h) in lo.iter().zip(hi) {
            if !(l.is_finite() && h.is_finite() && *l >= 0.0 && l <= h && *h <= 1.0) {
                return Err(Error::InfeasibleConfidenceSet(format!("{what}: bad interval [{l}, {h}]")));
            }
        }
        let (sl, sh) = (lo.iter().sum::<f64>(), hi.iter().sum::<f64>());
        if sl > 1.0 + FIXED_ROW_SLACK || sh < 1.0 - FIXED_ROW_SLACK {
            return Err(Error::InfeasibleConfidenceSet(format!("{what}: sum range [{sl}, {sh}] misses 1")));
        }
        Ok(())
    }

    /// The singleton set `{P}`.
    pub fn singleton(mdp: &LayeredMdp) -> Self {
        KernelBox {
            layers: mdp.layers().clone(),
            initial_lo: mdp.initial().to_vec(),
            initial_hi: mdp.initial().to_vec(),
            lo: mdp.kernel().to_vec(),
            hi: mdp.kernel().to_vec(),
        }
    }

    /// Every kernel on `layers`.
    pub fn unconstrained(layers: &Layers) -> Self {
        let rows = |v: f64| {
            (0..layers.num_pairs())
                .map(|i| vec![v; layers.next_size(layers.layer_of(i / layers.actions()))])
                .collect::<Vec<_>>()
        };
        KernelBox {
            layers: layers.clone(),
            initial_lo: vec![0.0; layers.size(0)],
            initial_hi: vec![1.0; layers.size(0)],
            lo: rows(0.0),
            hi: rows(1.0),
        }
    }

    pub fn layers(&self) -> &Layers {
        &self.layers
    }

    pub fn initial_bounds(&self) -> (&[f64], &[f64]) {
        (&self.initial_lo, &self.initial_hi)
    }

    pub fn bounds(&self, s: usize, a: usize) -> (&[f64], &[f64]) {
        let i = self.layers.pair(s, a);
        (&self.lo[i], &self.hi[i])
    }

    fn row_contains(lo: &[f64], hi: &[f64], p: &[f64], tol: f64) -> bool {
        p.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }

    /// Whether every row of `mdp` lies inside its box (up to `tol`).
    pub fn contains(&self, mdp: &LayeredMdp, tol: f64) -> bool {
        mdp.layers() == &self.layers
            && Self::row_contains(&self.initial_lo, &self.initial_hi, mdp.initial(), tol)
            && mdp.kernel().iter().enumerate().all(|(i, row)| Self::row_contains(&self.lo[i], &self.hi[i], row, tol))
    }
}

/// Maximizes `<p, values>` over `{lo <= p <= hi, sum p = 1}` by filling the
/// largest values first. Ties keep the lower index first.
pub fn water_fill(lo: &[f64], hi: &[f64], values: &[f64]) -> Vec<f64> {
    let mut p = lo.to_vec();
    let mut left = 1.0 - lo.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*b].total_cmp(&values[*a]).then(a.cmp(b)));
    for k in order {
        if left <= 0.0 {
            break;
        }
        let add = (hi[k] - lo[k]).min(left);
        p[k] += add;
        left -= add;
    }
    p
}

/// Transition confidence set with epoch doubling.
///
/// Counters are cumulative. A snapshot is taken whenever an epoch starts;
/// the next epoch starts as soon as a visited row reaches twice its
/// snapshot count (and at least one). The start row over layer 0 is
/// counted once per episode and takes part in the doubling test.
#[derive(Debug, Clone)]
pub struct ConfidenceSet {
    layers: Layers,
    log_term: f64,
    epoch: u64,
    start_visits: u64,
    start_next: Vec<u64>,
    start_snapshot: u64,
    visits: Vec<u64>,
    next: Vec<Vec<u64>>,
    snapshot: Vec<u64>,
    epoch_start_next: Vec<u64>,
    epoch_next: Vec<Vec<u64>>,
    bounds: KernelBox,
}

impl ConfidenceSet {
    /// `log_term` is `ln(T S A / delta)`.
    pub fn new(layers: &Layers, log_term: f64) -> Result<Self> {
        if !(log_term.is_finite() && log_term > 0.0) {
            return Err(Error::invalid("confidence log term must be positive"));
        }
        let next: Vec<Vec<u64>> =
            (0..layers.num_pairs()).map(|i| vec![0; layers.next_size(layers.layer_of(i / layers.actions()))]).collect();
        Ok(ConfidenceSet {
            layers: layers.clone(),
            log_term,
            epoch: 0,
            start_visits: 0,
            start_next: vec![0; layers.size(0)],
            start_snapshot: 0,
            visits: vec![0; layers.num_pairs()],
            epoch_next: next.clone(),
            next,
            snapshot: vec![0; layers.num_pairs()],
            epoch_start_next: vec![0; layers.size(0)],
            bounds: KernelBox::unconstrained(layers),
        })
    }

    /// `ln(T S A / delta)` for horizon `T` episodes.
    pub fn log_term_for(layers: &Layers, episodes: u64, delta: f64) -> f64 {
        ((episodes as f64) * (layers.num_states() * layers.actions()) as f64 / delta).ln()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn layers(&self) -> &Layers {
        &self.layers
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[self.layers.pair(s, a)]
    }

    pub fn transitions(&self, s: usize, a: usize) -> &[u64] {
        &self.next[self.layers.pair(s, a)]
    }

    pub fn bounds(&self) -> &KernelBox {
        &self.bounds
    }

    /// Epoch estimate `M / N` of a pair row, from the counts at the start
    /// of the current epoch; uniform while the row is unvisited.
    pub fn empirical(&self, s: usize, a: usize) -> Vec<f64> {
        let i = self.layers.pair(s, a);
        frequencies(&self.epoch_next[i], self.snapshot[i])
    }

    /// Epoch estimate of the start row over layer 0.
    pub fn empirical_initial(&self) -> Vec<f64> {
        frequencies(&self.epoch_start_next, self.start_snapshot)
    }

    /// The epoch's empirical MDP, the center of every box.
    pub fn empirical_mdp(&self) -> Result<LayeredMdp> {
        let l = &self.layers;
        let kernel = (0..l.num_pairs())
            .map(|i| {
                if self.epoch_next[i].is_empty() {
                    Vec::new()
                } else {
                    frequencies(&self.epoch_next[i], self.snapshot[i])
                }
            })
            .collect();
        LayeredMdp::new(l.clone(), self.empirical_initial(), kernel)
    }

    /// Records one episode. Returns whether a new epoch started.
    pub fn update(&mut self, t: &Trajectory) -> Result<bool> {
        let l = &self.layers;
        if t.steps.len() != l.horizon() {
            return Err(Error::invalid("trajectory length differs from the horizon"));
        }
        for (h, w) in t.steps.iter().enumerate() {
            if l.layer_of(w.state) != h || w.action >= l.actions() {
                return Err(Error::invalid("trajectory step outside its layer"));
            }
        }
        let first = t.steps[0].state;
        self.start_visits += 1;
        self.start_next[first - l.range(0).start] += 1;
        let mut fire = self.start_visits >= (2 * self.start_snapshot).max(1);
        for (h, w) in t.steps.iter().enumerate() {
            let i = l.pair(w.state, w.action);
            self.visits[i] += 1;
            if let Some(nx) = t.steps.get(h + 1) {
                self.next[i][nx.state - l.range(h + 1).start] += 1;
            }
            fire |= self.visits[i] >= (2 * self.snapshot[i]).max(1);
        }
        if fire {
            self.epoch += 1;
            self.start_snapshot = self.start_visits;
            self.snapshot.copy_from_slice(&self.visits);
            self.epoch_start_next.copy_from_slice(&self.start_next);
            self.epoch_next.clone_from(&self.next);
            self.bounds = self.build_bounds();
        }
        Ok(fire)
    }

    fn row_bounds(&self, counts: &[u64], n: u64) -> (Vec<f64>, Vec<f64>) {
        if n == 0 {
            return (vec![0.0; counts.len()], vec![1.0; counts.len()]);
        }
        let nf = n as f64;
        counts
            .iter()
            .map(|m| {
                let p = *m as f64 / nf;
                let e = radius(p, n, self.log_term);
                ((p - e).max(0.0), (p + e).min(1.0))
            })
            .unzip()
    }

    fn build_bounds(&self) -> KernelBox {
        let (initial_lo, initial_hi) = self.row_bounds(&self.start_next, self.start_visits);
        let (lo, hi) = self.visits.iter().zip(&self.next).map(|(n, row)| self.row_bounds(row, *n)).unzip();
        KernelBox::new(self.layers.clone(), initial_lo, initial_hi, lo, hi)
            .expect("empirical rows lie inside their boxes")
    }
}

fn frequencies(counts: &[u64], n: u64) -> Vec<f64> {
    if n == 0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|m| *m as f64 / n as f64).collect()
}
