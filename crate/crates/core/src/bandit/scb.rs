use super::{BanditLearner, Observation, Rates};
use crate::clip::{
    clip, schedule_scb, schedule_scbix, unit_loss, update_threshold, ClipState, ScbIxSchedule, ScbSchedule, UnitLoss,
};
use crate::error::{Error, Result};
use crate::simplex::{solve_shannon, solve_tsallis, ActionDistribution};

/// How the clipping threshold reacts to a loss that exceeds it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `C_{t+1} = 2 |l|`, starting from `C_1 = 0`.
    Clipping,
    /// Ablation: start from a positive guess and double until it covers `|l|`.
    /// Not strongly scale-free.
    Doubling { initial: f64 },
}

impl ThresholdRule {
    fn initial_state(&self) -> Result<ClipState> {
        match *self {
            ThresholdRule::Clipping => Ok(ClipState::new()),
            ThresholdRule::Doubling { initial } => {
                if !(initial.is_finite() && initial > 0.0) {
                    return Err(Error::invalid("doubling rule needs a positive initial threshold"));
                }
                ClipState::with_threshold(initial, 1)
            }
        }
    }

    fn advance(&self, loss: f64, state: &ClipState) -> ClipState {
        match self {
            ThresholdRule::Clipping => update_threshold(loss, state),
            ThresholdRule::Doubling { .. } => {
                let mut c = state.threshold();
                while c < loss.abs() {
                    c *= 2.0;
                }
                ClipState::with_threshold(c, state.round() + 1).expect("doubled threshold stays finite")
            }
        }
    }
}

/// Cumulative estimates in units of the current threshold.
#[derive(Debug, Clone, PartialEq)]
struct UnitTotals(Vec<f64>);

impl UnitTotals {
    fn add(&mut self, arm: usize, estimate: f64, u: &UnitLoss) {
        self.0[arm] += estimate;
        if u.growth != 1.0 {
            self.0.iter_mut().for_each(|x| *x /= u.growth);
        }
    }

    fn scaled(&self, threshold: f64) -> Vec<f64> {
        self.0.iter().map(|x| x * threshold).collect()
    }
}

fn check_observation(n: usize, arm: usize, loss: f64) -> Result<()> {
    if arm >= n {
        return Err(Error::invalid(format!("arm {arm} out of range for {n} arms")));
    }
    if !loss.is_finite() {
        return Err(Error::Environment(format!("non-finite loss {loss}")));
    }
    Ok(())
}

/// Tsallis-INF FTRL with uniform mixing and clipped, offset importance
/// weighting. Minimax-optimal without knowing the loss scale.
#[derive(Debug, Clone)]
pub struct Scb {
    totals: UnitTotals,
    clip: ClipState,
    schedule: ScbSchedule,
    rule: ThresholdRule,
    current: Option<ActionDistribution>,
}

impl Scb {
    pub fn new(n: usize) -> Self {
        Self::with_rule(n, ThresholdRule::Clipping).expect("clipping rule has no parameters")
    }

    pub fn with_rule(n: usize, rule: ThresholdRule) -> Result<Self> {
        let clip = rule.initial_state()?;
        Ok(Scb { totals: UnitTotals(vec![0.0; n]), schedule: schedule_scb(&clip, n), clip, rule, current: None })
    }

    /// Cumulative estimated losses `L_t`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.totals.scaled(self.clip.threshold())
    }

    pub fn clip_state(&self) -> &ClipState {
        &self.clip
    }
}

impl BanditLearner for Scb {
    fn num_arms(&self) -> usize {
        self.totals.0.len()
    }

    fn distribution(&mut self) -> Result<ActionDistribution> {
        if self.current.is_none() {
            let p = solve_tsallis(&self.totals.0, self.schedule.unit_eta)?;
            self.current = Some(p.mix_uniform(self.schedule.beta));
        }
        Ok(self.current.clone().expect("distribution cached above"))
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation> {
        let n = self.num_arms();
        check_observation(n, arm, loss)?;
        let q = self.distribution()?;
        let clipped = clip(loss, &self.clip);
        let next = self.rule.advance(loss, &self.clip);
        let u = unit_loss(loss, &self.clip, &next);
        let estimate = u.offset / q.probs()[arm];
        self.totals.add(arm, estimate, &u);
        let before = self.clip.threshold();
        self.clip = next;
        self.schedule = schedule_scb(&self.clip, n);
        self.current = None;
        Ok(Observation {
            clipped,
            threshold_before: before,
            threshold_after: self.clip.threshold(),
            estimate: estimate * before,
        })
    }

    fn rates(&self) -> Rates {
        Rates { eta: self.schedule.eta.value(), beta: self.schedule.beta, gamma: 0.0 }
    }

    fn threshold(&self) -> f64 {
        self.clip.threshold()
    }
}

/// Exponential-weights FTRL with uniform mixing and implicit exploration;
/// scale-free with a high-probability regret guarantee.
#[derive(Debug, Clone)]
pub struct ScbIx {
    totals: UnitTotals,
    clip: ClipState,
    schedule: ScbIxSchedule,
    current: Option<ActionDistribution>,
}

impl ScbIx {
    pub fn new(n: usize) -> Self {
        let clip = ClipState::new();
        ScbIx { totals: UnitTotals(vec![0.0; n]), schedule: schedule_scbix(&clip, n), clip, current: None }
    }

    /// Cumulative estimated losses `L_t`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.totals.scaled(self.clip.threshold())
    }
}

impl BanditLearner for ScbIx {
    fn num_arms(&self) -> usize {
        self.totals.0.len()
    }

    fn distribution(&mut self) -> Result<ActionDistribution> {
        if self.current.is_none() {
            let p = solve_shannon(&self.totals.0, self.schedule.unit_eta)?;
            self.current = Some(p.mix_uniform(self.schedule.beta));
        }
        Ok(self.current.clone().expect("distribution cached above"))
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<Observation> {
        let n = self.num_arms();
        check_observation(n, arm, loss)?;
        let q = self.distribution()?;
        let clipped = clip(loss, &self.clip);
        let next = update_threshold(loss, &self.clip);
        let u = unit_loss(loss, &self.clip, &next);
        let estimate = u.offset / (q.probs()[arm] + self.schedule.gamma);
        self.totals.add(arm, estimate, &u);
        let before = self.clip.threshold();
        self.clip = next;
        self.schedule = schedule_scbix(&self.clip, n);
        self.current = None;
        Ok(Observation {
            clipped,
            threshold_before: before,
            threshold_after: self.clip.threshold(),
            estimate: estimate * before,
        })
    }

    fn rates(&self) -> Rates {
        Rates { eta: self.schedule.eta.value(), beta: self.schedule.beta, gamma: self.schedule.gamma }
    }

    fn threshold(&self) -> f64 {
        self.clip.threshold()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_round_trace_by_hand() {
        // C_1 = 0: the loss is clipped to 0, the estimator vanishes and the
        // threshold jumps to 2 * 3 = 6.
        let mut scb = Scb::new(2);
        let q = scb.distribution().unwrap();
        assert_eq!(q.probs(), &[0.5, 0.5]);
        let obs = scb.observe(0, 3.0).unwrap();
        assert_eq!(obs.clipped, 0.0);
        assert_eq!(obs.estimate, 0.0);
        assert_eq!(obs.threshold_after, 6.0);
        assert_eq!(scb.cumulative(), vec![0.0, 0.0]);
        let eta = scb.rates().eta.unwrap();
        assert!((eta - 1.0 / (12.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn second_round_uses_new_threshold() {
        let mut scb = Scb::new(2);
        scb.distribution().unwrap();
        scb.observe(0, 3.0).unwrap();
        let q = scb.distribution().unwrap();
        // still uniform p_2, mixed
        assert!((q.probs()[0] - 0.5).abs() < 1e-12);
        let obs = scb.observe(1, -1.0).unwrap();
        assert_eq!(obs.clipped, -1.0);
        assert!((obs.estimate - (5.0 / q.probs()[1])).abs() < 1e-5);
        assert_eq!(obs.threshold_after, 6.0);
    }

    #[test]
    fn doubling_rule_needs_positive_start() {
        assert!(Scb::with_rule(2, ThresholdRule::Doubling { initial: 0.0 }).is_err());
        let mut scb = Scb::with_rule(2, ThresholdRule::Doubling { initial: 1.0 }).unwrap();
        scb.distribution().unwrap();
        let obs = scb.observe(1, 5.0).unwrap();
        assert_eq!(obs.threshold_after, 8.0);
        assert_eq!(obs.clipped, 1.0);
    }

    #[test]
    fn gamma_tracks_eta_times_threshold() {
        let mut ix = ScbIx::new(3);
        for (t, loss) in [2.0, -7.0, 0.5, 12.0, 1.0].iter().enumerate() {
            ix.distribution().unwrap();
            ix.observe(t % 3, *loss).unwrap();
            let r = ix.rates();
            let expected = r.eta.map(|e| e * ix.threshold() / 2.0).unwrap_or(0.0);
            assert!((r.gamma - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn observe_rejects_bad_arm_or_loss() {
        let mut scb = Scb::new(2);
        assert!(scb.observe(2, 1.0).is_err());
        assert!(scb.observe(0, f64::NAN).is_err());
    }
}
