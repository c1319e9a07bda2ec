//! C ABI over the scale-free learners.
//!
//! Every function returns an [`ScbStatus`]; on failure the message is kept
//! per thread and can be copied out with [`scb_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use scb_core::bandit::{Algorithm, BanditLearner};
use scb_core::mdp::io::load_mdp;
use scb_core::mdp::{best_policy_in_hindsight, LayeredMdp};
use scb_core::simplex::{solve_shannon, solve_tsallis, ActionDistribution, LearningRate};
use scb_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Io = 4,
    Environment = 5,
    Panic = 6,
}

/// Bandit learner families exposed over the ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScbAlgorithm {
    Scb = 0,
    ScbIx = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> ScbStatus {
    match e {
        Error::InvalidInput(_) | Error::Config(_) | Error::Format { .. } => ScbStatus::InvalidInput,
        Error::Numerical(_) | Error::InfeasibleConfidenceSet(_) => ScbStatus::Numerical,
        Error::Io(_) => ScbStatus::Io,
        Error::Environment(_) => ScbStatus::Environment,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ScbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ScbStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            ScbStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(format!("invalid input: {msg}"));
            ScbStatus::InvalidInput
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ScbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes, into `buf`. Returns the length the full
/// message needs including the terminator; `buf` may be null to query it.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn scb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

fn rate(eta: f64) -> Result<LearningRate, Failure> {
    if eta == f64::INFINITY {
        Ok(LearningRate::Unbounded)
    } else {
        Ok(LearningRate::finite(eta)?)
    }
}

fn write_probs(p: &ActionDistribution, out: &mut [f64]) {
    out.copy_from_slice(p.probs());
}

/// Tsallis-1/2 FTRL step over the simplex: writes the minimizer for
/// cumulative `losses` and rate `eta` (`INFINITY` for an unbounded rate)
/// into `out`, which has room for `n` values.
///
/// # Safety
/// `losses` and `out` must be valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn scb_solve_tsallis(losses: *const f64, n: usize, eta: f64, out: *mut f64) -> ScbStatus {
    guard(|| {
        let l = slice(losses, n, "losses")?;
        let o = slice_mut(out, n, "out")?;
        write_probs(&solve_tsallis(l, rate(eta)?)?, o);
        Ok(())
    })
}

/// Shannon (softmax) FTRL step; same contract as [`scb_solve_tsallis`].
///
/// # Safety
/// `losses` and `out` must be valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn scb_solve_shannon(losses: *const f64, n: usize, eta: f64, out: *mut f64) -> ScbStatus {
    guard(|| {
        let l = slice(losses, n, "losses")?;
        let o = slice_mut(out, n, "out")?;
        write_probs(&solve_shannon(l, rate(eta)?)?, o);
        Ok(())
    })
}

/// Opaque scale-free bandit learner.
pub struct ScbBandit {
    learner: Box<dyn BanditLearner + Send>,
    current: Option<ActionDistribution>,
}

impl ScbBandit {
    fn distribution(&mut self) -> Result<&ActionDistribution, Failure> {
        if self.current.is_none() {
            self.current = Some(self.learner.distribution()?);
        }
        Ok(self.current.as_ref().expect("just filled"))
    }
}

/// Creates a learner over `num_arms` arms.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_new(
    algorithm: ScbAlgorithm,
    num_arms: usize,
    out: *mut *mut ScbBandit,
) -> ScbStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let alg = match algorithm {
            ScbAlgorithm::Scb => Algorithm::Scb,
            ScbAlgorithm::ScbIx => Algorithm::ScbIx,
        };
        let learner = alg.build(num_arms)?;
        *slot = Box::into_raw(Box::new(ScbBandit { learner, current: None }));
        Ok(())
    })
}

/// Releases a learner; null is ignored.
///
/// # Safety
/// `bandit` must come from [`scb_bandit_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_free(bandit: *mut ScbBandit) {
    if !bandit.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(bandit))));
    }
}

/// Writes the current sampling distribution into `probs` (`len` must be
/// the number of arms).
///
/// # Safety
/// `bandit` must be a live handle; `probs` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_distribution(bandit: *mut ScbBandit, probs: *mut f64, len: usize) -> ScbStatus {
    guard(|| {
        let b = bandit.as_mut().ok_or(Failure::Null("bandit"))?;
        if len != b.learner.num_arms() {
            return Err(Failure::Invalid(format!("buffer holds {len} values for {} arms", b.learner.num_arms())));
        }
        let o = slice_mut(probs, len, "probs")?;
        write_probs(b.distribution()?, o);
        Ok(())
    })
}

/// Picks an arm from the current distribution by inverse CDF at `u`
/// in `[0, 1)`.
///
/// # Safety
/// `bandit` must be a live handle; `arm` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_sample(bandit: *mut ScbBandit, u: f64, arm: *mut usize) -> ScbStatus {
    guard(|| {
        let b = bandit.as_mut().ok_or(Failure::Null("bandit"))?;
        let slot = out(arm, "arm")?;
        if !(0.0..1.0).contains(&u) {
            return Err(Failure::Invalid("u must lie in [0, 1)".into()));
        }
        *slot = b.distribution()?.sample_with(u);
        Ok(())
    })
}

/// Feeds back the loss of the arm played this round.
///
/// # Safety
/// `bandit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_observe(bandit: *mut ScbBandit, arm: usize, loss: f64) -> ScbStatus {
    guard(|| {
        let b = bandit.as_mut().ok_or(Failure::Null("bandit"))?;
        if arm >= b.learner.num_arms() {
            return Err(Failure::Invalid(format!("arm {arm} out of range")));
        }
        if !loss.is_finite() {
            return Err(Failure::Invalid("loss must be finite".into()));
        }
        b.distribution()?;
        b.learner.observe(arm, loss)?;
        b.current = None;
        Ok(())
    })
}

/// Current clipping threshold.
///
/// # Safety
/// `bandit` must be a live handle; `threshold` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn scb_bandit_threshold(bandit: *const ScbBandit, threshold: *mut f64) -> ScbStatus {
    guard(|| {
        let b = bandit.as_ref().ok_or(Failure::Null("bandit"))?;
        *out(threshold, "threshold")? = b.learner.threshold();
        Ok(())
    })
}

/// Opaque layered MDP.
pub struct ScbMdp {
    mdp: LayeredMdp,
}

/// Reads an MDP in the text format from `path` (UTF-8, NUL-terminated).
///
/// # Safety
/// `path` must be a valid C string; `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn scb_mdp_load(path: *const c_char, out: *mut *mut ScbMdp) -> ScbStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let slot = self::out(out, "out")?;
        let p = CStr::from_ptr(path).to_str().map_err(|_| Failure::Invalid("path is not UTF-8".into()))?;
        let mdp = load_mdp(Path::new(p))?;
        *slot = Box::into_raw(Box::new(ScbMdp { mdp }));
        Ok(())
    })
}

/// Releases an MDP; null is ignored.
///
/// # Safety
/// `mdp` must come from [`scb_mdp_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scb_mdp_free(mdp: *mut ScbMdp) {
    if !mdp.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(mdp))));
    }
}

/// Number of decision states over all layers.
///
/// # Safety
/// `mdp` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn scb_mdp_num_states(mdp: *const ScbMdp, out: *mut usize) -> ScbStatus {
    guard(|| {
        let m = mdp.as_ref().ok_or(Failure::Null("mdp"))?;
        *self::out(out, "out")? = m.mdp.layers().num_states();
        Ok(())
    })
}

/// Number of actions per state.
///
/// # Safety
/// `mdp` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn scb_mdp_num_actions(mdp: *const ScbMdp, out: *mut usize) -> ScbStatus {
    guard(|| {
        let m = mdp.as_ref().ok_or(Failure::Null("mdp"))?;
        *self::out(out, "out")? = m.mdp.layers().actions();
        Ok(())
    })
}

/// Best deterministic policy for a state-action loss table laid out as
/// `losses[s * A + a]`. Writes one action per state into `actions` and the
/// policy's expected loss into `value`.
///
/// # Safety
/// `mdp` must be a live handle, `losses` valid for `losses_len` doubles,
/// `actions` for `actions_len` values and `value` for writing.
#[no_mangle]
pub unsafe extern "C" fn scb_mdp_best_in_hindsight(
    mdp: *const ScbMdp,
    losses: *const f64,
    losses_len: usize,
    actions: *mut usize,
    actions_len: usize,
    value: *mut f64,
) -> ScbStatus {
    guard(|| {
        let m = &mdp.as_ref().ok_or(Failure::Null("mdp"))?.mdp;
        let l = m.layers();
        if losses_len != l.num_pairs() || actions_len != l.num_states() {
            return Err(Failure::Invalid(format!(
                "expected {} losses and room for {} actions",
                l.num_pairs(),
                l.num_states()
            )));
        }
        let table = slice(losses, losses_len, "losses")?;
        let acts = slice_mut(actions, actions_len, "actions")?;
        let v = out(value, "value")?;
        let (pi, best) = best_policy_in_hindsight(m, table)?;
        for (s, a) in acts.iter_mut().enumerate() {
            *a = pi.row(s).iter().position(|p| *p == 1.0).unwrap_or(0);
        }
        *v = best;
        Ok(())
    })
}
