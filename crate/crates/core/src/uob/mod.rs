//! Adversarial MDPs with unknown transitions: confidence sets, upper
//! occupancy bounds, the constrained occupancy FTRL, UOB-REPS with explicit
//! exploration and the scale-clipped SCB-RL driver.

mod comp_uob;
mod confidence;
mod ftrl;
mod reps;
mod scb_rl;

pub use comp_uob::{comp_uob, upper_occupancy};
pub use confidence::{radius, water_fill, ConfidenceSet, KernelBox};
pub use ftrl::{
    layer_weights, objective, occupancy_ftrl_step, relative_thresholds, solve_occupancy_ftrl, FtrlSolution,
};
pub use reps::{mdp_estimator, PolicyChoice, UobRepsConfig, UobRepsEx};
pub use scb_rl::{
    scb_rl_run, ClippedEpisode, EpisodeRecord, LayerClipState, MdpAdversary, Phase, ScbRlConfig, ScbRlParams,
};
