//! Classification of computed solutions, Hopf margins, the barrier
//! estimate on balls, the `w`-change of variables, and positivity
//! threshold estimation.

mod barrier;
mod classify;
mod threshold;
mod transform;

pub use barrier::{barrier_check, epsilon_theta, BarrierOutcome};
pub use classify::{classify, classify_default, default_tol_zero, hopf_bound, ClassificationReport, Verdict};
pub use threshold::{
    estimate_threshold, Family, Parameter, ThresholdOptions, ThresholdProbe, ThresholdReport, ThresholdStatus,
};
pub use transform::{from_w, to_w, w_residual, w_residual_sup};
