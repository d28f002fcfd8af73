//! Trajectory simulation of product walks, Rao-Blackwellized meeting
//! probabilities, localization rates and the valley coupling.

pub mod coupling;
pub mod localization;
pub mod overlap;
pub mod product;
pub mod walk;

pub use coupling::{
    localization_floor, plan_coupling, plain_walk_at, run_coupling, CouplingOutcome, CouplingPlan, LocalizationFloor, Trace,
};
pub use localization::{localization_rate, localization_samples, LocalizationEstimate};
pub use overlap::{
    collision_curve, collision_prob_indep, meeting_sum, overlaps, overlaps_at, same_env_meeting_sum, CollisionCurve,
    CollisionPoint, MeetingSum,
};
pub use product::{kochen_stone_from, kochen_stone_ratio, mean_se, simulate_product, KochenStone, MeetingStats, ProductConfig};
pub use walk::{threshold, Coin, Tape};
