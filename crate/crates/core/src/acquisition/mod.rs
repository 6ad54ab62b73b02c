//! Simulated field-cycling acquisition: fringe-field map, shuttle transit,
//! stretched-exponential decays, and the accelerated single-point strategy.

pub mod fieldmap;
pub mod plan;
pub mod reconstruct;
pub mod record;
pub mod shuttle;
pub mod simulate;

pub use fieldmap::FieldMap;
pub use plan::{run_plan, AcquisitionPlan, GroundTruth, Strategy, StretchRule, WaitTime};
pub use reconstruct::{
    dynamic_wait_time, propagate_errors, reconstruct_r1, time_gain, PropagatedRate,
    ReconstructionInputs, WAIT_TIME_UNCERTAINTY_S,
};
pub use record::{Accounting, CalibrationRecord, DecayKind, DecayRecord, ExperimentRecord, ProfilePoint};
pub use shuttle::{simulate_shuttle_loss, survival_between, ShuttleProfile, JITTER_MAIN_TEXT_S, JITTER_SUPPLEMENT_S};
pub use simulate::{simulate_decay, stretched_exponential};
