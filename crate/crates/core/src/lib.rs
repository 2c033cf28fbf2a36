//! Trajectory, scheduling and power planning for a two-UAV network with
//! simultaneous uplink (sensor nodes to a UAV base station) and downlink
//! (a UAV access point to ground access points).
//!
//! The model and evaluation layer ([`scenario`], [`channel`], [`rates`]) is
//! generic over [`Real`]; the optimizers run in `f64`.

pub mod channel;
pub mod error;
pub mod kernel;
pub mod poa;
pub mod rates;
pub mod sca;
pub mod scalar;
pub mod scenario;
#[doc(hidden)]
pub mod testing;

pub use channel::{
    expected_gains, sample_rician_power, theorem1_sandwich, ExpectedGains, Sandwich,
};
pub use error::{Error, Result};
pub use poa::{poa_solve, poa_solve_with, recover_schedule, PoaOptions, PoaReport};
pub use rates::{
    evaluate_objective, evaluate_penalized_objective, evaluate_with_gains, PenalizedPower,
    RateBreakdown,
};
pub use sca::{
    bcd_solve, communication_design, run_benchmark_scheme, run_scheme, BcdOptions, BcdReport,
    Scheme,
};
pub use scalar::Real;
pub use scenario::{
    load_scenario, load_scenario_file, validate_solution, Diagnostics, PowerAllocation,
    ScenarioConfig, Schedule, ScheduleMode, Solution, Trajectory, Uav, Violation,
};

pub type ScenarioF64 = ScenarioConfig<f64>;
pub type ScenarioF32 = ScenarioConfig<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type ScheduleF64 = Schedule<f64>;
pub type ScheduleF32 = Schedule<f32>;
pub type PowerF64 = PowerAllocation<f64>;
pub type PowerF32 = PowerAllocation<f32>;
pub type GainsF64 = ExpectedGains<f64>;
pub type GainsF32 = ExpectedGains<f32>;
pub type SolutionF64 = Solution<f64>;
