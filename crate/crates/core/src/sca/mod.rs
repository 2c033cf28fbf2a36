//! Joint trajectory and communication design by block coordinate ascent with
//! successive convex approximation inside each block.

pub mod bcd;
pub mod init;
pub mod power;
pub mod schedule;
pub mod trajectory;

pub use bcd::{
    bcd_from, bcd_solve, communication_design, run_benchmark_scheme, run_scheme, BcdOptions,
    BcdReport, BcdTraceRow, Scheme,
};
pub use init::{circle_radius, circular_trajectory, init_circular};
pub use power::{solve_power_block, PowerSurrogate};
pub use schedule::{round_schedule, solve_scheduling_block, ScheduleSurrogate};
pub use trajectory::{solve_trajectory_block, TrajectorySurrogate, UPSILON_FLOOR};
