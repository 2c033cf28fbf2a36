//! Block coordinate ascent over scheduling, trajectory and power.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::expected_gains;
use crate::error::{Error, Result};
use crate::kernel::barrier::BarrierOptions;
use crate::rates::evaluate_with_gains;
use crate::scenario::{
    max_residual, Diagnostics, PowerAllocation, ScenarioConfig, Schedule, Solution, Trajectory,
};

use super::init::init_circular;
use super::power::solve_power_block;
use super::schedule::{round_schedule, solve_scheduling_block};
use super::trajectory::solve_trajectory_block;

/// Allowed objective decrease between outer iterations before it counts as a bug.
const MONOTONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcdOptions {
    /// Stop once the relative objective increase of an outer iteration drops below this.
    pub eps: f64,
    pub max_outer: usize,
    /// Surrogate solves per block and outer iteration.
    pub inner_iters: usize,
    #[serde(skip)]
    pub barrier: BarrierOptions,
    pub optimize_trajectory: bool,
    pub freeze_altitude: bool,
    pub optimize_power: bool,
}

impl Default for BcdOptions {
    fn default() -> Self {
        BcdOptions {
            eps: 1e-2,
            max_outer: 25,
            inner_iters: 1,
            barrier: BarrierOptions::default(),
            optimize_trajectory: true,
            freeze_altitude: false,
            optimize_power: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdTraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub schedule_gain: f64,
    pub trajectory_gain: f64,
    pub power_gain: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdReport {
    pub solution: Solution<f64>,
    pub trace: Vec<BcdTraceRow>,
}

/// Runs the block iterations from a given starting plan, then rounds the
/// schedule and re-optimizes the powers once.
pub fn bcd_from(
    cfg: &ScenarioConfig<f64>,
    opts: &BcdOptions,
    solver: &str,
    traj0: Trajectory<f64>,
    sched0: Schedule<f64>,
    power0: PowerAllocation<f64>,
) -> Result<BcdReport> {
    let (mut traj, mut sched, mut power) = (traj0, sched0, power0);
    let mut gains = expected_gains(cfg, &traj)?;
    let eval =
        |g: &_, s: &_, p: &_| -> Result<f64> { Ok(evaluate_with_gains(cfg, g, s, p)?.objective) };
    let mut obj = eval(&gains, &sched, &power)?;
    let mut history = vec![obj];
    let mut trace = Vec::new();
    let mut converged = false;
    let idle = cfg.weight_beta1 == 0.0 && cfg.weight_beta2 == 0.0;
    if idle {
        converged = true;
    }
    let mut iterations = 0;
    while !idle && iterations < opts.max_outer {
        iterations += 1;
        let start = obj;
        for _ in 0..opts.inner_iters {
            let s = solve_scheduling_block(cfg, &gains, &power, &sched);
            let v = eval(&gains, &s, &power)?;
            if v > obj {
                sched = s;
                obj = v;
            }
        }
        let after_sched = obj;
        if opts.optimize_trajectory {
            for _ in 0..opts.inner_iters {
                let t = solve_trajectory_block(
                    cfg,
                    &sched,
                    &power,
                    &traj,
                    opts.freeze_altitude,
                    &opts.barrier,
                )?;
                if t == traj {
                    break;
                }
                let g = expected_gains(cfg, &t)?;
                let v = eval(&g, &sched, &power)?;
                if v > obj {
                    traj = t;
                    gains = g;
                    obj = v;
                }
            }
        }
        let after_traj = obj;
        if opts.optimize_power {
            for _ in 0..opts.inner_iters {
                let p = solve_power_block(cfg, &gains, &sched, &power, &opts.barrier)?;
                let v = eval(&gains, &sched, &p)?;
                if v > obj {
                    power = p;
                    obj = v;
                }
            }
        }
        if obj < start - MONOTONE_TOL {
            return Err(Error::Invariant(format!(
                "objective fell from {start} to {obj} in outer iteration {iterations}"
            )));
        }
        history.push(obj);
        trace.push(BcdTraceRow {
            iteration: iterations,
            objective: obj,
            schedule_gain: after_sched - start,
            trajectory_gain: after_traj - after_sched,
            power_gain: obj - after_traj,
            max_residual: max_residual(cfg, &traj, &sched, &power)?,
        });
        if obj - start < opts.eps * start.abs() || obj == start {
            converged = true;
            break;
        }
    }
    let relaxed = obj;
    let (sched, power) = if idle {
        (sched, power)
    } else {
        let binary = round_schedule(&sched);
        let mut p = power;
        silence_unscheduled(&binary, &mut p);
        if opts.optimize_power {
            p = solve_power_block(cfg, &gains, &binary, &p, &opts.barrier)?;
        }
        (binary, p)
    };
    let rates = evaluate_with_gains(cfg, &gains, &sched, &power)?;
    let residual = max_residual(cfg, &traj, &sched, &power)?;
    let solution = Solution {
        trajectory: traj,
        schedule: sched,
        power,
        objective: rates.objective,
        rates,
        diagnostics: Diagnostics {
            solver: solver.to_string(),
            iterations,
            converged,
            history,
            relaxed_objective: Some(relaxed),
            upper_bound: None,
            max_residual: residual,
            notes: Vec::new(),
        },
    };
    Ok(BcdReport { solution, trace })
}

/// Zeroes the power of every transmitter that is not scheduled.
fn silence_unscheduled(sched: &Schedule<f64>, power: &mut PowerAllocation<f64>) {
    for (k, row) in sched.y.iter().enumerate() {
        for (i, &y) in row.iter().enumerate() {
            if y == 0.0 {
                power.p_s[k][i] = 0.0;
            }
        }
    }
    for i in 0..power.p_u.len() {
        if sched.x.iter().all(|row| row[i] == 0.0) {
            power.p_u[i] = 0.0;
        }
    }
}

/// Joint trajectory, scheduling and power design from the circular start.
pub fn bcd_solve(cfg: &ScenarioConfig<f64>, opts: &BcdOptions) -> Result<Solution<f64>> {
    Ok(run_scheme(cfg, Scheme::Traj3dPower, opts)?.solution)
}

/// Scheduling and power design along a fixed trajectory.
pub fn communication_design(
    cfg: &ScenarioConfig<f64>,
    traj: &Trajectory<f64>,
    opts: &BcdOptions,
) -> Result<BcdReport> {
    let opts = BcdOptions {
        optimize_trajectory: false,
        ..*opts
    };
    bcd_from(
        cfg,
        &opts,
        "sca-fixed-trajectory",
        traj.clone(),
        Schedule::uniform(cfg.num_sns(), cfg.num_aps(), cfg.slots),
        PowerAllocation::full(cfg),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "3d-traj-power")]
    Traj3dPower,
    #[serde(rename = "2d-traj-power")]
    Traj2dPower,
    #[serde(rename = "3d-traj-no-power")]
    Traj3dNoPower,
    #[serde(rename = "2d-traj-no-power")]
    Traj2dNoPower,
    #[serde(rename = "only-power")]
    OnlyPower,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Traj3dPower,
        Scheme::Traj2dPower,
        Scheme::Traj3dNoPower,
        Scheme::Traj2dNoPower,
        Scheme::OnlyPower,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::Traj3dPower => "3d-traj-power",
            Scheme::Traj2dPower => "2d-traj-power",
            Scheme::Traj3dNoPower => "3d-traj-no-power",
            Scheme::Traj2dNoPower => "2d-traj-no-power",
            Scheme::OnlyPower => "only-power",
        }
    }

    /// Human-readable name used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Traj3dPower => "3D traj & power",
            Scheme::Traj2dPower => "2D traj & power",
            Scheme::Traj3dNoPower => "3D traj & no power",
            Scheme::Traj2dNoPower => "2D traj & no power",
            Scheme::OnlyPower => "only power",
        }
    }

    fn restrict(self, opts: &BcdOptions) -> BcdOptions {
        let mut o = *opts;
        match self {
            Scheme::Traj3dPower => {}
            Scheme::Traj2dPower => o.freeze_altitude = true,
            Scheme::Traj3dNoPower => o.optimize_power = false,
            Scheme::Traj2dNoPower => {
                o.freeze_altitude = true;
                o.optimize_power = false;
            }
            Scheme::OnlyPower => o.optimize_trajectory = false,
        }
        o
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = Scheme::ALL.iter().map(|v| v.id()).collect();
                Error::Parse(format!(
                    "unknown scheme {s:?}; expected one of {}",
                    ids.join(", ")
                ))
            })
    }
}

/// Runs one of the benchmark schemes with its restrictions applied to `opts`.
pub fn run_scheme(
    cfg: &ScenarioConfig<f64>,
    scheme: Scheme,
    opts: &BcdOptions,
) -> Result<BcdReport> {
    let o = scheme.restrict(opts);
    let (traj, sched, power) = if scheme == Scheme::OnlyPower {
        (
            Trajectory::straight_line(cfg),
            Schedule::uniform(cfg.num_sns(), cfg.num_aps(), cfg.slots),
            PowerAllocation::full(cfg),
        )
    } else {
        init_circular(cfg)?
    };
    bcd_from(cfg, &o, scheme.id(), traj, sched, power)
}

pub fn run_benchmark_scheme(cfg: &ScenarioConfig<f64>, scheme: Scheme) -> Result<Solution<f64>> {
    Ok(run_scheme(cfg, scheme, &BcdOptions::default())?.solution)
}
