//! Scheduling block: the downlink rate is convex in the uplink schedule, so it
//! is replaced by its tangent plane at the current schedule.

use std::f64::consts::LOG2_E;

use crate::channel::ExpectedGains;
use crate::rates::{downlink_rate, uplink_rate};
use crate::scenario::{PowerAllocation, ScenarioConfig, Schedule, ScheduleMode};

/// Linear lower bound of the objective in the schedule around `sched_r`.
#[derive(Debug, Clone)]
pub struct ScheduleSurrogate {
    beta1: f64,
    beta2: f64,
    /// `r_s[k][i]`; independent of the schedule.
    r_s: Vec<Vec<f64>>,
    /// Downlink rate at the expansion point, `r_u_r[l][i]`.
    r_u_r: Vec<Vec<f64>>,
    /// Tangent slopes `a[l][k][i]` (rate lost per unit of `y_k`).
    a: Vec<Vec<Vec<f64>>>,
    y_r: Vec<Vec<f64>>,
}

impl ScheduleSurrogate {
    pub fn build(
        cfg: &ScenarioConfig<f64>,
        gains: &ExpectedGains<f64>,
        power: &PowerAllocation<f64>,
        sched_r: &Schedule<f64>,
    ) -> Self {
        let (k_n, l_n, n) = (cfg.num_sns(), cfg.num_aps(), gains.slots());
        let noise = cfg.noise_power;
        let r_s = (0..k_n)
            .map(|k| {
                (0..n)
                    .map(|i| uplink_rate(gains, power, noise, k, i))
                    .collect()
            })
            .collect();
        let r_u_r = (0..l_n)
            .map(|l| {
                (0..n)
                    .map(|i| downlink_rate(gains, power, sched_r, noise, l, i))
                    .collect()
            })
            .collect();
        let a = (0..l_n)
            .map(|l| {
                (0..k_n)
                    .map(|k| {
                        (0..n)
                            .map(|i| {
                                let interf: f64 = (0..k_n)
                                    .map(|j| gains.h_g2g[j][l] * sched_r.y[j][i] * power.p_s[j][i])
                                    .sum::<f64>()
                                    + noise;
                                let sig = gains.g[l][i] * power.p_u[i];
                                sig * gains.h_g2g[k][l] * power.p_s[k][i] * LOG2_E
                                    / (interf * (interf + sig))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ScheduleSurrogate {
            beta1: cfg.weight_beta1,
            beta2: cfg.weight_beta2,
            r_s,
            r_u_r,
            a,
            y_r: sched_r.y.clone(),
        }
    }

    fn slots(&self) -> usize {
        self.r_s.first().or(self.r_u_r.first()).map_or(0, Vec::len)
    }

    fn downlink_lb(&self, l: usize, i: usize, y: impl Fn(usize) -> f64) -> f64 {
        let shift: f64 = (0..self.y_r.len())
            .map(|k| self.a[l][k][i] * (y(k) - self.y_r[k][i]))
            .sum();
        self.r_u_r[l][i] - shift
    }

    pub fn slot_value(&self, i: usize, x: impl Fn(usize) -> f64, y: impl Fn(usize) -> f64) -> f64 {
        let up: f64 = (0..self.r_s.len()).map(|k| y(k) * self.r_s[k][i]).sum();
        let down: f64 = (0..self.r_u_r.len())
            .map(|l| x(l) * self.downlink_lb(l, i, &y))
            .sum();
        self.beta1 * up + self.beta2 * down
    }

    pub fn value(&self, sched: &Schedule<f64>) -> f64 {
        (0..self.slots())
            .map(|i| self.slot_value(i, |l| sched.x[l][i], |k| sched.y[k][i]))
            .sum()
    }
}

/// Maximizes the scheduling surrogate.
///
/// The surrogate is bilinear in `(x, y)` over a product of simplices, so the
/// maximum per slot sits at a pair of vertices; all `(L + 1)(K + 1)` pairs
/// are compared. Ties keep the lowest index, with "idle" ranked first.
pub fn solve_scheduling_block(
    cfg: &ScenarioConfig<f64>,
    gains: &ExpectedGains<f64>,
    power: &PowerAllocation<f64>,
    sched_r: &Schedule<f64>,
) -> Schedule<f64> {
    let sur = ScheduleSurrogate::build(cfg, gains, power, sched_r);
    let (k_n, l_n, n) = (cfg.num_sns(), cfg.num_aps(), gains.slots());
    let mut out = Schedule::zeros(k_n, l_n, n, ScheduleMode::Relaxed);
    for i in 0..n {
        let mut best = (f64::NEG_INFINITY, None, None);
        for l in std::iter::once(None).chain((0..l_n).map(Some)) {
            for k in std::iter::once(None).chain((0..k_n).map(Some)) {
                let v = sur.slot_value(i, |j| f64::from(Some(j) == l), |j| f64::from(Some(j) == k));
                if v > best.0 {
                    best = (v, l, k);
                }
            }
        }
        if let Some(l) = best.1 {
            out.x[l][i] = 1.0;
        }
        if let Some(k) = best.2 {
            out.y[k][i] = 1.0;
        }
    }
    out
}

/// Rounds a relaxed schedule: per slot and side the largest entry becomes 1
/// when it is at least 0.1, everything else 0.
pub fn round_schedule(sched: &Schedule<f64>) -> Schedule<f64> {
    let round = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let n = rows.first().map_or(0, Vec::len);
        let mut out = vec![vec![0.0; n]; rows.len()];
        for i in 0..n {
            let mut arg = None;
            for (r, row) in rows.iter().enumerate() {
                if arg.map_or(true, |a: usize| row[i] > rows[a][i]) {
                    arg = Some(r);
                }
            }
            if let Some(a) = arg {
                if rows[a][i] >= 0.1 {
                    out[a][i] = 1.0;
                }
            }
        }
        out
    };
    Schedule {
        x: round(&sched.x),
        y: round(&sched.y),
        mode: ScheduleMode::Binary,
    }
}
