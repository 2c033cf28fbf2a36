//! Power block: each rate is a difference of two concave logarithms; the
//! subtracted one is replaced by its tangent at the current powers.

use std::f64::consts::LOG2_E;

use crate::channel::ExpectedGains;
use crate::error::Result;
use crate::kernel::barrier::{maximize_concave, BarrierOptions, ConcaveObjective, ConstraintSet};
use crate::kernel::linalg::SymMatrix;
use crate::rates::evaluate_with_gains;
use crate::scenario::{PowerAllocation, ScenarioConfig, Schedule};

/// `w * log2(c + a . z)` with `a` dense over the slot variables.
#[derive(Debug, Clone)]
struct LogTerm {
    w: f64,
    c: f64,
    a: Vec<f64>,
}

/// Concave surrogate of one slot over scaled powers `z = [p_u, p_s[k]...] / p_max`.
#[derive(Debug, Clone)]
struct SlotSurrogate {
    logs: Vec<LogTerm>,
    linear: Vec<f64>,
    constant: f64,
}

impl SlotSurrogate {
    fn build(
        cfg: &ScenarioConfig<f64>,
        gains: &ExpectedGains<f64>,
        sched: &Schedule<f64>,
        power_r: &PowerAllocation<f64>,
        i: usize,
    ) -> Self {
        let (k_n, l_n) = (cfg.num_sns(), cfg.num_aps());
        let noise = cfg.noise_power;
        let (ps_max, pu_max) = (cfg.p_max_sn, cfg.p_max_uav);
        let dim = 1 + k_n;
        let mut logs = Vec::new();
        let mut linear = vec![0.0; dim];
        let mut constant = 0.0;
        let f = gains.f[i];
        let pu_r = power_r.p_u[i];
        for k in 0..k_n {
            let y = sched.y[k][i];
            if y <= 0.0 {
                continue;
            }
            let w = cfg.weight_beta1 * y;
            let mut a = vec![0.0; dim];
            a[0] = f * pu_max;
            a[1 + k] = gains.h[k][i] * ps_max;
            logs.push(LogTerm { w, c: noise, a });
            // tangent of log2(f p_u + noise) at p_u^r
            let d = f * pu_r + noise;
            constant -= w * (d.log2() - f * LOG2_E / d * pu_r);
            linear[0] -= w * f * LOG2_E / d * pu_max;
        }
        for l in 0..l_n {
            let x = sched.x[l][i];
            if x <= 0.0 {
                continue;
            }
            let w = cfg.weight_beta2 * x;
            let mut a = vec![0.0; dim];
            a[0] = gains.g[l][i] * pu_max;
            for k in 0..k_n {
                a[1 + k] = gains.h_g2g[k][l] * sched.y[k][i] * ps_max;
            }
            logs.push(LogTerm { w, c: noise, a });
            let d: f64 = (0..k_n)
                .map(|k| gains.h_g2g[k][l] * sched.y[k][i] * power_r.p_s[k][i])
                .sum::<f64>()
                + noise;
            constant -= w * d.log2();
            for k in 0..k_n {
                let slope = gains.h_g2g[k][l] * sched.y[k][i] * LOG2_E / d;
                constant += w * slope * power_r.p_s[k][i];
                linear[1 + k] -= w * slope * ps_max;
            }
        }
        SlotSurrogate {
            logs,
            linear,
            constant,
        }
    }
}

impl ConcaveObjective for SlotSurrogate {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let mut v = self.constant + self.linear.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        for t in &self.logs {
            let s = t.c + t.a.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            v += t.w * s.log2();
        }
        v
    }

    fn evaluate(&self, z: &[f64], grad: &mut [f64], hess: &mut SymMatrix) -> f64 {
        grad.iter_mut().zip(&self.linear).for_each(|(g, a)| *g += a);
        let mut v = self.constant + self.linear.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        let mut sparse = Vec::with_capacity(z.len());
        for t in &self.logs {
            let s = t.c + t.a.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            v += t.w * s.log2();
            for (j, a) in t.a.iter().enumerate() {
                grad[j] += t.w * LOG2_E * a / s;
            }
            sparse.clear();
            sparse.extend(
                t.a.iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(j, a)| (j, *a)),
            );
            hess.add_outer(&sparse, -t.w * LOG2_E / (s * s));
        }
        v
    }
}

/// DC surrogate of the whole objective in the powers, tight at `power_r`.
#[derive(Debug, Clone)]
pub struct PowerSurrogate {
    slots: Vec<SlotSurrogate>,
    p_max_sn: f64,
    p_max_uav: f64,
}

impl PowerSurrogate {
    pub fn build(
        cfg: &ScenarioConfig<f64>,
        gains: &ExpectedGains<f64>,
        sched: &Schedule<f64>,
        power_r: &PowerAllocation<f64>,
    ) -> Self {
        PowerSurrogate {
            slots: (0..gains.slots())
                .map(|i| SlotSurrogate::build(cfg, gains, sched, power_r, i))
                .collect(),
            p_max_sn: cfg.p_max_sn,
            p_max_uav: cfg.p_max_uav,
        }
    }

    fn scaled(&self, power: &PowerAllocation<f64>, i: usize) -> Vec<f64> {
        std::iter::once(power.p_u[i] / self.p_max_uav)
            .chain(power.p_s.iter().map(|row| row[i] / self.p_max_sn))
            .collect()
    }

    pub fn value(&self, power: &PowerAllocation<f64>) -> f64 {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, s)| s.value(&self.scaled(power, i)))
            .sum()
    }
}

/// Bounds within this distance (scaled units) snap onto the bound.
const SNAP: f64 = 1e-5;

/// One surrogate maximization over the power boxes.
///
/// Powers that influence no term in a slot are left unchanged. The result is
/// returned only when the true objective improves; otherwise `power_r` is.
pub fn solve_power_block(
    cfg: &ScenarioConfig<f64>,
    gains: &ExpectedGains<f64>,
    sched: &Schedule<f64>,
    power_r: &PowerAllocation<f64>,
    barrier: &BarrierOptions,
) -> Result<PowerAllocation<f64>> {
    let sur = PowerSurrogate::build(cfg, gains, sched, power_r);
    let mut out = power_r.clone();
    for (i, slot) in sur.slots.iter().enumerate() {
        if slot.logs.is_empty() {
            continue;
        }
        let dim = slot.dim();
        let start: Vec<f64> = sur
            .scaled(power_r, i)
            .into_iter()
            .map(|v| v.clamp(1e-4, 1.0 - 1e-4))
            .collect();
        let cons = ConstraintSet::with_box(vec![0.0; dim], vec![1.0; dim]);
        let res = maximize_concave(slot, &cons, &start, barrier)?;
        let snap = |v: f64| {
            if v < SNAP {
                0.0
            } else if v > 1.0 - SNAP {
                1.0
            } else {
                v
            }
        };
        // variables without any coefficient keep their previous value
        let used = |j: usize| slot.linear[j] != 0.0 || slot.logs.iter().any(|t| t.a[j] != 0.0);
        if used(0) {
            out.p_u[i] = snap(res.point[0]) * cfg.p_max_uav;
        }
        for k in 0..cfg.num_sns() {
            if used(1 + k) {
                out.p_s[k][i] = snap(res.point[1 + k]) * cfg.p_max_sn;
            }
        }
    }
    let before = evaluate_with_gains(cfg, gains, sched, power_r)?.objective;
    let after = evaluate_with_gains(cfg, gains, sched, &out)?.objective;
    Ok(if after > before { out } else { power_r.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::expected_gains;
    use crate::scenario::{ScheduleMode, Trajectory};
    use crate::testing::small_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture(k: usize, l: usize, n: usize) -> (ScenarioConfig<f64>, ExpectedGains<f64>) {
        let cfg = small_instance(k, l, n);
        let g = expected_gains(&cfg, &Trajectory::straight_line(&cfg)).unwrap();
        (cfg, g)
    }

    fn objective(
        cfg: &ScenarioConfig<f64>,
        g: &ExpectedGains<f64>,
        s: &Schedule<f64>,
        p: &PowerAllocation<f64>,
    ) -> f64 {
        evaluate_with_gains(cfg, g, s, p).unwrap().objective
    }

    #[test]
    fn decoupled_links_go_to_full_power() {
        let (cfg, mut g) = fixture(1, 1, 3);
        g.f.iter_mut().for_each(|v| *v = 0.0);
        g.h_g2g[0][0] = 0.0;
        let s = Schedule::uniform(1, 1, 3);
        let mut p = PowerAllocation::full(&cfg);
        p.p_u.iter_mut().for_each(|v| *v *= 0.3);
        p.p_s[0].iter_mut().for_each(|v| *v *= 0.5);
        let out = solve_power_block(&cfg, &g, &s, &p, &BarrierOptions::default()).unwrap();
        assert!(out.p_u.iter().all(|&v| v == cfg.p_max_uav));
        assert!(out.p_s[0].iter().all(|&v| v == cfg.p_max_sn));
    }

    #[test]
    fn surrogate_is_tight_and_below_objective() {
        let (cfg, g) = fixture(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Schedule {
            x: vec![vec![0.6, 0.0, 0.3], vec![0.4, 1.0, 0.2]],
            y: vec![vec![0.5, 1.0, 0.0], vec![0.5, 0.0, 0.7]],
            mode: ScheduleMode::Relaxed,
        };
        let rand_power = |rng: &mut ChaCha8Rng| {
            let mut p = PowerAllocation::zeros(2, 3);
            for v in p.p_u.iter_mut() {
                *v = rng.random_range(0.0..=cfg.p_max_uav);
            }
            for v in p.p_s.iter_mut().flatten() {
                *v = rng.random_range(0.0..=cfg.p_max_sn);
            }
            p
        };
        let p_r = rand_power(&mut rng);
        let sur = PowerSurrogate::build(&cfg, &g, &s, &p_r);
        let t = objective(&cfg, &g, &s, &p_r);
        assert!((sur.value(&p_r) - t).abs() <= 1e-9 * t.abs());
        for _ in 0..100 {
            let p = rand_power(&mut rng);
            assert!(sur.value(&p) <= objective(&cfg, &g, &s, &p) + 1e-9);
        }
    }

    #[test]
    fn single_link_pair_against_grid() {
        let (mut cfg, g) = fixture(1, 1, 1);
        cfg.weight_beta2 = 1.0;
        let s = Schedule::uniform(1, 1, 1);
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                let p = PowerAllocation {
                    p_u: vec![j as f64 * 1e-3],
                    p_s: vec![vec![i as f64 * 1e-3]],
                };
                grid_best = grid_best.max(objective(&cfg, &g, &s, &p));
            }
        }
        let mut p = PowerAllocation::full(&cfg);
        let start = objective(&cfg, &g, &s, &p);
        for _ in 0..30 {
            p = solve_power_block(&cfg, &g, &s, &p, &BarrierOptions::default()).unwrap();
        }
        let v = objective(&cfg, &g, &s, &p);
        assert!(v >= start);
        // local method: never above the grid beyond its resolution
        assert!(v <= grid_best + 1e-2);
    }

    #[test]
    fn ascent_from_grid_optimum() {
        let (cfg, g) = fixture(1, 1, 1);
        let s = Schedule::uniform(1, 1, 1);
        let mut best = (f64::NEG_INFINITY, PowerAllocation::full(&cfg));
        for i in 0..=20 {
            for j in 0..=20 {
                let p = PowerAllocation {
                    p_u: vec![j as f64 * 5e-3],
                    p_s: vec![vec![i as f64 * 5e-3]],
                };
                let v = objective(&cfg, &g, &s, &p);
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        let out = solve_power_block(&cfg, &g, &s, &best.1, &BarrierOptions::default()).unwrap();
        assert!(objective(&cfg, &g, &s, &out) >= best.0 - 1e-6);
    }
}
