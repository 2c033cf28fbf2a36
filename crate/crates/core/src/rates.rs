//! Expected rates, the weighted throughput objective and its penalized form.

use serde::{Deserialize, Serialize};

use crate::channel::{expected_gains, ExpectedGains};
use crate::error::{Error, Result};
use crate::scalar::{log2_1p, Real};
use crate::scenario::{PowerAllocation, ScenarioConfig, Schedule, Trajectory};

/// Per-slot rates in bit/s/Hz, stored at slot index `n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown<T> {
    pub r_s: Vec<Vec<T>>,
    pub r_u: Vec<Vec<T>>,
    /// `sum y * r_s` over nodes and slots.
    pub uplink_total: T,
    /// `sum x * r_u` over nodes and slots.
    pub downlink_total: T,
    /// `beta1 * uplink_total + beta2 * downlink_total`.
    pub objective: T,
}

impl<T: Real> RateBreakdown<T> {
    /// Scheduled uplink rate in slot index `i`.
    pub fn uplink_in_slot(&self, sched: &Schedule<T>, i: usize) -> T {
        self.r_s
            .iter()
            .zip(&sched.y)
            .fold(T::zero(), |a, (r, y)| a + y[i] * r[i])
    }

    pub fn downlink_in_slot(&self, sched: &Schedule<T>, i: usize) -> T {
        self.r_u
            .iter()
            .zip(&sched.x)
            .fold(T::zero(), |a, (r, x)| a + x[i] * r[i])
    }
}

/// Uplink rate of SN `k` in slot index `i`.
pub fn uplink_rate<T: Real>(
    gains: &ExpectedGains<T>,
    power: &PowerAllocation<T>,
    noise: T,
    k: usize,
    i: usize,
) -> T {
    let interference = gains.f[i] * power.p_u[i] + noise;
    log2_1p(gains.h[k][i] * power.p_s[k][i] / interference)
}

/// Downlink rate of AP `l` in slot index `i`; relaxed schedules weight the SN interference.
pub fn downlink_rate<T: Real>(
    gains: &ExpectedGains<T>,
    power: &PowerAllocation<T>,
    sched: &Schedule<T>,
    noise: T,
    l: usize,
    i: usize,
) -> T {
    let interference = gains
        .h_g2g
        .iter()
        .zip(&sched.y)
        .zip(&power.p_s)
        .fold(noise, |acc, ((hk, y), p)| acc + hk[l] * y[i] * p[i]);
    log2_1p(gains.g[l][i] * power.p_u[i] / interference)
}

fn check_dims<T: Real>(
    gains: &ExpectedGains<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
) -> Result<()> {
    let n = gains.slots();
    let ok = gains.h.len() == sched.y.len()
        && gains.h.len() == power.p_s.len()
        && gains.g.len() == sched.x.len()
        && power.p_u.len() == n
        && sched
            .x
            .iter()
            .chain(&sched.y)
            .chain(&power.p_s)
            .all(|r| r.len() == n);
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(
            "schedule or power shape does not match the gains".into(),
        ))
    }
}

/// Objective breakdown for precomputed gains.
pub fn evaluate_with_gains<T: Real>(
    cfg: &ScenarioConfig<T>,
    gains: &ExpectedGains<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
) -> Result<RateBreakdown<T>> {
    check_dims(gains, sched, power)?;
    let n = gains.slots();
    let noise = cfg.noise_power;
    let r_s: Vec<Vec<T>> = (0..gains.h.len())
        .map(|k| {
            (0..n)
                .map(|i| uplink_rate(gains, power, noise, k, i))
                .collect()
        })
        .collect();
    let r_u: Vec<Vec<T>> = (0..gains.g.len())
        .map(|l| {
            (0..n)
                .map(|i| downlink_rate(gains, power, sched, noise, l, i))
                .collect()
        })
        .collect();
    let weighted = |r: &[Vec<T>], w: &[Vec<T>]| {
        r.iter()
            .zip(w)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    };
    let uplink_total = weighted(&r_s, &sched.y);
    let downlink_total = weighted(&r_u, &sched.x);
    Ok(RateBreakdown {
        objective: cfg.weight_beta1 * uplink_total + cfg.weight_beta2 * downlink_total,
        r_s,
        r_u,
        uplink_total,
        downlink_total,
    })
}

/// Computes gains along `traj` and evaluates the weighted throughput objective.
pub fn evaluate_objective<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
    sched: &Schedule<T>,
    power: &PowerAllocation<T>,
) -> Result<RateBreakdown<T>> {
    let gains = expected_gains(cfg, traj)?;
    evaluate_with_gains(cfg, &gains, sched, power)
}

/// Transmit powers of the penalized problem: one variable per node and slot,
/// with the schedule folded in (`p_u[l][n] = p^u[n] x_l[n]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedPower<T> {
    pub p_s: Vec<Vec<T>>,
    pub p_u: Vec<Vec<T>>,
}

impl<T: Real> PenalizedPower<T> {
    pub fn zeros(k: usize, l: usize, slots: usize) -> Self {
        PenalizedPower {
            p_s: vec![vec![T::zero(); slots]; k],
            p_u: vec![vec![T::zero(); slots]; l],
        }
    }
}

/// Penalized objective: co-channel transmitters on the same side are charged `M` per watt.
pub fn evaluate_penalized_objective<T: Real>(
    cfg: &ScenarioConfig<T>,
    gains: &ExpectedGains<T>,
    tilde: &PenalizedPower<T>,
) -> T {
    let n = gains.slots();
    let m = cfg.penalty_m;
    let noise = cfg.noise_power;
    let mut up = T::zero();
    let mut down = T::zero();
    for i in 0..n {
        let sum_s = tilde.p_s.iter().fold(T::zero(), |a, p| a + p[i]);
        let sum_u = tilde.p_u.iter().fold(T::zero(), |a, p| a + p[i]);
        for (k, p) in tilde.p_s.iter().enumerate() {
            let denom = m * (sum_s - p[i]) + gains.f[i] * sum_u + noise;
            up += log2_1p(gains.h[k][i] * p[i] / denom);
        }
        for (l, p) in tilde.p_u.iter().enumerate() {
            let g2g = tilde
                .p_s
                .iter()
                .zip(&gains.h_g2g)
                .fold(T::zero(), |a, (ps, hk)| a + hk[l] * ps[i]);
            let denom = m * (sum_u - p[i]) + g2g + noise;
            down += log2_1p(gains.g[l][i] * p[i] / denom);
        }
    }
    cfg.weight_beta1 * up + cfg.weight_beta2 * down
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScheduleMode;
    use crate::testing::small_instance;
    use proptest::prelude::*;

    fn gains_1x1(h: f64, g: f64, f: f64, hg: f64) -> ExpectedGains<f64> {
        ExpectedGains {
            h: vec![vec![h]],
            g: vec![vec![g]],
            f: vec![f],
            h_g2g: vec![vec![hg]],
        }
    }

    fn power(ps: f64, pu: f64) -> PowerAllocation<f64> {
        PowerAllocation {
            p_u: vec![pu],
            p_s: vec![vec![ps]],
        }
    }

    #[test]
    fn uplink_examples() {
        let g = gains_1x1(1e-10, 1e-10, 1e-10, 1e-12);
        assert_eq!(uplink_rate(&g, &power(0.0, 0.1), 1e-14, 0, 0), 0.0);
        let r = uplink_rate(&g, &power(0.1, 0.0), 1e-14, 0, 0);
        assert!((r - 1001f64.log2()).abs() < 1e-12);
        assert!((r - 9.967_226_258_835_993).abs() < 1e-12);
        let r = uplink_rate(&g, &power(0.1, 0.1), 1e-14, 0, 0);
        assert!(r < 1.0);
    }

    #[test]
    fn downlink_examples() {
        let g = gains_1x1(1e-10, 1e-10, 1e-10, 1e-12);
        let mut s = Schedule::zeros(1, 1, 1, ScheduleMode::Binary);
        assert_eq!(downlink_rate(&g, &power(0.1, 0.0), &s, 1e-14, 0, 0), 0.0);
        let r = downlink_rate(&g, &power(0.1, 0.1), &s, 1e-14, 0, 0);
        assert!((r - 1001f64.log2()).abs() < 1e-12);
        // interference h_g2g * p_s = 9 * sigma^2
        let g = gains_1x1(1e-10, 1e-10, 1e-10, 9e-13);
        s.y[0][0] = 1.0;
        let r = downlink_rate(&g, &power(0.1, 0.1), &s, 1e-14, 0, 0);
        assert!((r - 101f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn zero_power_zero_objective() {
        let cfg = small_instance(2, 2, 3);
        let t = Trajectory::straight_line(&cfg);
        let s = Schedule::uniform(2, 2, 3);
        let p = PowerAllocation::zeros(2, 3);
        assert_eq!(evaluate_objective(&cfg, &t, &s, &p).unwrap().objective, 0.0);
    }

    #[test]
    fn matches_scalar_recomputation() {
        let cfg = small_instance(1, 1, 1);
        let t = Trajectory::straight_line(&cfg);
        let mut s = Schedule::zeros(1, 1, 1, ScheduleMode::Binary);
        s.x[0][0] = 1.0;
        s.y[0][0] = 1.0;
        let p = power(0.07, 0.03);
        let rb = evaluate_objective(&cfg, &t, &s, &p).unwrap();
        // slot 1 positions, straight line over one slot = final points
        let (qb, hb) = ([25.0f64, 300.0], 150.0f64);
        let (qu, hu) = ([25.0f64, 100.0], 120.0f64);
        let (ws, wa) = ([0.0f64, 260.0], [30.0f64, 140.0]);
        let h = 1e-6 / ((qb[0] - ws[0]).powi(2) + (qb[1] - ws[1]).powi(2) + hb * hb);
        let g = 1e-6 / ((qu[0] - wa[0]).powi(2) + (qu[1] - wa[1]).powi(2) + hu * hu);
        let f = 1e-6 / ((qb[0] - qu[0]).powi(2) + (qb[1] - qu[1]).powi(2) + (hb - hu).powi(2));
        let hg = 1e-6 / ((ws[0] - wa[0]).powi(2) + (ws[1] - wa[1]).powi(2)).powf(1.5);
        let n0 = 1e-14;
        let up = (1.0 + h * 0.07 / (f * 0.03 + n0)).log2();
        let down = (1.0 + g * 0.03 / (hg * 0.07 + n0)).log2();
        let expected = up + down;
        assert!(
            (rb.objective - expected).abs() <= 1e-12 * expected,
            "{} {}",
            rb.objective,
            expected
        );
    }

    #[test]
    fn role_swap_symmetry() {
        let mut cfg = small_instance(1, 1, 1);
        cfg.alpha_g2g = 2.0;
        // SN/AP 100 m apart, UAVs 100 m apart at slot 1
        cfg.sn_positions = vec![[0.0, 0.0]];
        cfg.ap_positions = vec![[100.0, 0.0]];
        let mut t = Trajectory::straight_line(&cfg);
        t.uav_bs.q[1] = [10.0, 30.0];
        t.uav_bs.h[1] = 150.0;
        t.uav_ap.q[1] = [90.0, 30.0];
        t.uav_ap.h[1] = 210.0;
        let mut s = Schedule::zeros(1, 1, 1, ScheduleMode::Binary);
        s.x[0][0] = 1.0;
        s.y[0][0] = 1.0;
        let p = power(0.08, 0.02);
        let g = expected_gains(&cfg, &t).unwrap();
        assert!((g.f[0] - g.h_g2g[0][0]).abs() < 1e-24);
        let a = evaluate_with_gains(&cfg, &g, &s, &p).unwrap().objective;

        let mut cfg2 = cfg.clone();
        cfg2.sn_positions = cfg.ap_positions.clone();
        cfg2.ap_positions = cfg.sn_positions.clone();
        let t2 = Trajectory {
            uav_bs: t.uav_ap.clone(),
            uav_ap: t.uav_bs.clone(),
        };
        let p2 = power(0.02, 0.08);
        let b = evaluate_objective(&cfg2, &t2, &s, &p2).unwrap().objective;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn penalized_matches_objective_with_single_activity() {
        let cfg = small_instance(2, 2, 2);
        let t = Trajectory::straight_line(&cfg);
        let g = expected_gains(&cfg, &t).unwrap();
        let mut tilde = PenalizedPower::zeros(2, 2, 2);
        tilde.p_s[1][0] = 0.1;
        tilde.p_s[0][1] = 0.04;
        tilde.p_u[0][0] = 0.06;
        tilde.p_u[1][1] = 0.1;
        let mut s = Schedule::zeros(2, 2, 2, ScheduleMode::Binary);
        let mut p = PowerAllocation::zeros(2, 2);
        for i in 0..2 {
            for k in 0..2 {
                if tilde.p_s[k][i] > 0.0 {
                    s.y[k][i] = 1.0;
                    p.p_s[k][i] = tilde.p_s[k][i];
                }
                if tilde.p_u[k][i] > 0.0 {
                    s.x[k][i] = 1.0;
                    p.p_u[i] = tilde.p_u[k][i];
                }
            }
        }
        let a = evaluate_penalized_objective(&cfg, &g, &tilde);
        let b = evaluate_with_gains(&cfg, &g, &s, &p).unwrap().objective;
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn penalty_suppresses_simultaneous_sns() {
        let cfg = small_instance(2, 1, 1);
        let t = Trajectory::straight_line(&cfg);
        let g = expected_gains(&cfg, &t).unwrap();
        let mut tilde = PenalizedPower::zeros(2, 1, 1);
        tilde.p_s[0][0] = 0.1;
        tilde.p_s[1][0] = 0.1;
        let mut solo = cfg.clone();
        solo.weight_beta2 = 0.0;
        let v = evaluate_penalized_objective(&solo, &g, &tilde);
        for k in 0..2 {
            let bound = (1.0 + g.h[k][0] * 0.1 / (cfg.penalty_m * 0.1)).log2();
            assert!(bound < 1e-9);
        }
        assert!(v < 2e-9);
        assert_eq!(
            evaluate_penalized_objective(&cfg, &g, &PenalizedPower::zeros(2, 1, 1)),
            0.0
        );
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        let cfg = small_instance(2, 2, 4);
        let t = Trajectory::straight_line(&cfg);
        let s = Schedule::uniform(2, 2, 4);
        let p = PowerAllocation::full(&cfg);
        let a = evaluate_objective(&cfg, &t, &s, &p).unwrap().objective;
        let b = evaluate_objective(&cfg.cast::<f32>(), &t.cast(), &s_cast(&s), &p_cast(&p))
            .unwrap()
            .objective;
        assert!(((b as f64) - a).abs() < 1e-4 * a);
    }

    fn s_cast(s: &Schedule<f64>) -> Schedule<f32> {
        Schedule {
            x: s.x
                .iter()
                .map(|r| r.iter().map(|&v| v as f32).collect())
                .collect(),
            y: s.y
                .iter()
                .map(|r| r.iter().map(|&v| v as f32).collect())
                .collect(),
            mode: s.mode,
        }
    }

    fn p_cast(p: &PowerAllocation<f64>) -> PowerAllocation<f32> {
        PowerAllocation {
            p_u: p.p_u.iter().map(|&v| v as f32).collect(),
            p_s: p
                .p_s
                .iter()
                .map(|r| r.iter().map(|&v| v as f32).collect())
                .collect(),
        }
    }

    proptest! {
        #[test]
        fn objective_identity_and_monotonicity(
            ps in prop::collection::vec(0.0f64..0.1, 6),
            pu in prop::collection::vec(0.0f64..0.1, 3),
            ys in prop::collection::vec(0.0f64..0.5, 6),
            bump in 1e-4f64..0.05,
        ) {
            let cfg = small_instance(2, 2, 3);
            let t = Trajectory::straight_line(&cfg);
            let g = expected_gains(&cfg, &t).unwrap();
            let p = PowerAllocation { p_u: pu.clone(), p_s: vec![ps[..3].to_vec(), ps[3..].to_vec()] };
            let s = Schedule {
                x: vec![ys[..3].to_vec(), ys[3..].to_vec()],
                y: vec![ys[3..].to_vec(), ys[..3].to_vec()],
                mode: ScheduleMode::Relaxed,
            };
            let rb = evaluate_with_gains(&cfg, &g, &s, &p).unwrap();
            let mut manual = 0.0;
            for i in 0..3 {
                for k in 0..2 {
                    manual += cfg.weight_beta1 * s.y[k][i] * rb.r_s[k][i];
                    manual += cfg.weight_beta2 * s.x[k][i] * rb.r_u[k][i];
                }
            }
            prop_assert!((manual - rb.objective).abs() <= 1e-12 * manual.max(1e-300));
            prop_assert!(rb.r_s.iter().chain(&rb.r_u).flatten().all(|&r| r >= 0.0));

            // own power up: uplink of SN 0 does not drop; interference up: downlink does not rise
            let mut p2 = p.clone();
            p2.p_s[0][1] += bump;
            prop_assert!(uplink_rate(&g, &p2, cfg.noise_power, 0, 1) >= rb.r_s[0][1]);
            prop_assert!(downlink_rate(&g, &p2, &s, cfg.noise_power, 0, 1) <= rb.r_u[0][1]);
            let mut p3 = p.clone();
            p3.p_u[2] += bump;
            prop_assert!(uplink_rate(&g, &p3, cfg.noise_power, 1, 2) <= rb.r_s[1][2]);
            prop_assert!(downlink_rate(&g, &p3, &s, cfg.noise_power, 1, 2) >= rb.r_u[1][2]);
        }
    }
}
