//! Large-scale channel gains and Rician small-scale fading samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist2_sq, log2_1p, Real};
use crate::scenario::{ScenarioConfig, Trajectory};

/// Name of the generator behind [`sample_rician_power`], recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64";

/// Expected channel power gains. Slot-indexed arrays hold slot `n` at `n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedGains<T> {
    /// SN `k` to UAV-BS.
    pub h: Vec<Vec<T>>,
    /// UAV-AP to AP `l`.
    pub g: Vec<Vec<T>>,
    /// UAV-AP to UAV-BS.
    pub f: Vec<T>,
    /// SN `k` to AP `l`, time invariant.
    pub h_g2g: Vec<Vec<T>>,
}

impl<T: Real> ExpectedGains<T> {
    pub fn slots(&self) -> usize {
        self.f.len()
    }
}

/// Air-ground gain `beta0 / (|q - w|^2 + h^2)^(kappa/2)`.
#[inline]
pub fn air_ground_gain<T: Real>(beta0: T, kappa: T, q: [T; 2], h: T, w: [T; 2]) -> T {
    beta0 / (dist2_sq(q, w) + h * h).powf(kappa / T::lit(2.0))
}

fn power_law<T: Real>(beta0: T, exponent: T, d_sq: T) -> T {
    beta0 / d_sq.powf(exponent / T::lit(2.0))
}

pub fn g2g_gains<T: Real>(cfg: &ScenarioConfig<T>) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::with_capacity(cfg.num_sns());
    for (k, &w_s) in cfg.sn_positions.iter().enumerate() {
        let mut row = Vec::with_capacity(cfg.num_aps());
        for &w_a in &cfg.ap_positions {
            let d_sq = dist2_sq(w_s, w_a);
            if d_sq <= T::zero() {
                return Err(Error::ZeroDistance {
                    what: "a sensor node and an access point",
                    slot: None,
                });
            }
            let gain = power_law(cfg.beta0, cfg.alpha_g2g, d_sq);
            if !(gain.is_finite() && gain > T::zero()) {
                return Err(Error::Invariant(format!("G2G gain for SN {k} not finite")));
            }
            row.push(gain);
        }
        out.push(row);
    }
    Ok(out)
}

/// Evaluates every expected gain along a trajectory.
pub fn expected_gains<T: Real>(
    cfg: &ScenarioConfig<T>,
    traj: &Trajectory<T>,
) -> Result<ExpectedGains<T>> {
    let n_slots = cfg.slots;
    if traj.slots() != n_slots || traj.uav_ap.q.len() != n_slots + 1 {
        return Err(Error::Dimension(format!(
            "trajectory has {} slots, scenario {}",
            traj.slots(),
            n_slots
        )));
    }
    let b = &traj.uav_bs;
    let a = &traj.uav_ap;
    let h = cfg
        .sn_positions
        .iter()
        .map(|&w| {
            (1..=n_slots)
                .map(|n| air_ground_gain(cfg.beta0, cfg.kappa_s, b.q[n], b.h[n], w))
                .collect()
        })
        .collect();
    let g = cfg
        .ap_positions
        .iter()
        .map(|&w| {
            (1..=n_slots)
                .map(|n| air_ground_gain(cfg.beta0, cfg.kappa_a, a.q[n], a.h[n], w))
                .collect()
        })
        .collect();
    let mut f = Vec::with_capacity(n_slots);
    for n in 1..=n_slots {
        let d_sq = traj.separation_sq(n);
        if d_sq <= T::zero() {
            return Err(Error::ZeroDistance {
                what: "the two UAVs",
                slot: Some(n),
            });
        }
        f.push(power_law(cfg.beta0, cfg.kappa_u, d_sq));
    }
    Ok(ExpectedGains {
        h,
        g,
        f,
        h_g2g: g2g_gains(cfg)?,
    })
}

/// Draws `count` samples of `|h|^2` for a unit-mean Rician channel with factor `k_factor`.
///
/// The LoS phase is uniform on `[0, 2pi)` and the scattered part is `CN(0, 1)`.
pub fn sample_rician_power(k_factor: f64, seed: u64, count: usize) -> Vec<f64> {
    assert!(k_factor >= 0.0, "Rician factor must be non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = (k_factor / (k_factor + 1.0)).sqrt();
    let nlos = (1.0 / (k_factor + 1.0)).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let r = los * theta.cos() + nlos * half * re;
            let i = los * theta.sin() + nlos * half * im;
            r * r + i * i
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich<T> {
    pub lower: T,
    pub approx: T,
    pub upper: T,
    pub empirical: T,
    /// Standard error of `empirical`.
    pub empirical_se: T,
}

impl<T: Real> Sandwich<T> {
    pub fn bounds_ordered(&self) -> bool {
        self.lower <= self.approx && self.approx <= self.upper
    }

    /// Whether `empirical` lies in `[lower, upper]` widened by `z` standard errors.
    pub fn empirical_within(&self, z: T) -> bool {
        let slack = z * self.empirical_se;
        self.empirical >= self.lower - slack && self.empirical <= self.upper + slack
    }
}

/// Bounds on `E[log2(1 + X/Y)]` for independent `X >= 0`, `Y > 0` from samples.
///
/// `upper = log2(1 + E[X] E[1/Y])`, `lower = log2(1 + 1 / (E[Y] E[1/X]))`,
/// `approx = log2(1 + E[X] / E[Y])`, each expectation replaced by its sample
/// mean. Using the product of marginal means makes `lower <= approx <= upper`
/// hold exactly for any sample set. `lower` is 0 when some `x` is 0.
pub fn theorem1_sandwich<T: Real>(x: &[T], y: &[T]) -> Result<Sandwich<T>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Malformed("sandwich needs non-empty samples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} x samples but {} y samples",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|&v| !(v >= T::zero() && v.is_finite())) {
        return Err(Error::Malformed("x samples must be finite and >= 0".into()));
    }
    if y.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
        return Err(Error::Malformed("y samples must be finite and > 0".into()));
    }
    let count = T::lit(x.len() as f64);
    let mean = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, b| a + b) / count;
    let mean_x = mean(&mut x.iter().copied());
    let mean_y = mean(&mut y.iter().copied());
    let mean_inv_y = mean(&mut y.iter().map(|&v| v.recip()));
    let upper = log2_1p(mean_x * mean_inv_y);
    let approx = log2_1p(mean_x / mean_y);
    let lower = if x.iter().any(|&v| v == T::zero()) {
        T::zero()
    } else {
        let mean_inv_x = mean(&mut x.iter().map(|&v| v.recip()));
        log2_1p((mean_y * mean_inv_x).recip())
    };
    // the orderings are exact in real arithmetic; absorb last-ulp rounding
    let lower = lower.min(approx);
    let upper = upper.max(approx);
    let per: Vec<T> = x.iter().zip(y).map(|(&a, &b)| log2_1p(a / b)).collect();
    let empirical = mean(&mut per.iter().copied());
    let empirical_se = if per.len() > 1 {
        let ss = per
            .iter()
            .fold(T::zero(), |acc, &v| acc + (v - empirical) * (v - empirical));
        (ss / T::lit((per.len() - 1) as f64)).sqrt() / count.sqrt()
    } else {
        T::zero()
    };
    Ok(Sandwich {
        lower,
        approx,
        upper,
        empirical,
        empirical_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;
    use crate::testing::single_pair_toml;
    use proptest::prelude::*;

    fn cfg() -> ScenarioConfig<f64> {
        load_scenario(&single_pair_toml(50.0, 100)).unwrap()
    }

    #[test]
    fn overhead_gain() {
        let g: f64 = air_ground_gain(1e-6, 2.0, [3.0, 4.0], 100.0, [3.0, 4.0]);
        assert!((g - 1e-10).abs() < 1e-22);
    }

    #[test]
    fn g2g_gain_from_single_pair_layout() {
        let g = g2g_gains(&cfg()).unwrap();
        assert!((g[0][0] - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn coincident_sn_and_ap_rejected() {
        let mut c = cfg();
        c.ap_positions[0] = c.sn_positions[0];
        assert!(matches!(g2g_gains(&c), Err(Error::ZeroDistance { .. })));
    }

    #[test]
    fn coincident_uavs_rejected() {
        let c = cfg();
        let mut t = Trajectory::straight_line(&c);
        t.uav_ap.q[7] = t.uav_bs.q[7];
        t.uav_ap.h[7] = t.uav_bs.h[7];
        assert!(matches!(
            expected_gains(&c, &t),
            Err(Error::ZeroDistance { slot: Some(7), .. })
        ));
    }

    #[test]
    fn doubling_u2u_distance_quarters_gain() {
        let c = cfg();
        let mut t = Trajectory::straight_line(&c);
        let f1 = expected_gains(&c, &t).unwrap().f[0];
        // same altitude: separation is purely horizontal 400 m at slot 1
        t.uav_ap.h[1] = t.uav_bs.h[1];
        let f_a = expected_gains(&c, &t).unwrap().f[0];
        t.uav_ap.q[1][1] = t.uav_bs.q[1][1] - 800.0;
        let f_b = expected_gains(&c, &t).unwrap().f[0];
        assert!((f_a / f_b - 4.0).abs() < 1e-12);
        assert!(f1 > 0.0);
    }

    #[test]
    fn los_limit_is_deterministic() {
        for s in sample_rician_power(1e12, 1, 1000) {
            assert!((s - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn rayleigh_mean_within_three_sigma() {
        let s = sample_rician_power(0.0, 11, 10_000);
        let m = s.iter().sum::<f64>() / s.len() as f64;
        // exponential(1): sigma of the mean is 1/sqrt(n)
        assert!((m - 1.0).abs() < 3.0 / 100.0, "{m}");
    }

    #[test]
    fn three_db_sample_mean() {
        let s = sample_rician_power(10f64.powf(0.3), 2024, 10_000);
        let m = s.iter().sum::<f64>() / s.len() as f64;
        assert!((0.97..=1.03).contains(&m), "{m}");
    }

    #[test]
    fn sampler_is_reproducible() {
        assert_eq!(
            sample_rician_power(2.0, 5, 64),
            sample_rician_power(2.0, 5, 64)
        );
        assert_ne!(
            sample_rician_power(2.0, 5, 64),
            sample_rician_power(2.0, 6, 64)
        );
    }

    #[test]
    fn sandwich_degenerate_constant() {
        let s = theorem1_sandwich(&[2.0; 5], &[1.0; 5]).unwrap();
        let l3 = 3f64.log2();
        for v in [s.lower, s.approx, s.upper, s.empirical] {
            assert!((v - l3).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_zero_signal() {
        let s = theorem1_sandwich(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            (s.lower, s.approx, s.upper, s.empirical),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn sandwich_three_db_against_noise() {
        let sigma2 = 1e-14;
        let x: Vec<f64> = sample_rician_power(10f64.powf(0.3), 8, 10_000)
            .into_iter()
            .map(|v| v * 1e3 * sigma2)
            .collect();
        let y = vec![sigma2; x.len()];
        let s = theorem1_sandwich(&x, &y).unwrap();
        // approx uses the sample mean of x, which is 1e3 * sigma2 only on average
        assert!((s.approx - 1001f64.log2()).abs() < 0.05);
        // E[log2(1 + 1e3 X)] for unit-mean Rician X with K = 3 dB, by quadrature
        // over the noncentral chi-square density (2 dof, noncentrality 2K)
        let exact = 9.456_506_281_356_623;
        assert!((s.empirical - exact).abs() < 3.0 * s.empirical_se, "{s:?}");
        assert!(s.approx - s.empirical > 0.4);
        assert!(s.bounds_ordered());
        assert!(s.empirical_within(3.0));
    }

    #[test]
    fn sandwich_rejects_bad_input() {
        assert!(theorem1_sandwich::<f64>(&[], &[]).is_err());
        assert!(theorem1_sandwich(&[1.0], &[0.0]).is_err());
        assert!(theorem1_sandwich(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn sandwich_bounds_always_ordered(
            x in prop::collection::vec(0.0f64..1e3, 1..40),
            y in prop::collection::vec(1e-3f64..1e3, 40),
        ) {
            let y = &y[..x.len()];
            let s = theorem1_sandwich(&x, y).unwrap();
            prop_assert!(s.bounds_ordered(), "{:?}", s);
        }

        #[test]
        fn gains_translation_invariant(dx in -1e3f64..1e3, dy in -1e3f64..1e3) {
            let c = cfg();
            let t = Trajectory::straight_line(&c);
            let g0 = expected_gains(&c, &t).unwrap();
            let shift = |p: [f64; 2]| [p[0] + dx, p[1] + dy];
            let mut c2 = c.clone();
            c2.sn_positions = c.sn_positions.iter().copied().map(shift).collect();
            c2.ap_positions = c.ap_positions.iter().copied().map(shift).collect();
            let mut t2 = t.clone();
            for p in [&mut t2.uav_bs, &mut t2.uav_ap] {
                for q in &mut p.q { *q = shift(*q); }
            }
            let g1 = expected_gains(&c2, &t2).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs();
            prop_assert!(g0.h.iter().flatten().zip(g1.h.iter().flatten()).all(|(&a, &b)| close(a, b)));
            prop_assert!(g0.g.iter().flatten().zip(g1.g.iter().flatten()).all(|(&a, &b)| close(a, b)));
            prop_assert!(g0.f.iter().zip(&g1.f).all(|(&a, &b)| close(a, b)));
            prop_assert!(close(g0.h_g2g[0][0], g1.h_g2g[0][0]));
        }

        #[test]
        fn gains_scale_with_beta0(scale in 0.1f64..10.0) {
            let c = cfg();
            let t = Trajectory::straight_line(&c);
            let g0 = expected_gains(&c, &t).unwrap();
            let mut c2 = c.clone();
            c2.beta0 *= scale;
            let g1 = expected_gains(&c2, &t).unwrap();
            for (a, b) in g0.h.iter().flatten().zip(g1.h.iter().flatten()) {
                prop_assert!((b / a - scale).abs() < 1e-12 * scale);
            }
            prop_assert!((g1.f[3] / g0.f[3] - scale).abs() < 1e-12 * scale);
        }

        #[test]
        fn gain_decreases_with_distance(d in 0.0f64..2e3, extra in 1e-3f64..100.0) {
            let near = air_ground_gain(1e-6, 2.0, [d, 0.0], 100.0, [0.0, 0.0]);
            let far = air_ground_gain(1e-6, 2.0, [d + extra, 0.0], 100.0, [0.0, 0.0]);
            prop_assert!(far < near);
        }
    }
}
