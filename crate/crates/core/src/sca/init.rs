//! Circular initial trajectories around the node centroids.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::{
    PowerAllocation, ScenarioConfig, Schedule, Trajectory, Uav, UavEndpoints, UavPath,
};

/// Fraction of the speed limits used by the initial paths.
const SPEED_MARGIN: f64 = 0.98;
/// Distance kept from the altitude limits, m.
const ALTITUDE_MARGIN: f64 = 0.5;

pub fn circle_radius(cfg: &ScenarioConfig<f64>) -> f64 {
    cfg.v_xy_max * cfg.period / (2.0 * PI)
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let s = points
        .iter()
        .fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    [s[0] / n, s[1] / n]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Closest point to `t` inside both disks; the intersection must be non-empty.
fn project_two_disks(t: [f64; 2], c1: [f64; 2], r1: f64, c2: [f64; 2], r2: f64) -> [f64; 2] {
    let into = |p: [f64; 2], c: [f64; 2], r: f64| {
        let d = dist(p, c);
        if d <= r {
            p
        } else {
            [c[0] + (p[0] - c[0]) * r / d, c[1] + (p[1] - c[1]) * r / d]
        }
    };
    let inside = |p: [f64; 2], c: [f64; 2], r: f64| dist(p, c) <= r * (1.0 + 1e-12);
    let a = into(t, c1, r1);
    if inside(a, c2, r2) {
        return a;
    }
    let b = into(t, c2, r2);
    if inside(b, c1, r1) {
        return b;
    }
    // nearest point of the lens is one of its corners
    let d = dist(c1, c2);
    if d <= 1e-12 {
        return into(t, c1, r1.min(r2));
    }
    let along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - along * along).max(0.0).sqrt();
    let u = [(c2[0] - c1[0]) / d, (c2[1] - c1[1]) / d];
    let m = [c1[0] + along * u[0], c1[1] + along * u[1]];
    let p1 = [m[0] - h * u[1], m[1] + h * u[0]];
    let p2 = [m[0] + h * u[1], m[1] - h * u[0]];
    if dist(p1, t) <= dist(p2, t) {
        p1
    } else {
        p2
    }
}

/// Follows `targets[n]` for `n = 1..N-1` from the initial point while staying
/// able to reach the final point.
fn track_xy(
    e: &UavEndpoints<f64>,
    targets: &[[f64; 2]],
    step: f64,
    full_step: f64,
) -> Vec<[f64; 2]> {
    let n_slots = targets.len() - 1;
    let mut q = vec![e.q_initial; n_slots + 1];
    for n in 1..n_slots {
        let left = (n_slots - n) as f64;
        // fall back to the full speed when the endpoints leave no slack
        let need = dist(q[n - 1], e.q_final) / (left + 1.0);
        let s = if need <= step * (1.0 + 1e-9) {
            step
        } else {
            need.min(full_step)
        };
        q[n] = project_two_disks(targets[n], q[n - 1], s, e.q_final, left * s);
    }
    q[n_slots] = e.q_final;
    q
}

fn track_z(e: &UavEndpoints<f64>, target: &[f64], step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n_slots = target.len() - 1;
    let mut h = vec![e.h_initial; n_slots + 1];
    for n in 1..n_slots {
        let reach = (n_slots - n) as f64 * step;
        let low = (h[n - 1] - step).max(e.h_final - reach).max(lo);
        let high = (h[n - 1] + step).min(e.h_final + reach).min(hi);
        h[n] = if low <= high {
            target[n].clamp(low, high)
        } else {
            // only possible when an endpoint sits outside the margin band
            target[n].clamp(h[n - 1] - step, h[n - 1] + step)
        };
    }
    h[n_slots] = e.h_final;
    h
}

fn circle_targets(cfg: &ScenarioConfig<f64>, uav: Uav) -> Vec<[f64; 2]> {
    let nodes = match uav {
        Uav::Bs => &cfg.sn_positions,
        Uav::Ap => &cfg.ap_positions,
    };
    let c = centroid(nodes);
    let r = circle_radius(cfg);
    let q0 = cfg.endpoints(uav).q_initial;
    let theta0 = if dist(q0, c) > 0.0 {
        (q0[1] - c[1]).atan2(q0[0] - c[0])
    } else {
        0.0
    };
    let n = cfg.slots;
    (0..=n)
        .map(|i| {
            let th = theta0 + 2.0 * PI * i as f64 / n as f64;
            [c[0] + r * th.cos(), c[1] + r * th.sin()]
        })
        .collect()
}

/// Circle around each node centroid at constant speed, blended into the
/// configured endpoints; constant altitudes; full power; uniform schedule.
pub fn init_circular(
    cfg: &ScenarioConfig<f64>,
) -> Result<(Trajectory<f64>, Schedule<f64>, PowerAllocation<f64>)> {
    let traj = circular_trajectory(cfg)?;
    Ok((
        traj,
        Schedule::uniform(cfg.num_sns(), cfg.num_aps(), cfg.slots),
        PowerAllocation::full(cfg),
    ))
}

pub fn circular_trajectory(cfg: &ScenarioConfig<f64>) -> Result<Trajectory<f64>> {
    let step_xy = cfg.max_step_xy() * SPEED_MARGIN;
    let step_z = cfg.max_step_z() * SPEED_MARGIN;
    let margin = ALTITUDE_MARGIN.min(0.25 * (cfg.h_max - cfg.h_min));
    let (lo, hi) = (cfg.h_min + margin, cfg.h_max - margin);
    let n = cfg.slots;
    let full = cfg.max_step_xy();
    let q_b = track_xy(&cfg.uav_bs, &circle_targets(cfg, Uav::Bs), step_xy, full);
    let q_a = track_xy(&cfg.uav_ap, &circle_targets(cfg, Uav::Ap), step_xy, full);
    let mut hb_t = cfg.uav_bs.h_initial.clamp(lo, hi);
    let mut ha_t = cfg.uav_ap.h_initial.clamp(lo, hi);
    let needs_split = (1..n).any(|i| dist(q_b[i], q_a[i]) < cfg.d_min * 1.05)
        && (hb_t - ha_t).abs() < cfg.d_min * 1.05;
    if needs_split {
        let split = cfg.d_min * 1.05;
        let mid = 0.5 * (hb_t + ha_t);
        let mid = mid.clamp(lo + split / 2.0, hi - split / 2.0);
        if hi - lo < split {
            return Err(Error::Initialization(
                "altitude range too narrow to separate the UAVs".into(),
            ));
        }
        let bs_high = cfg.uav_bs.h_initial >= cfg.uav_ap.h_initial;
        let sign = if bs_high { 1.0 } else { -1.0 };
        hb_t = mid + sign * split / 2.0;
        ha_t = mid - sign * split / 2.0;
    }
    let h_b = track_z(&cfg.uav_bs, &vec![hb_t; n + 1], step_z, lo, hi);
    let h_a = track_z(&cfg.uav_ap, &vec![ha_t; n + 1], step_z, lo, hi);
    let traj = Trajectory {
        uav_bs: UavPath { q: q_b, h: h_b },
        uav_ap: UavPath { q: q_a, h: h_a },
    };
    let d2 = cfg.d_min * cfg.d_min;
    if let Some(bad) = (0..=n).find(|&i| traj.separation_sq(i) <= d2) {
        return Err(Error::Initialization(format!(
            "initial paths closer than d_min at position {bad}"
        )));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate_trajectory;
    use crate::testing::{multi_node_desk, single_pair_desk, small_instance};

    #[test]
    fn circles_centered_on_single_nodes() {
        let mut cfg = small_instance(1, 1, 40);
        cfg.period = 60.0;
        cfg.slot_delta = 1.5;
        let r = circle_radius(&cfg);
        assert!((r - 50.0 * 60.0 / (2.0 * PI)).abs() < 1e-12);
        let t = circle_targets(&cfg, Uav::Bs);
        for p in &t {
            assert!((dist(*p, cfg.sn_positions[0]) - r).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_paths_are_feasible() {
        for cfg in [
            single_pair_desk(20.0, 40),
            multi_node_desk(40.0, 80, 1.0 / 3.0),
            small_instance(2, 2, 8),
            single_pair_desk(20.0, 10),
        ] {
            let (t, s, p) = init_circular(&cfg).unwrap();
            let v = validate_trajectory(&cfg, &t, 1e-9).unwrap();
            assert!(v.is_empty(), "{v:?}");
            assert_eq!(s.slots(), cfg.slots);
            assert!(p.p_u.iter().all(|&v| v == cfg.p_max_uav));
        }
    }

    #[test]
    fn coincident_centroids_split_altitudes() {
        let mut cfg = small_instance(1, 1, 10);
        cfg.sn_positions = vec![[100.0, 200.0]];
        cfg.ap_positions = vec![[100.0, 200.0]];
        cfg.uav_bs.q_initial = [100.0, 240.0];
        cfg.uav_bs.q_final = [100.0, 240.0];
        cfg.uav_ap.q_initial = [100.0, 260.0];
        cfg.uav_ap.q_final = [100.0, 260.0];
        for e in [&mut cfg.uav_bs, &mut cfg.uav_ap] {
            e.h_initial = 300.0;
            e.h_final = 300.0;
        }
        let t = circular_trajectory(&cfg).unwrap();
        for n in 2..9 {
            assert!(t.uav_bs.h[n] - t.uav_ap.h[n] >= 10.0);
        }
        assert!(validate_trajectory(&cfg, &t, 1e-9).unwrap().is_empty());
    }
}
