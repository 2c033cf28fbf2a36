//! Trajectory block: rates are bounded below by expressions that are concave in
//! the UAV positions, with a slack `upsilon[n]` under the squared UAV separation.

use std::f64::consts::LOG2_E;

use crate::channel::{expected_gains, ExpectedGains};
use crate::error::{Error, Result};
use crate::kernel::barrier::{
    maximize_concave, BarrierOptions, ConcaveObjective, ConstraintSet, LinearIneq, QuadIneq,
};
use crate::kernel::linalg::SymMatrix;
use crate::rates::evaluate_with_gains;
use crate::scenario::{PowerAllocation, ScenarioConfig, Schedule, Trajectory, Uav};

/// Length unit of the scaled variables, metres.
const L0: f64 = 100.0;
/// Lower bound on the separation slack, m^2.
pub const UPSILON_FLOOR: f64 = 1e-3;

/// Sparse affine form `terms . z + c`.
#[derive(Debug, Clone, Default)]
struct Aff {
    terms: Vec<(usize, f64)>,
    c: f64,
}

impl Aff {
    fn constant(c: f64) -> Self {
        Aff {
            terms: Vec::new(),
            c,
        }
    }

    fn var(j: usize) -> Self {
        Aff {
            terms: vec![(j, 1.0)],
            c: 0.0,
        }
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.c + self.terms.iter().map(|&(j, v)| v * z[j]).sum::<f64>()
    }

    fn scale(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self.c *= s;
        self
    }

    fn add(mut self, other: &Aff) -> Self {
        for &(j, v) in &other.terms {
            match self.terms.iter_mut().find(|t| t.0 == j) {
                Some(t) => t.1 += v,
                None => self.terms.push((j, v)),
            }
        }
        self.c += other.c;
        self
    }

    fn sub(self, other: &Aff) -> Self {
        self.add(&other.clone().scale(-1.0))
    }
}

#[derive(Debug, Clone)]
enum Term {
    /// `-w * sum(row^2)`
    Quad { w: f64, rows: Vec<Aff> },
    /// `-w * log2(noise + a * (L0^2 z_j)^(-c))`
    Interference {
        w: f64,
        j: usize,
        a: f64,
        c: f64,
        noise: f64,
    },
}

#[derive(Debug, Clone)]
struct Objective {
    dim: usize,
    constant: f64,
    terms: Vec<Term>,
}

impl Objective {
    fn interference(a: f64, c: f64, noise: f64, z: f64) -> (f64, f64, f64) {
        let s = L0 * L0;
        let u = a * (s * z).powf(-c);
        let du = -c * u / z;
        let d2u = c * (c + 1.0) * u / (z * z);
        let d = noise + u;
        (
            d.log2(),
            LOG2_E * du / d,
            LOG2_E * (d2u * d - du * du) / (d * d),
        )
    }
}

impl ConcaveObjective for Objective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            match t {
                Term::Quad { w, rows } => {
                    v -= w * rows.iter().map(|r| r.eval(z).powi(2)).sum::<f64>()
                }
                Term::Interference { w, j, a, c, noise } => {
                    v -= w * Self::interference(*a, *c, *noise, z[*j]).0
                }
            }
        }
        v
    }

    fn evaluate(&self, z: &[f64], grad: &mut [f64], hess: &mut SymMatrix) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            match t {
                Term::Quad { w, rows } => {
                    for r in rows {
                        let e = r.eval(z);
                        v -= w * e * e;
                        for &(j, a) in &r.terms {
                            grad[j] -= 2.0 * w * e * a;
                        }
                        hess.add_outer(&r.terms, -2.0 * w);
                    }
                }
                Term::Interference { w, j, a, c, noise } => {
                    let (g0, g1, g2) = Self::interference(*a, *c, *noise, z[*j]);
                    v -= w * g0;
                    grad[*j] -= w * g1;
                    hess.add(*j, *j, -w * g2);
                }
            }
        }
        v
    }
}

/// Where each coordinate of the trajectory lives in the scaled variable vector.
#[derive(Debug, Clone)]
struct Layout {
    slots: usize,
    freeze_altitude: bool,
    dim: usize,
}

impl Layout {
    fn new(slots: usize, freeze_altitude: bool) -> Self {
        let per = if freeze_altitude { 5 } else { 7 };
        Layout {
            slots,
            freeze_altitude,
            dim: per * slots.saturating_sub(1),
        }
    }

    fn per(&self) -> usize {
        if self.freeze_altitude {
            5
        } else {
            7
        }
    }

    fn interior(&self, n: usize) -> bool {
        n >= 1 && n < self.slots
    }

    fn base(&self, n: usize) -> usize {
        (n - 1) * self.per()
    }

    /// Index of horizontal coordinate `axis` of `uav` at position `n`.
    fn q_index(&self, uav: Uav, n: usize, axis: usize) -> Option<usize> {
        let off = match (uav, self.freeze_altitude) {
            (Uav::Bs, _) => 0,
            (Uav::Ap, false) => 3,
            (Uav::Ap, true) => 2,
        };
        self.interior(n).then(|| self.base(n) + off + axis)
    }

    fn h_index(&self, uav: Uav, n: usize) -> Option<usize> {
        if self.freeze_altitude {
            return None;
        }
        let off = if uav == Uav::Bs { 2 } else { 5 };
        self.interior(n).then(|| self.base(n) + off)
    }

    fn upsilon_index(&self, n: usize) -> usize {
        self.base(n) + self.per() - 1
    }

    fn coords(&self, traj: &Trajectory<f64>, uav: Uav, n: usize) -> [Aff; 3] {
        let p = traj.path(uav);
        let q = |axis: usize| match self.q_index(uav, n, axis) {
            Some(j) => Aff::var(j),
            None => Aff::constant(p.q[n][axis] / L0),
        };
        let h = match self.h_index(uav, n) {
            Some(j) => Aff::var(j),
            None => Aff::constant(p.h[n] / L0),
        };
        [q(0), q(1), h]
    }

    fn pack(&self, traj: &Trajectory<f64>, upsilon: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        for n in 1..self.slots {
            for uav in [Uav::Bs, Uav::Ap] {
                let p = traj.path(uav);
                for axis in 0..2 {
                    z[self.q_index(uav, n, axis).unwrap()] = p.q[n][axis] / L0;
                }
                if let Some(j) = self.h_index(uav, n) {
                    z[j] = p.h[n] / L0;
                }
            }
            z[self.upsilon_index(n)] = upsilon[n - 1] / (L0 * L0);
        }
        z
    }

    fn unpack(&self, z: &[f64], template: &Trajectory<f64>) -> Trajectory<f64> {
        let mut t = template.clone();
        for n in 1..self.slots {
            for uav in [Uav::Bs, Uav::Ap] {
                let qi = [self.q_index(uav, n, 0), self.q_index(uav, n, 1)];
                let hi = self.h_index(uav, n);
                let p = t.path_mut(uav);
                for axis in 0..2 {
                    p.q[n][axis] = z[qi[axis].unwrap()] * L0;
                }
                if let Some(j) = hi {
                    p.h[n] = z[j] * L0;
                }
            }
        }
        t
    }
}

/// Concave lower bound of the objective in the trajectory, tight at `traj_r`
/// with `upsilon` equal to the squared separation.
#[derive(Debug, Clone)]
pub struct TrajectorySurrogate {
    layout: Layout,
    objective: Objective,
    constraints: ConstraintSet,
    /// Linearized squared separation per interior position, scaled.
    psi: Vec<Aff>,
    expansion: Trajectory<f64>,
}

impl TrajectorySurrogate {
    pub fn build(
        cfg: &ScenarioConfig<f64>,
        sched: &Schedule<f64>,
        power: &PowerAllocation<f64>,
        traj_r: &Trajectory<f64>,
        freeze_altitude: bool,
    ) -> Result<Self> {
        let gains = expected_gains(cfg, traj_r)?;
        let n_slots = cfg.slots;
        let layout = Layout::new(n_slots, freeze_altitude);
        let (k_n, l_n) = (cfg.num_sns(), cfg.num_aps());
        let noise = cfg.noise_power;
        let beta0 = cfg.beta0;
        let (cs, ca, cu) = (cfg.kappa_s / 2.0, cfg.kappa_a / 2.0, cfg.kappa_u / 2.0);
        let mut terms = Vec::new();
        let mut constant = 0.0;
        let mut psi = Vec::new();

        for n in 1..n_slots {
            let i = n - 1;
            let b = layout.coords(traj_r, Uav::Bs, n);
            let a = layout.coords(traj_r, Uav::Ap, n);
            let sep: Vec<Aff> = (0..3).map(|d| a[d].clone().sub(&b[d])).collect();
            let y_r = traj_r.separation_sq(n);
            let pb = traj_r.uav_bs.position(n);
            let pa = traj_r.uav_ap.position(n);
            // tangent of |w_u - w_b|^2 at the expansion point, in units of L0^2
            let mut lin = Aff::constant(y_r / (L0 * L0));
            for d in 0..3 {
                let diff = pa[d] - pb[d];
                let slope = 2.0 * diff / L0;
                lin = lin.add(&sep[d].clone().sub(&Aff::constant(diff / L0)).scale(slope));
            }
            psi.push(lin);

            let pu = power.p_u[i];
            for k in 0..k_n {
                let y = sched.y[k][i];
                let ps = power.p_s[k][i];
                if y <= 0.0 || ps <= 0.0 {
                    continue;
                }
                let w = cfg.weight_beta1 * y;
                let wk = cfg.sn_positions[k];
                let zb_r = (pb[0] - wk[0]).powi(2) + (pb[1] - wk[1]).powi(2) + pb[2] * pb[2];
                let interf = beta0 * pu * y_r.powf(-cu);
                let sig = beta0 * ps * zb_r.powf(-cs);
                let d = noise + interf + sig;
                let om1 = LOG2_E * cu * interf / y_r / d;
                let om2 = LOG2_E * cs * sig / zb_r / d;
                constant += w * (d.log2() + om1 * y_r + om2 * zb_r);
                if om1 > 0.0 {
                    terms.push(Term::Quad {
                        w: w * om1 * L0 * L0,
                        rows: sep.clone(),
                    });
                }
                terms.push(Term::Quad {
                    w: w * om2 * L0 * L0,
                    rows: vec![
                        b[0].clone().sub(&Aff::constant(wk[0] / L0)),
                        b[1].clone().sub(&Aff::constant(wk[1] / L0)),
                        b[2].clone(),
                    ],
                });
                terms.push(Term::Interference {
                    w,
                    j: layout.upsilon_index(n),
                    a: beta0 * pu,
                    c: cu,
                    noise,
                });
            }
            if pu <= 0.0 {
                continue;
            }
            for l in 0..l_n {
                let x = sched.x[l][i];
                if x <= 0.0 {
                    continue;
                }
                let w = cfg.weight_beta2 * x;
                let wl = cfg.ap_positions[l];
                let zu_r = (pa[0] - wl[0]).powi(2) + (pa[1] - wl[1]).powi(2) + pa[2] * pa[2];
                let interf: f64 = (0..k_n)
                    .map(|k| gains.h_g2g[k][l] * sched.y[k][i] * power.p_s[k][i])
                    .sum::<f64>()
                    + noise;
                let s1 = beta0 * pu / interf;
                let ratio = s1 * zu_r.powf(-ca);
                let s2 = LOG2_E * ca * ratio / zu_r / (1.0 + ratio);
                constant += w * (ratio.ln_1p() * LOG2_E + s2 * zu_r);
                terms.push(Term::Quad {
                    w: w * s2 * L0 * L0,
                    rows: vec![
                        a[0].clone().sub(&Aff::constant(wl[0] / L0)),
                        a[1].clone().sub(&Aff::constant(wl[1] / L0)),
                        a[2].clone(),
                    ],
                });
            }
        }
        // the last slot uses the fixed final positions
        if n_slots >= 1 {
            constant += last_slot_value(cfg, &gains, sched, power)?;
        }

        let constraints = build_constraints(cfg, &layout, traj_r, &psi);
        Ok(TrajectorySurrogate {
            objective: Objective {
                dim: layout.dim,
                constant,
                terms,
            },
            layout,
            constraints,
            psi,
            expansion: traj_r.clone(),
        })
    }

    /// Slack values at which the surrogate is tight: the squared separations.
    pub fn expansion_upsilon(&self) -> Vec<f64> {
        (1..self.layout.slots)
            .map(|n| self.expansion.separation_sq(n))
            .collect()
    }

    /// Surrogate value; `upsilon[n - 1]` belongs to interior position `n`, in m^2.
    pub fn value(&self, traj: &Trajectory<f64>, upsilon: &[f64]) -> f64 {
        self.objective.value(&self.layout.pack(traj, upsilon))
    }

    /// Linearized squared separation at interior position `n`, m^2.
    pub fn psi(&self, traj: &Trajectory<f64>, n: usize) -> f64 {
        let z = self
            .layout
            .pack(traj, &vec![1.0; self.layout.slots.saturating_sub(1)]);
        self.psi[n - 1].eval(&z) * L0 * L0
    }

    /// Largest constraint violation of `(traj, upsilon)` in scaled units.
    pub fn max_violation(&self, traj: &Trajectory<f64>, upsilon: &[f64]) -> f64 {
        self.constraints
            .max_violation(&self.layout.pack(traj, upsilon))
    }
}

fn last_slot_value(
    cfg: &ScenarioConfig<f64>,
    gains: &ExpectedGains<f64>,
    sched: &Schedule<f64>,
    power: &PowerAllocation<f64>,
) -> Result<f64> {
    let r = evaluate_with_gains(cfg, gains, sched, power)?;
    let i = cfg.slots - 1;
    Ok(cfg.weight_beta1 * r.uplink_in_slot(sched, i)
        + cfg.weight_beta2 * r.downlink_in_slot(sched, i))
}

fn build_constraints(
    cfg: &ScenarioConfig<f64>,
    layout: &Layout,
    traj_r: &Trajectory<f64>,
    psi: &[Aff],
) -> ConstraintSet {
    let dim = layout.dim;
    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut linear = Vec::new();
    let mut quadratic = Vec::new();
    let step_xy = cfg.max_step_xy() / L0;
    let step_z = cfg.max_step_z() / L0;
    for uav in [Uav::Bs, Uav::Ap] {
        for n in 1..=layout.slots {
            if !(layout.interior(n) || layout.interior(n - 1)) {
                continue;
            }
            let cur = layout.coords(traj_r, uav, n);
            let prev = layout.coords(traj_r, uav, n - 1);
            quadratic.push(QuadIneq {
                rows: (0..2)
                    .map(|d| {
                        let r = cur[d].clone().sub(&prev[d]);
                        (r.terms, r.c)
                    })
                    .collect(),
                c: step_xy * step_xy,
            });
            if !layout.freeze_altitude {
                let dz = cur[2].clone().sub(&prev[2]);
                linear.push(LinearIneq {
                    a: dz.terms.clone(),
                    b: step_z - dz.c,
                });
                let neg = dz.scale(-1.0);
                linear.push(LinearIneq {
                    a: neg.terms,
                    b: step_z - neg.c,
                });
            }
        }
        for n in 1..layout.slots {
            if let Some(j) = layout.h_index(uav, n) {
                lower[j] = cfg.h_min / L0;
                upper[j] = cfg.h_max / L0;
            }
        }
    }
    let d2 = cfg.d_min * cfg.d_min / (L0 * L0);
    for n in 1..layout.slots {
        let u = layout.upsilon_index(n);
        lower[u] = UPSILON_FLOOR / (L0 * L0);
        // upsilon <= psi
        let gap = Aff::var(u).sub(&psi[n - 1]);
        linear.push(LinearIneq {
            a: gap.terms,
            b: -gap.c,
        });
        // psi >= d_min^2
        let neg = psi[n - 1].clone().scale(-1.0);
        linear.push(LinearIneq {
            a: neg.terms,
            b: -d2 - neg.c,
        });
    }
    ConstraintSet {
        lower,
        upper,
        linear,
        quadratic,
    }
}

/// One surrogate maximization over the trajectory.
///
/// Returns `traj_r` itself when no strictly feasible start exists or when no
/// point on the segment towards the surrogate optimum improves the true
/// objective.
pub fn solve_trajectory_block(
    cfg: &ScenarioConfig<f64>,
    sched: &Schedule<f64>,
    power: &PowerAllocation<f64>,
    traj_r: &Trajectory<f64>,
    freeze_altitude: bool,
    barrier: &BarrierOptions,
) -> Result<Trajectory<f64>> {
    if cfg.slots < 2 {
        return Ok(traj_r.clone());
    }
    let sur = TrajectorySurrogate::build(cfg, sched, power, traj_r, freeze_altitude)?;
    let mut start = sur.layout.pack(traj_r, &sur.expansion_upsilon());
    // altitudes sitting on their limits are pulled 1 mm inside
    for n in 1..cfg.slots {
        for uav in [Uav::Bs, Uav::Ap] {
            if let Some(j) = sur.layout.h_index(uav, n) {
                let (lo, hi) = (sur.constraints.lower[j], sur.constraints.upper[j]);
                start[j] = start[j].clamp(lo + 1e-5, hi - 1e-5);
            }
        }
    }
    for n in 1..cfg.slots {
        let u = sur.layout.upsilon_index(n);
        start[u] = sur.psi[n - 1].eval(&start) * (1.0 - 1e-6);
    }
    let res = match maximize_concave(&sur.objective, &sur.constraints, &start, barrier) {
        Ok(r) => r,
        Err(Error::InfeasibleStart(_)) => return Ok(traj_r.clone()),
        Err(e) => return Err(e),
    };
    let candidate = sur.layout.unpack(&res.point, traj_r);
    let objective = |t: &Trajectory<f64>| -> Result<f64> {
        let g = expected_gains(cfg, t)?;
        Ok(evaluate_with_gains(cfg, &g, sched, power)?.objective)
    };
    let base = objective(traj_r)?;
    let mut step = 1.0;
    for _ in 0..6 {
        let t = blend(traj_r, &candidate, step);
        if objective(&t)? > base {
            return Ok(t);
        }
        step *= 0.5;
    }
    Ok(traj_r.clone())
}

fn blend(a: &Trajectory<f64>, b: &Trajectory<f64>, s: f64) -> Trajectory<f64> {
    if s == 1.0 {
        return b.clone();
    }
    let mut t = a.clone();
    for uav in [Uav::Bs, Uav::Ap] {
        let (pa, pb) = (a.path(uav), b.path(uav));
        let p = t.path_mut(uav);
        for n in 0..p.q.len() {
            for d in 0..2 {
                p.q[n][d] = pa.q[n][d] + s * (pb.q[n][d] - pa.q[n][d]);
            }
            p.h[n] = pa.h[n] + s * (pb.h[n] - pa.h[n]);
        }
    }
    t
}
