//! Globally optimal power and scheduling for fixed trajectories via polyblock
//! outer approximation of the penalized problem.
//!
//! SINR vertices use the layout: `chi[k][j]` at `k * m + j`, then
//! `chi_bar[l][j]` at `K * m + l * m + j`, where `j` runs over the `m` slots
//! of the block being optimized (all `N` slots for a joint polyblock).

use serde::{Deserialize, Serialize};

use crate::channel::{expected_gains, ExpectedGains};
use crate::error::{Error, Result};
use crate::kernel::lp::{feasibility_with_objective, LinearFeasibilityProblem, Sense};
use crate::rates::{evaluate_penalized_objective, evaluate_with_gains, PenalizedPower};
use crate::scenario::{
    max_residual, Diagnostics, PowerAllocation, ScenarioConfig, Schedule, ScheduleMode, Solution,
    Trajectory,
};

/// Child coordinates below this SINR are snapped to zero.
const SINR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrVertex(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoaOptions {
    /// Outer tolerance on the relative vertex movement `1 - lambda`.
    pub eps: f64,
    /// Bisection width on `lambda`.
    pub bisection_eps: f64,
    /// Iteration cap per polyblock.
    pub max_iters: usize,
    /// Largest number of SINR coordinates in one polyblock.
    pub dimension_guard: usize,
    pub prune_dominated: bool,
    /// Solve each slot as its own polyblock (the problem separates across slots).
    pub per_slot: bool,
    pub vertex_cap: usize,
    /// Activity threshold for schedule recovery, relative to the power limit.
    pub activity_threshold: f64,
}

impl Default for PoaOptions {
    fn default() -> Self {
        PoaOptions {
            eps: 1e-2,
            bisection_eps: 1e-2,
            max_iters: 200_000,
            dimension_guard: 16,
            prune_dominated: true,
            per_slot: true,
            vertex_cap: 500_000,
            activity_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaTraceRow {
    /// First slot (1-based) of the polyblock; 0 for a joint polyblock over all slots.
    pub block: usize,
    pub iteration: usize,
    pub vertices: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Largest `lambda` certified feasible.
    pub lambda: f64,
    /// Smallest `lambda` known infeasible (1 when `v` itself is feasible).
    pub lambda_max: f64,
    pub point: SinrVertex,
    pub power: PenalizedPower<f64>,
}

/// Slots optimized together, with their coefficient data.
struct Block<'a> {
    cfg: &'a ScenarioConfig<f64>,
    gains: &'a ExpectedGains<f64>,
    slots: Vec<usize>,
}

impl<'a> Block<'a> {
    fn k(&self) -> usize {
        self.cfg.num_sns()
    }

    fn l(&self) -> usize {
        self.cfg.num_aps()
    }

    fn m(&self) -> usize {
        self.slots.len()
    }

    fn dim(&self) -> usize {
        (self.k() + self.l()) * self.m()
    }

    fn objective(&self, v: &[f64]) -> f64 {
        let split = self.k() * self.m();
        let up: f64 = v[..split].iter().map(|x| x.max(0.0).ln_1p()).sum();
        let down: f64 = v[split..].iter().map(|x| x.max(0.0).ln_1p()).sum();
        std::f64::consts::LOG2_E * (self.cfg.weight_beta1 * up + self.cfg.weight_beta2 * down)
    }

    fn initial_vertex(&self) -> Vec<f64> {
        let (k, l, m) = (self.k(), self.l(), self.m());
        let c = self.cfg;
        let mut v = vec![0.0; self.dim()];
        for (j, &s) in self.slots.iter().enumerate() {
            for kk in 0..k {
                v[kk * m + j] = self.gains.h[kk][s] * c.p_max_sn / c.noise_power;
            }
            for ll in 0..l {
                v[k * m + ll * m + j] = self.gains.g[ll][s] * c.p_max_uav / c.noise_power;
            }
        }
        v
    }

    /// Min-power witness for the SINR targets of slot `s`, powers scaled by `p_max`.
    fn slot_witness(
        &self,
        s: usize,
        t_s: &[f64],
        t_u: &[f64],
    ) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let (k, l) = (self.k(), self.l());
        if t_s.iter().chain(t_u).all(|&t| t <= 0.0) {
            return Ok(Some((vec![0.0; k], vec![0.0; l])));
        }
        let c = self.cfg;
        let g = self.gains;
        let n0 = c.noise_power;
        let mut lp = LinearFeasibilityProblem::new(k + l);
        for j in 0..k + l {
            lp.set_bounds(j, 0.0, 1.0)?;
        }
        // rows divided by the target so every right-hand side is 1
        for kk in 0..k {
            let t = t_s[kk];
            if t <= 0.0 {
                continue;
            }
            let mut row = vec![0.0; k + l];
            for i in 0..k {
                row[i] = if i == kk {
                    g.h[kk][s] * c.p_max_sn / (n0 * t)
                } else {
                    -c.penalty_m * c.p_max_sn / n0
                };
            }
            for ll in 0..l {
                row[k + ll] = -g.f[s] * c.p_max_uav / n0;
            }
            lp.add_row(row, Sense::Ge, 1.0)?;
        }
        for ll in 0..l {
            let t = t_u[ll];
            if t <= 0.0 {
                continue;
            }
            let mut row = vec![0.0; k + l];
            for i in 0..l {
                row[k + i] = if i == ll {
                    g.g[ll][s] * c.p_max_uav / (n0 * t)
                } else {
                    -c.penalty_m * c.p_max_uav / n0
                };
            }
            for kk in 0..k {
                row[kk] = -g.h_g2g[kk][ll] * c.p_max_sn / n0;
            }
            lp.add_row(row, Sense::Ge, 1.0)?;
        }
        let res = feasibility_with_objective(&lp, &vec![1.0; k + l])?;
        Ok(res.witness.map(|w| (w[..k].to_vec(), w[k..].to_vec())))
    }

    /// Feasibility of the SINR point `t` (block layout); returns the penalized powers.
    fn witness(&self, t: &[f64]) -> Result<Option<Vec<(Vec<f64>, Vec<f64>)>>> {
        let (k, l, m) = (self.k(), self.l(), self.m());
        let mut out = Vec::with_capacity(m);
        for (j, &s) in self.slots.iter().enumerate() {
            let t_s: Vec<f64> = (0..k).map(|kk| t[kk * m + j]).collect();
            let t_u: Vec<f64> = (0..l).map(|ll| t[k * m + ll * m + j]).collect();
            match self.slot_witness(s, &t_s, &t_u)? {
                Some(w) => out.push(w),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn project(&self, v: &[f64], eps: f64) -> Result<(f64, f64, Vec<(Vec<f64>, Vec<f64>)>)> {
        let scaled = |lam: f64| -> Vec<f64> { v.iter().map(|x| lam * x).collect() };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut best = self
            .witness(&scaled(0.0))?
            .ok_or_else(|| Error::Invariant("zero SINR point reported infeasible".into()))?;
        while hi - lo > eps {
            let lam = 0.5 * (lo + hi);
            match self.witness(&scaled(lam))? {
                Some(w) => {
                    lo = lam;
                    best = w;
                }
                None => hi = lam,
            }
        }
        if hi == 1.0 {
            if let Some(w) = self.witness(v)? {
                return Ok((1.0, 1.0, w));
            }
        }
        Ok((lo, hi, best))
    }

    fn scatter(&self, w: &[(Vec<f64>, Vec<f64>)], into: &mut PenalizedPower<f64>) {
        for (j, &s) in self.slots.iter().enumerate() {
            for (kk, &u) in w[j].0.iter().enumerate() {
                into.p_s[kk][s] = u * self.cfg.p_max_sn;
            }
            for (ll, &u) in w[j].1.iter().enumerate() {
                into.p_u[ll][s] = u * self.cfg.p_max_uav;
            }
        }
    }
}

/// Initial vertex: every SINR at its noise-limited maximum.
pub fn initial_vertex(gains: &ExpectedGains<f64>, cfg: &ScenarioConfig<f64>) -> SinrVertex {
    let block = Block {
        cfg,
        gains,
        slots: (0..gains.slots()).collect(),
    };
    SinrVertex(block.initial_vertex())
}

/// Bisection on the ray `lambda * v` to the upper boundary of the feasible SINR set.
pub fn project_to_boundary(
    v: &SinrVertex,
    gains: &ExpectedGains<f64>,
    cfg: &ScenarioConfig<f64>,
    eps: f64,
) -> Result<Projection> {
    let block = Block {
        cfg,
        gains,
        slots: (0..gains.slots()).collect(),
    };
    if v.0.len() != block.dim() {
        return Err(Error::Dimension(format!(
            "vertex has {} entries, expected {}",
            v.0.len(),
            block.dim()
        )));
    }
    if v.0.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(eps > 0.0) {
        return Err(Error::Malformed("vertex must be finite and >= 0".into()));
    }
    let (lambda, lambda_max, w) = block.project(&v.0, eps)?;
    let mut power = PenalizedPower::zeros(cfg.num_sns(), cfg.num_aps(), gains.slots());
    block.scatter(&w, &mut power);
    Ok(Projection {
        lambda,
        lambda_max,
        point: SinrVertex(v.0.iter().map(|x| lambda * x).collect()),
        power,
    })
}

/// Vertex set of one polyblock with its incumbent.
#[derive(Debug, Clone)]
pub struct Polyblock {
    vertices: Vec<(u64, Vec<f64>, f64)>,
    next_id: u64,
    pub iteration: usize,
    pub best_value: f64,
    pub best_point: Vec<f64>,
}

impl Polyblock {
    fn new(v: Vec<f64>, value: f64) -> Self {
        let dim = v.len();
        Polyblock {
            vertices: vec![(0, v, value)],
            next_id: 1,
            iteration: 0,
            best_value: f64::NEG_INFINITY,
            best_point: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Index of the best vertex, lowest id first on ties.
    fn select(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, (id, _, f)) in self.vertices.iter().enumerate() {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (bid, _, bf) = &self.vertices[b];
                    if f > bf || (f == bf && id < bid) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn insert(&mut self, child: Vec<f64>, value: f64, prune: bool) {
        let dominated = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        if prune {
            if self.vertices.iter().any(|(_, w, _)| dominated(&child, w)) {
                return;
            }
            self.vertices.retain(|(_, w, _)| !dominated(w, &child));
        }
        self.vertices.push((self.next_id, child, value));
        self.next_id += 1;
    }
}

struct BlockResult {
    upper: f64,
    lower: f64,
    certified: bool,
    iterations: usize,
    witness: Vec<(Vec<f64>, Vec<f64>)>,
}

fn run_block(
    block: &Block,
    opts: &PoaOptions,
    trace: &mut Vec<PoaTraceRow>,
    tag: usize,
) -> Result<BlockResult> {
    let v1 = block.initial_vertex();
    let mut poly = Polyblock::new(v1.clone(), block.objective(&v1));
    let mut best_w = block
        .witness(&vec![0.0; block.dim()])?
        .ok_or_else(|| Error::Invariant("zero point infeasible".into()))?;
    poly.best_value = 0.0;
    let mut upper = block.objective(&v1);
    let mut certified = false;
    while poly.iteration < opts.max_iters && poly.len() <= opts.vertex_cap {
        let Some(sel) = poly.select() else {
            // every vertex was pruned by the incumbent: it is optimal
            upper = poly.best_value;
            certified = true;
            break;
        };
        poly.iteration += 1;
        let (_, v, f_v) = poly.vertices.swap_remove(sel);
        upper = f_v;
        let (lo, hi, w) = block.project(&v, opts.bisection_eps)?;
        let point: Vec<f64> = v.iter().map(|x| lo * x).collect();
        let f_point = block.objective(&point);
        if f_point > poly.best_value {
            poly.best_value = f_point;
            poly.best_point = point;
            best_w = w;
        }
        trace.push(PoaTraceRow {
            block: tag,
            iteration: poly.iteration,
            vertices: poly.len() + 1,
            upper_bound: upper,
            lower_bound: poly.best_value,
            lambda: lo,
        });
        if 1.0 - lo <= opts.eps || upper - poly.best_value <= 1e-12 * upper.abs().max(1.0) {
            certified = true;
            break;
        }
        // cut at the smallest known infeasible point on the ray
        for i in 0..v.len() {
            if v[i] <= 0.0 {
                continue;
            }
            let mut child = v.clone();
            child[i] = hi * v[i];
            if child[i] < SINR_FLOOR {
                child[i] = 0.0;
            }
            let f_c = block.objective(&child);
            if f_c > poly.best_value {
                poly.insert(child, f_c, opts.prune_dominated);
            }
        }
        let best = poly.best_value;
        poly.vertices.retain(|(_, _, f)| *f > best);
    }
    Ok(BlockResult {
        upper: upper.max(poly.best_value),
        lower: poly.best_value,
        certified,
        iterations: poly.iteration,
        witness: best_w,
    })
}

/// Full result of a polyblock run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaReport {
    pub solution: Solution<f64>,
    pub tilde: PenalizedPower<f64>,
    pub trace: Vec<PoaTraceRow>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub certified: bool,
}

impl PoaReport {
    pub fn gap(&self) -> f64 {
        (self.upper_bound - self.lower_bound).max(0.0)
    }
}

pub fn poa_solve(
    cfg: &ScenarioConfig<f64>,
    traj: &Trajectory<f64>,
    eps: f64,
    max_iters: usize,
) -> Result<Solution<f64>> {
    let opts = PoaOptions {
        eps,
        bisection_eps: eps,
        max_iters,
        ..Default::default()
    };
    Ok(poa_solve_with(cfg, traj, &opts)?.solution)
}

pub fn poa_solve_with(
    cfg: &ScenarioConfig<f64>,
    traj: &Trajectory<f64>,
    opts: &PoaOptions,
) -> Result<PoaReport> {
    let gains = expected_gains(cfg, traj)?;
    poa_solve_gains(cfg, traj, &gains, opts)
}

/// Polyblock solve with precomputed gains.
pub fn poa_solve_gains(
    cfg: &ScenarioConfig<f64>,
    traj: &Trajectory<f64>,
    gains: &ExpectedGains<f64>,
    opts: &PoaOptions,
) -> Result<PoaReport> {
    let (k, l, n) = (cfg.num_sns(), cfg.num_aps(), cfg.slots);
    let blocks: Vec<Vec<usize>> = if opts.per_slot {
        (0..n).map(|s| vec![s]).collect()
    } else {
        vec![(0..n).collect()]
    };
    let dim = (k + l) * blocks[0].len();
    if dim > opts.dimension_guard {
        return Err(Error::DimensionGuard {
            dim,
            limit: opts.dimension_guard,
        });
    }
    let mut tilde = PenalizedPower::zeros(k, l, n);
    let mut trace = Vec::new();
    let (mut upper, mut lower, mut iterations) = (0.0, 0.0, 0);
    let mut certified = true;
    for slots in blocks {
        let tag = if opts.per_slot { slots[0] + 1 } else { 0 };
        let block = Block { cfg, gains, slots };
        let r = run_block(&block, opts, &mut trace, tag)?;
        block.scatter(&r.witness, &mut tilde);
        upper += r.upper;
        lower += r.lower;
        iterations += r.iterations;
        certified &= r.certified;
    }
    let threshold = opts.activity_threshold * cfg.p_max_sn.min(cfg.p_max_uav);
    let (schedule, power) = recover_schedule(&tilde, threshold)?;
    let rates = evaluate_with_gains(cfg, gains, &schedule, &power)?;
    let penalized = evaluate_penalized_objective(cfg, gains, &tilde);
    let residual = max_residual(cfg, traj, &schedule, &power)?;
    let mut notes = vec![format!("penalized objective at witness {penalized:.12e}")];
    if !certified {
        notes.push("iteration or vertex cap reached before the tolerance".into());
    }
    let solution = Solution {
        trajectory: traj.clone(),
        schedule,
        power,
        objective: rates.objective,
        rates,
        diagnostics: Diagnostics {
            solver: "poa".into(),
            iterations,
            converged: certified,
            history: trace
                .iter()
                .filter(|r| r.block <= 1)
                .map(|r| r.lower_bound)
                .collect(),
            relaxed_objective: None,
            upper_bound: Some(upper),
            max_residual: residual,
            notes,
        },
    };
    Ok(PoaReport {
        solution,
        tilde,
        trace,
        upper_bound: upper,
        lower_bound: lower,
        certified,
    })
}

/// Turns penalized powers into a binary schedule; at most one transmitter per side and slot.
pub fn recover_schedule(
    tilde: &PenalizedPower<f64>,
    activity_threshold: f64,
) -> Result<(Schedule<f64>, PowerAllocation<f64>)> {
    let k = tilde.p_s.len();
    let l = tilde.p_u.len();
    let n = tilde.p_s.first().or(tilde.p_u.first()).map_or(0, Vec::len);
    let mut sched = Schedule::zeros(k, l, n, ScheduleMode::Binary);
    let mut power = PowerAllocation::zeros(k, n);
    for i in 0..n {
        let active = |rows: &[Vec<f64>]| -> Vec<usize> {
            (0..rows.len())
                .filter(|&r| rows[r][i] > activity_threshold)
                .collect()
        };
        let act_s = active(&tilde.p_s);
        if act_s.len() > 1 {
            return Err(Error::MultipleActive {
                slot: i + 1,
                side: "sensor-node",
                count: act_s.len(),
                values: act_s.iter().map(|&r| tilde.p_s[r][i]).collect(),
            });
        }
        let act_u = active(&tilde.p_u);
        if act_u.len() > 1 {
            return Err(Error::MultipleActive {
                slot: i + 1,
                side: "access-point",
                count: act_u.len(),
                values: act_u.iter().map(|&r| tilde.p_u[r][i]).collect(),
            });
        }
        if let Some(&kk) = act_s.first() {
            sched.y[kk][i] = 1.0;
            power.p_s[kk][i] = tilde.p_s[kk][i];
        }
        if let Some(&ll) = act_u.first() {
            sched.x[ll][i] = 1.0;
            power.p_u[i] = tilde.p_u[ll][i];
        }
    }
    Ok((sched, power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::small_instance;
    use proptest::prelude::*;

    fn setup(
        k: usize,
        l: usize,
        n: usize,
    ) -> (ScenarioConfig<f64>, Trajectory<f64>, ExpectedGains<f64>) {
        let cfg = small_instance(k, l, n);
        let t = Trajectory::straight_line(&cfg);
        let g = expected_gains(&cfg, &t).unwrap();
        (cfg, t, g)
    }

    fn unit_gains() -> ExpectedGains<f64> {
        ExpectedGains {
            h: vec![vec![1e-10]],
            g: vec![vec![1e-10]],
            f: vec![1e-10],
            h_g2g: vec![vec![1e-12]],
        }
    }

    #[test]
    fn initial_vertex_entries() {
        let (mut cfg, _, _) = setup(1, 1, 1);
        let g = unit_gains();
        let v = initial_vertex(&g, &cfg);
        assert!((v.0[0] - 1000.0).abs() < 1e-9);
        assert!(v.0.iter().all(|&x| x > 0.0));
        cfg.noise_power *= 2.0;
        let v2 = initial_vertex(&g, &cfg);
        assert!((v2.0[0] - 500.0).abs() < 1e-9 && (v2.0[1] - v.0[1] / 2.0).abs() < 1e-9);
    }

    /// Minimal powers for all-active targets of one slot by a direct linear solve.
    fn min_power_oracle(a: &[f64], cross: &[Vec<f64>], t: &[f64]) -> Option<Vec<f64>> {
        // x_i = (t_i / a_i) (sum_j cross[i][j] x_j + 1), i.e. (I - B) x = c
        let d = a.len();
        let mut m = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = if i == j {
                    1.0
                } else {
                    -t[i] / a[i] * cross[i][j]
                };
            }
            m[i][d] = t[i] / a[i];
        }
        for c in 0..d {
            let p = (c..d).max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())?;
            m.swap(c, p);
            let piv = m[c][c];
            if piv.abs() < 1e-300 {
                return None;
            }
            for r in 0..d {
                if r != c {
                    let f = m[r][c] / piv;
                    for q in c..=d {
                        m[r][q] -= f * m[c][q];
                    }
                }
            }
        }
        let x: Vec<f64> = (0..d).map(|i| m[i][d] / m[i][i]).collect();
        (x.iter().all(|&v| v >= -1e-12 && v <= 1.0 + 1e-12)).then_some(x)
    }

    #[test]
    fn slot_feasibility_matches_linear_solve() {
        let (mut cfg, _, g) = setup(1, 1, 1);
        cfg.penalty_m = 1.0;
        let block = Block {
            cfg: &cfg,
            gains: &g,
            slots: vec![0],
        };
        let n0 = cfg.noise_power;
        let a = [g.h[0][0] * 0.1 / n0, g.g[0][0] * 0.1 / n0];
        let cross = vec![
            vec![0.0, g.f[0] * 0.1 / n0],
            vec![g.h_g2g[0][0] * 0.1 / n0, 0.0],
        ];
        for &fs in &[0.01, 0.1, 0.3, 0.5, 0.9, 0.99] {
            for &fu in &[0.01, 0.2, 0.6, 0.95] {
                let t = [fs * a[0], fu * a[1]];
                let lp = block.slot_witness(0, &t[..1], &t[1..]).unwrap();
                let oracle = min_power_oracle(&a, &cross, &t);
                assert_eq!(lp.is_some(), oracle.is_some(), "{fs} {fu}");
                if let (Some((u, w)), Some(x)) = (lp, oracle) {
                    assert!((u[0] - x[0]).abs() < 1e-7 && (w[0] - x[1]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn saturated_uplink_target_forces_full_power() {
        let (cfg, _, g) = setup(1, 1, 1);
        let block = Block {
            cfg: &cfg,
            gains: &g,
            slots: vec![0],
        };
        let a_s = g.h[0][0] * cfg.p_max_sn / cfg.noise_power;
        let (u, w) = block.slot_witness(0, &[a_s], &[0.0]).unwrap().unwrap();
        assert!((u[0] - 1.0).abs() < 1e-9 && w[0].abs() < 1e-12);
        assert!(block.slot_witness(0, &[a_s], &[1e-3]).unwrap().is_none());
        // brute force at 1e-4 W: only (p_max, 0) meets the target
        let mut hits = Vec::new();
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (ps, pu) = (i as f64 * 1e-4, j as f64 * 1e-4);
                let sinr = g.h[0][0] * ps / (g.f[0] * pu + cfg.noise_power);
                if sinr >= a_s * (1.0 - 1e-12) {
                    hits.push((i, j));
                }
            }
        }
        assert_eq!(hits, vec![(1000, 0)]);
    }

    #[test]
    fn projection_examples() {
        let (cfg, _, g) = setup(1, 1, 1);
        let zero = SinrVertex(vec![0.0, 0.0]);
        let p = project_to_boundary(&zero, &g, &cfg, 1e-2).unwrap();
        assert_eq!(p.lambda, 1.0);
        let v = initial_vertex(&g, &cfg);
        let p1 = project_to_boundary(&v, &g, &cfg, 1e-2).unwrap();
        assert!(p1.lambda < 1.0 && p1.lambda_max - p1.lambda <= 1e-2);
        // the projected point is achievable, the cut point is not (grid at 1e-4 W)
        let sinr = |ps: f64, pu: f64| {
            (
                g.h[0][0] * ps / (g.f[0] * pu + cfg.noise_power),
                g.g[0][0] * pu / (g.h_g2g[0][0] * ps + cfg.noise_power),
            )
        };
        let reach = |t: (f64, f64)| {
            (0..=1000).any(|i| {
                (0..=1000).any(|j| {
                    let s = sinr(i as f64 * 1e-4, j as f64 * 1e-4);
                    s.0 >= t.0 && s.1 >= t.1
                })
            })
        };
        let lo = (p1.lambda * v.0[0], p1.lambda * v.0[1]);
        let hi = (p1.lambda_max * v.0[0], p1.lambda_max * v.0[1]);
        assert!(reach((lo.0 * 0.999, lo.1 * 0.999)));
        assert!(!reach((hi.0 * 1.001, hi.1 * 1.001)));
        // doubling v halves lambda within the bisection resolution
        let v2 = SinrVertex(v.0.iter().map(|x| 2.0 * x).collect());
        let p2 = project_to_boundary(&v2, &g, &cfg, 1e-3).unwrap();
        let p1f = project_to_boundary(&v, &g, &cfg, 1e-3).unwrap();
        assert!((2.0 * p2.lambda - p1f.lambda).abs() <= 3e-3);
    }

    #[test]
    fn decoupled_instance_uses_full_power() {
        let (cfg, t, mut g) = setup(1, 1, 1);
        g.f[0] = 1e-40;
        g.h_g2g[0][0] = 1e-40;
        let r = poa_solve_gains(&cfg, &t, &g, &PoaOptions::default()).unwrap();
        let want = (1.0 + g.h[0][0] * 0.1 / cfg.noise_power).log2()
            + (1.0 + g.g[0][0] * 0.1 / cfg.noise_power).log2();
        assert!(r.certified);
        assert!(r.upper_bound >= want - 1e-9);
        assert!(r.solution.objective >= want - r.gap() - 1e-9);
        assert!(r.solution.objective <= want + 1e-9);
    }

    #[test]
    fn recover_examples() {
        let zero = PenalizedPower::zeros(3, 2, 2);
        let (s, p) = recover_schedule(&zero, 1e-7).unwrap();
        assert!(s.x.iter().chain(&s.y).flatten().all(|&v| v == 0.0));
        assert!(p
            .p_u
            .iter()
            .chain(p.p_s.iter().flatten())
            .all(|&v| v == 0.0));
        let mut t = zero.clone();
        t.p_s[2][1] = 0.1;
        let (s, p) = recover_schedule(&t, 1e-7).unwrap();
        assert_eq!(s.y[2][1], 1.0);
        assert_eq!(p.p_s[2][1], 0.1);
        t.p_s[0][1] = 0.05;
        t.p_s[2][1] = 0.05;
        match recover_schedule(&t, 1e-7) {
            Err(Error::MultipleActive { slot, count, .. }) => assert_eq!((slot, count), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_guard() {
        let (cfg, t, _) = setup(2, 2, 5);
        let opts = PoaOptions {
            per_slot: false,
            ..Default::default()
        };
        assert!(matches!(
            poa_solve_with(&cfg, &t, &opts),
            Err(Error::DimensionGuard { dim: 20, limit: 16 })
        ));
    }

    #[test]
    fn joint_and_per_slot_agree() {
        let (cfg, t, _) = setup(1, 1, 2);
        let a = poa_solve_with(&cfg, &t, &PoaOptions::default()).unwrap();
        let b = poa_solve_with(
            &cfg,
            &t,
            &PoaOptions {
                per_slot: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(a.certified && b.certified);
        let tol = a.gap() + b.gap() + 1e-9;
        assert!((a.solution.objective - b.solution.objective).abs() <= tol);
    }

    #[test]
    fn bounds_bracket_objective_and_trace_is_monotone() {
        let (cfg, t, _) = setup(2, 2, 2);
        let r = poa_solve_with(&cfg, &t, &PoaOptions::default()).unwrap();
        assert!(r.certified);
        assert!(r.lower_bound <= r.solution.objective + 1e-9);
        assert!(r.solution.objective <= r.upper_bound + 1e-9);
        for w in r.trace.windows(2) {
            if w[0].block == w[1].block {
                assert!(w[1].lower_bound >= w[0].lower_bound);
                assert!(w[1].upper_bound <= w[0].upper_bound + 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // feasibility is downward closed along every ray
        #[test]
        fn feasibility_monotone_in_lambda(fs in 0.0f64..1.0, fu in 0.0f64..1.0, f2 in 0.0f64..1.0, l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
            let (mut cfg, _, g) = setup(2, 1, 1);
            cfg.penalty_m = 1.0;
            let block = Block { cfg: &cfg, gains: &g, slots: vec![0] };
            let v = initial_vertex(&g, &cfg).0;
            let dir = [fs * v[0], f2 * v[1], fu * v[2]];
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let at = |lam: f64| block.witness(&dir.iter().map(|x| lam * x).collect::<Vec<_>>()).unwrap().is_some();
            if at(hi) {
                prop_assert!(at(lo));
            }
        }

        #[test]
        fn pruning_does_not_change_result(seed in 0u64..1000) {
            let (mut cfg, t, _) = setup(1, 1, 1);
            cfg.weight_beta2 = 0.2 + (seed % 7) as f64 * 0.3;
            let on = poa_solve_with(&cfg, &t, &PoaOptions::default()).unwrap();
            let off = poa_solve_with(&cfg, &t, &PoaOptions { prune_dominated: false, ..Default::default() }).unwrap();
            prop_assert!((on.solution.objective - off.solution.objective).abs() <= on.gap() + off.gap() + 1e-9);
            prop_assert_eq!(on.trace[0].upper_bound, off.trace[0].upper_bound);
        }
    }
}
