//! Log-barrier Newton method for maximizing a smooth concave function over
//! box, linear and convex quadratic constraints.

use crate::error::{Error, Result};
use crate::kernel::linalg::{EnvelopeCholesky, SymMatrix};

/// Smooth concave objective.
pub trait ConcaveObjective {
    fn dim(&self) -> usize;

    fn value(&self, z: &[f64]) -> f64;

    /// Returns the value and accumulates the gradient into `grad` and the
    /// Hessian into `hess`; both arrive zeroed.
    fn evaluate(&self, z: &[f64], grad: &mut [f64], hess: &mut SymMatrix) -> f64;
}

/// Sparse `a . z <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIneq {
    pub a: Vec<(usize, f64)>,
    pub b: f64,
}

/// `sum_r (a_r . z + b_r)^2 <= c` with sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadIneq {
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
    pub c: f64,
}

impl LinearIneq {
    fn slack(&self, z: &[f64]) -> f64 {
        self.b - self.a.iter().map(|&(j, v)| v * z[j]).sum::<f64>()
    }
}

impl QuadIneq {
    fn residuals<'a>(&'a self, z: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.rows
            .iter()
            .map(move |(a, b)| a.iter().map(|&(j, v)| v * z[j]).sum::<f64>() + b)
    }

    fn slack(&self, z: &[f64]) -> f64 {
        self.c - self.residuals(z).map(|r| r * r).sum::<f64>()
    }
}

/// Feasible region of a [`maximize_concave`] call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub linear: Vec<LinearIneq>,
    pub quadratic: Vec<QuadIneq>,
}

impl ConstraintSet {
    pub fn with_box(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        ConstraintSet {
            lower,
            upper,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn barrier_count(&self) -> usize {
        let finite = |v: &&f64| v.is_finite();
        self.lower.iter().filter(finite).count()
            + self.upper.iter().filter(finite).count()
            + self.linear.len()
            + self.quadratic.len()
    }

    /// Smallest constraint slack at `z` (negative when infeasible).
    pub fn min_slack(&self, z: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for (j, &v) in z.iter().enumerate() {
            if self.lower[j].is_finite() {
                m = m.min(v - self.lower[j]);
            }
            if self.upper[j].is_finite() {
                m = m.min(self.upper[j] - v);
            }
        }
        for c in &self.linear {
            m = m.min(c.slack(z));
        }
        for q in &self.quadratic {
            m = m.min(q.slack(z));
        }
        m
    }

    /// Largest violation, each constraint relative to its own scale.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in z.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for c in &self.linear {
            let scale = 1.0 + c.b.abs() + c.a.iter().map(|&(j, v)| (v * z[j]).abs()).sum::<f64>();
            worst = worst.max(-c.slack(z) / scale);
        }
        for q in &self.quadratic {
            worst = worst.max(-q.slack(z) / (1.0 + q.c.abs()));
        }
        worst
    }

    fn strictly_feasible(&self, z: &[f64]) -> bool {
        z.iter().all(|v| v.is_finite()) && self.min_slack(z) > 0.0
    }

    /// Barrier value `-sum log(slack)`; infinite outside the interior.
    fn barrier(&self, z: &[f64]) -> f64 {
        let mut phi = 0.0;
        let mut push = |s: f64| {
            if s > 0.0 {
                phi -= s.ln();
            } else {
                phi = f64::INFINITY;
            }
        };
        for (j, &v) in z.iter().enumerate() {
            if self.lower[j].is_finite() {
                push(v - self.lower[j]);
            }
            if self.upper[j].is_finite() {
                push(self.upper[j] - v);
            }
        }
        for c in &self.linear {
            push(c.slack(z));
        }
        for q in &self.quadratic {
            push(q.slack(z));
        }
        phi
    }

    /// Adds barrier gradient and Hessian.
    fn barrier_derivatives(&self, z: &[f64], grad: &mut [f64], hess: &mut SymMatrix) {
        for (j, &v) in z.iter().enumerate() {
            if self.lower[j].is_finite() {
                let s = v - self.lower[j];
                grad[j] -= 1.0 / s;
                hess.add(j, j, 1.0 / (s * s));
            }
            if self.upper[j].is_finite() {
                let s = self.upper[j] - v;
                grad[j] += 1.0 / s;
                hess.add(j, j, 1.0 / (s * s));
            }
        }
        for c in &self.linear {
            let s = c.slack(z);
            for &(j, v) in &c.a {
                grad[j] += v / s;
            }
            hess.add_outer(&c.a, 1.0 / (s * s));
        }
        let mut dense_grad: Vec<(usize, f64)> = Vec::new();
        for q in &self.quadratic {
            let s = q.slack(z);
            // slack gradient: -2 sum r_i a_i
            dense_grad.clear();
            for ((a, _), r) in q.rows.iter().zip(q.residuals(z)) {
                for &(j, v) in a {
                    dense_grad.push((j, -2.0 * r * v));
                }
                hess.add_outer(a, 2.0 / s);
            }
            merge_sparse(&mut dense_grad);
            for &(j, v) in &dense_grad {
                grad[j] -= v / s;
            }
            hess.add_outer(&dense_grad, 1.0 / (s * s));
        }
    }
}

fn merge_sparse(v: &mut Vec<(usize, f64)>) {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for &(j, x) in v.iter() {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += x,
            _ => out.push((j, x)),
        }
    }
    *v = out;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Target duality gap `m / t` in objective units.
    pub tol: f64,
    pub t0: f64,
    pub mu: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            tol: 1e-6,
            t0: 1.0,
            mu: 10.0,
            max_newton: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// Duality-gap target reached before the Newton budget ran out.
    pub converged: bool,
    pub newton_steps: usize,
    /// Bound on the optimality gap of the last centered point.
    pub gap: f64,
}

/// Maximizes `obj` over `cons` from a strictly feasible `start`.
///
/// Every iterate is strictly feasible; the best objective value seen is returned.
pub fn maximize_concave(
    obj: &dyn ConcaveObjective,
    cons: &ConstraintSet,
    start: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierResult> {
    let n = obj.dim();
    if cons.dim() != n || start.len() != n || cons.upper.len() != n {
        return Err(Error::Malformed(
            "dimension mismatch in convex program".into(),
        ));
    }
    if !(opts.tol > 0.0 && opts.t0 > 0.0 && opts.mu > 1.0) {
        return Err(Error::Malformed("barrier options".into()));
    }
    if !cons.strictly_feasible(start) {
        return Err(Error::InfeasibleStart(format!(
            "minimum slack {:.3e}",
            cons.min_slack(start)
        )));
    }
    let m = cons.barrier_count().max(1) as f64;
    let mut z = start.to_vec();
    let mut best = z.clone();
    let mut best_val = obj.value(&z);
    if !best_val.is_finite() {
        return Err(Error::InfeasibleStart(
            "objective not finite at start".into(),
        ));
    }
    let mut t = opts.t0;
    let mut steps = 0;
    let mut grad = vec![0.0; n];
    let mut hess = SymMatrix::zeros(n);
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut converged = false;
    let mut gap = f64::INFINITY;
    'outer: loop {
        // centering: minimize t * (-f) + barrier
        loop {
            if steps >= opts.max_newton {
                break 'outer;
            }
            steps += 1;
            grad.iter_mut().for_each(|g| *g = 0.0);
            hess.clear();
            let f = obj.evaluate(&z, &mut grad, &mut hess);
            for g in grad.iter_mut() {
                *g *= -t;
            }
            for v in hess.data.iter_mut() {
                *v *= -t;
            }
            cons.barrier_derivatives(&z, &mut grad, &mut hess);
            let phi0 = -t * f + cons.barrier(&z);

            let scale = hess.max_diag().max(1e-300);
            let mut shift = 0.0;
            let chol = loop {
                if let Some(c) = EnvelopeCholesky::factor(&hess, shift) {
                    break Some(c);
                }
                shift = if shift == 0.0 {
                    1e-12 * scale
                } else {
                    shift * 10.0
                };
                if shift > 1e3 * scale {
                    break None;
                }
            };
            let Some(chol) = chol else {
                break 'outer;
            };
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            chol.solve(&mut dir);
            let decrement: f64 = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
            if !decrement.is_finite() {
                break 'outer;
            }
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let mut step = 1.0;
            let accepted = loop {
                for j in 0..n {
                    trial[j] = z[j] + step * dir[j];
                }
                if cons.strictly_feasible(&trial) {
                    let phi = -t * obj.value(&trial) + cons.barrier(&trial);
                    if phi.is_finite() && phi <= phi0 - 0.25 * step * decrement {
                        break true;
                    }
                }
                step *= 0.5;
                if step < 1e-14 {
                    break false;
                }
            };
            if !accepted {
                break;
            }
            z.copy_from_slice(&trial);
            let v = obj.value(&z);
            if v > best_val {
                best_val = v;
                best.copy_from_slice(&z);
            }
        }
        gap = m / t;
        if gap <= opts.tol {
            converged = true;
            break;
        }
        t *= opts.mu;
    }
    Ok(BarrierResult {
        point: best,
        value: best_val,
        converged,
        newton_steps: steps,
        gap,
    })
}
