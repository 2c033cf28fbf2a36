//! Dense two-phase simplex with Bland's rule for small linear programs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Box-bounded linear system `lower <= z <= upper`, `a_i . z (sense) b_i`.
///
/// Lower bounds must be finite; upper bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFeasibilityProblem {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LinearRow>,
}

impl LinearFeasibilityProblem {
    /// `n` variables, each bounded to `[0, +inf)`.
    pub fn new(n: usize) -> Self {
        LinearFeasibilityProblem {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> Result<()> {
        if j >= self.num_vars() {
            return Err(Error::Malformed(format!("variable {j} out of range")));
        }
        if !lower.is_finite() || upper.is_nan() || lower > upper {
            return Err(Error::Malformed(format!(
                "bounds [{lower}, {upper}] on variable {j}"
            )));
        }
        self.lower[j] = lower;
        self.upper[j] = upper;
        Ok(())
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::Malformed(format!(
                "row has {} coefficients for {} variables",
                coeffs.len(),
                self.num_vars()
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Malformed("non-finite row entry".into()));
        }
        self.rows.push(LinearRow { coeffs, sense, rhs });
        Ok(())
    }

    /// Largest violation of a row or bound, each row measured relative to
    /// `1 + |b| + sum |a_j z_j|`.
    pub fn max_relative_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in z.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for r in &self.rows {
            let (mut lhs, mut scale) = (0.0, 1.0 + r.rhs.abs());
            for (a, v) in r.coeffs.iter().zip(z) {
                lhs += a * v;
                scale += (a * v).abs();
            }
            let excess = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(excess / scale);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Vec<f64>>,
}

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost . x` over columns with `allowed[j]`; returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool> {
        let cost_scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        for _ in 0..MAX_PIVOTS {
            let mut entering = None;
            for j in 0..self.width {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                let mut mag = cost[j].abs();
                for (i, row) in self.rows.iter().enumerate() {
                    let t = cost[self.basis[i]] * row[j];
                    rc -= t;
                    mag += t.abs();
                }
                if rc < -1e-12 * cost_scale.max(mag) {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, c);
        }
        Err(Error::Invariant("simplex pivot limit reached".into()))
    }
}

/// Minimizes `c . z` subject to the problem's rows and bounds.
pub fn solve_lp(prob: &LinearFeasibilityProblem, c: &[f64]) -> Result<LpOutcome> {
    let n = prob.num_vars();
    if c.len() != n || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Malformed("objective length or values".into()));
    }
    // shift to z' = z - lower >= 0 and turn finite upper bounds into rows
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for r in &prob.rows {
        let shift: f64 = r.coeffs.iter().zip(&prob.lower).map(|(a, l)| a * l).sum();
        rows.push((r.coeffs.clone(), r.sense, r.rhs - shift));
    }
    for j in 0..n {
        if prob.upper[j].is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Sense::Le, prob.upper[j] - prob.lower[j]));
        }
    }
    for row in &mut rows {
        if row.2 < 0.0 {
            for v in &mut row.0 {
                *v = -*v;
            }
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n + n_slack + n_art;
    let mut tab = Tableau {
        rows: vec![vec![0.0; width + 1]; m],
        basis: vec![0; m],
        width,
    };
    let (mut si, mut ai) = (n, n + n_slack);
    for (i, (a, sense, b)) in rows.iter().enumerate() {
        tab.rows[i][..n].copy_from_slice(a);
        tab.rows[i][width] = *b;
        match sense {
            Sense::Le => {
                tab.rows[i][si] = 1.0;
                tab.basis[i] = si;
                si += 1;
            }
            Sense::Ge => {
                tab.rows[i][si] = -1.0;
                si += 1;
                tab.rows[i][ai] = 1.0;
                tab.basis[i] = ai;
                ai += 1;
            }
            Sense::Eq => {
                tab.rows[i][ai] = 1.0;
                tab.basis[i] = ai;
                ai += 1;
            }
        }
    }
    let is_art = |j: usize| j >= n + n_slack;
    if n_art > 0 {
        let cost: Vec<f64> = (0..width)
            .map(|j| if is_art(j) { 1.0 } else { 0.0 })
            .collect();
        let allowed = vec![true; width];
        tab.optimize(&cost, &allowed)?;
        let b_scale = rows.iter().fold(1.0f64, |a, r| a.max(r.2.abs()));
        let infeas: f64 = (0..m)
            .filter(|&i| is_art(tab.basis[i]))
            .map(|i| tab.rhs(i))
            .sum();
        if infeas > 1e-9 * b_scale {
            return Ok(LpOutcome::Infeasible);
        }
        // drive zero-level artificials out of the basis
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art(tab.basis[i]) {
                let col = (0..n + n_slack)
                    .filter(|j| !tab.basis.contains(j))
                    .max_by(|&a, &b| {
                        tab.rows[i][a]
                            .abs()
                            .partial_cmp(&tab.rows[i][b].abs())
                            .unwrap()
                    });
                match col {
                    Some(j) if tab.rows[i][j].abs() > PIVOT_TOL => tab.pivot(i, j),
                    _ => {
                        // redundant row
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(c);
    let allowed: Vec<bool> = (0..width).map(|j| !is_art(j)).collect();
    if !tab.optimize(&cost, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = prob.lower.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(i).max(0.0);
        }
    }
    for j in 0..n {
        x[j] = x[j].clamp(prob.lower[j], prob.upper[j]);
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

/// Decides feasibility; a witness is returned only if it satisfies every row
/// to `1e-9` relative to the row's magnitude.
pub fn check_linear_feasibility(prob: &LinearFeasibilityProblem) -> Result<Feasibility> {
    let zero = vec![0.0; prob.num_vars()];
    feasibility_with_objective(prob, &zero)
}

/// Like [`check_linear_feasibility`] but the witness minimizes `c . z`.
pub fn feasibility_with_objective(
    prob: &LinearFeasibilityProblem,
    c: &[f64],
) -> Result<Feasibility> {
    match solve_lp(prob, c)? {
        LpOutcome::Optimal { x, .. } if prob.max_relative_violation(&x) <= 1e-9 => {
            Ok(Feasibility {
                feasible: true,
                witness: Some(x),
            })
        }
        LpOutcome::Unbounded => Err(Error::Malformed("objective unbounded below".into())),
        _ => Ok(Feasibility {
            feasible: false,
            witness: None,
        }),
    }
}
