//! Box-constrained linear programs `min cᵀx  s.t.  Ax = b, l ≤ x ≤ u`.
//!
//! Two routes: a primal-dual hybrid gradient iteration for anything sized,
//! and an exact rational simplex for small feasibility questions.

pub mod exact;

use serde::Serialize;

/// Sparse equality-constrained LP over a box.
#[derive(Debug, Clone, Default)]
pub struct BoxLp {
    pub cost: Vec<f64>,
    /// Constraint rows as `(column, coefficient)` lists.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    /// Best constraint violation stayed above the feasibility threshold.
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpOutcome {
    pub x: Vec<f64>,
    pub primal_objective: f64,
    pub dual_bound: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub status: LpStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct PdhgOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    /// Violation above which an exhausted run is declared infeasible.
    pub infeasible_above: f64,
}

impl Default for PdhgOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            gap_tol: 1e-8,
            feas_tol: 1e-10,
            infeasible_above: 1e-8,
        }
    }
}

impl BoxLp {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, a)| a * x[j]).sum();
        }
    }

    fn apply_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (yi, row) in y.iter().zip(&self.rows) {
            for &(j, a) in row {
                out[j] += a * yi;
            }
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.rows.len()];
        self.apply(x, &mut ax);
        ax.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Lagrangian lower bound `bᵀy + Σ min(r_i l_i, r_i u_i)`, `r = c − Aᵀy`.
    fn dual_bound(&self, y: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply_t(y, scratch);
        let mut v: f64 = self.rhs.iter().zip(y).map(|(b, yi)| b * yi).sum();
        for i in 0..self.num_vars() {
            let r = self.cost[i] - scratch[i];
            v += (r * self.lower[i]).min(r * self.upper[i]);
        }
        v
    }

    fn operator_norm(&self) -> f64 {
        // power iteration on AᵀA
        let n = self.num_vars();
        let m = self.rows.len();
        if m == 0 || n == 0 {
            return 0.0;
        }
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut av = vec![0.0; m];
        let mut atav = vec![0.0; n];
        let mut est = 0.0;
        for _ in 0..100 {
            self.apply(&v, &mut av);
            self.apply_t(&av, &mut atav);
            let norm = atav.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v.iter_mut().zip(&atav).for_each(|(vi, a)| *vi = a / norm);
            if (norm - est).abs() <= 1e-9 * norm {
                est = norm;
                break;
            }
            est = norm;
        }
        est.sqrt()
    }

    /// Primal-dual hybrid gradient (Chambolle–Pock) iteration.
    pub fn solve_pdhg(&self, opts: &PdhgOptions) -> LpOutcome {
        let n = self.num_vars();
        let m = self.rows.len();
        let clamp = |i: usize, v: f64| v.max(self.lower[i]).min(self.upper[i]);
        let mut x: Vec<f64> = (0..n).map(|i| clamp(i, 0.0)).collect();
        let mut y = vec![0.0; m];
        let norm = self.operator_norm();
        let cmax = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let (tau, sigma) = if norm > 0.0 {
            (0.95 / norm, 0.95 / norm)
        } else {
            // no coupling: a single long step reaches the optimal vertex
            let width = (0..n).map(|i| self.upper[i] - self.lower[i]).fold(0.0f64, f64::max);
            (if cmax > 0.0 { 2.0 * width.max(1.0) / cmax } else { 1.0 }, 0.0)
        };
        let mut aty = vec![0.0; n];
        let mut ax = vec![0.0; m];
        let mut x_bar = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut best_x = x.clone();
        let mut best_viol = self.violation(&x);
        let mut best_gap = f64::INFINITY;
        let mut iterations = 0;
        for it in 1..=opts.max_iter {
            iterations = it;
            self.apply_t(&y, &mut aty);
            for i in 0..n {
                let nx = clamp(i, x[i] - tau * (self.cost[i] - aty[i]));
                x_bar[i] = 2.0 * nx - x[i];
                x[i] = nx;
            }
            self.apply(&x_bar, &mut ax);
            for k in 0..m {
                y[k] += sigma * (self.rhs[k] - ax[k]);
            }
            if it % 10 == 0 || it == 1 || m == 0 {
                let viol = self.violation(&x);
                let primal = self.objective(&x);
                let dual = self.dual_bound(&y, &mut scratch);
                let gap = (primal - dual).abs();
                let scale = 1.0 + primal.abs() + dual.abs();
                if viol < best_viol || (viol <= opts.feas_tol && gap < best_gap) {
                    best_viol = viol;
                    best_gap = gap;
                    best_x.copy_from_slice(&x);
                }
                let done_feas = viol <= opts.feas_tol;
                let done_gap = cmax == 0.0 || gap <= opts.gap_tol * scale;
                if done_feas && done_gap {
                    return LpOutcome {
                        primal_objective: primal,
                        dual_bound: dual,
                        max_violation: viol,
                        x: x.clone(),
                        iterations: it,
                        status: LpStatus::Optimal,
                    };
                }
            }
        }
        let dual = self.dual_bound(&y, &mut scratch);
        let status = if best_viol > opts.infeasible_above {
            LpStatus::Infeasible
        } else {
            LpStatus::IterationLimit
        };
        LpOutcome {
            primal_objective: self.objective(&best_x),
            dual_bound: dual,
            max_violation: best_viol,
            x: best_x,
            iterations,
            status,
        }
    }
}
