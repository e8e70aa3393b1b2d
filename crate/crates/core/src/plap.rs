//! The nonlocal p-Laplacian Dirichlet problem and continuation `p ↓ 1`.
//!
//! `F_p(u) = (1/2p) Σ_{x,y∈Ω_m} ν(x) m_x(y) |u_ψ(y) − u_ψ(x)|^p` is minimised
//! over the values on `Ω` by damped Newton on the smoothed pair energy
//! `E_ε(Δ) = ((Δ² + ε²)^{p/2} − ε^p)/p`, `ε = 1e-12`, so gradient, Hessian
//! and line search all see one smooth convex function.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::{PairField, ScalarField};
use crate::error::{Error, Result};
use crate::poincare::{self, ShellMetric};
use crate::problem::{relaxed_energy, DomainProblem};

/// Smoothing scale of the pair energy.
pub const KINK_EPS: f64 = 1e-12;
/// Increments above this get the exact sign in the extracted calibration.
pub const SIGN_THRESHOLD: f64 = 1e-6;
const DENSE_LIMIT: usize = 1500;
/// Residual accepted once Newton stops making progress.
const STALL_TOL: f64 = 1e-6;
const STALL_WINDOW: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PTraceEntry {
    pub p: f64,
    /// `F_p` at the iterate.
    pub energy: f64,
    /// `J_ψ` at the iterate.
    pub j_value: f64,
    /// `max_x |ν(x) R(x)|`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PSolveOptions {
    /// Gradient tolerance relative to the natural gradient scale.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting values on `Ω`; the `p = 2` solution when absent.
    pub start: Option<Vec<f64>>,
    /// Estimate the Poincaré constant at `q = p` and warn when it is tiny.
    pub poincare_advisory: bool,
}

impl Default for PSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            start: None,
            poincare_advisory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PSolution {
    /// Values on `Ω`.
    pub u: Vec<f64>,
    pub p: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `E_ε(Δ)`, without cancellation for small `Δ`.
fn smoothed(d: f64, p: f64) -> f64 {
    let r = d.abs() / KINK_EPS;
    if r > 1e100 {
        return d.abs().powf(p) / p;
    }
    KINK_EPS.powf(p) * (0.5 * p * (r * r).ln_1p()).exp_m1() / p
}

/// `E_ε'(Δ)`.
fn phi(d: f64, p: f64) -> f64 {
    d * d.hypot(KINK_EPS).powf(p - 2.0)
}

/// `F_p(u)`.
pub fn energy_p(problem: &DomainProblem, u: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    let v = problem.extend(u);
    let l = problem.local();
    let mut total = 0.0;
    for (i, row) in l.rows.iter().enumerate() {
        let s: f64 = row.iter().map(|&(j, m)| m * (v[j] - v[i]).abs().powf(p)).sum();
        total += l.nu[i] * s;
    }
    Ok(total / (2.0 * p))
}

/// `R(x) = −Σ_{y∈Ω_m} m_x(y) |u_ψ(y) − u(x)|^{p−2} (u_ψ(y) − u(x))` on `Ω`.
pub fn residual_p(problem: &DomainProblem, u: &[f64], p: f64) -> Result<ScalarField> {
    check_exponent(p)?;
    let v = problem.extend(u);
    let l = problem.local();
    Ok(ScalarField(
        (0..l.n_omega)
            .map(|i| {
                -l.rows[i]
                    .iter()
                    .map(|&(j, m)| {
                        let d = v[j] - v[i];
                        m * d.abs().powf(p - 2.0) * d
                    })
                    .filter(|t| t.is_finite())
                    .sum::<f64>()
            })
            .collect(),
    ))
}

/// Symmetrised pairs touching `Ω`: `(i, j, w)` with `w = ½(a_ij + a_ji)`.
struct Newton {
    pairs: Vec<(usize, usize, f64)>,
    n: usize,
    p: f64,
}

impl Newton {
    fn new(problem: &DomainProblem, p: f64) -> Self {
        let l = problem.local();
        let pairs = l
            .pairs
            .iter()
            .filter(|&&(i, j, _, _)| l.is_interior(i) || l.is_interior(j))
            .map(|&(i, j, a, b)| (i, j, 0.5 * (a + b)))
            .collect();
        Self {
            pairs,
            n: l.n_omega,
            p,
        }
    }

    /// `Σ w E_ε(Δ)`.
    fn energy(&self, v: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, j, w)| w * smoothed(v[j] - v[i], self.p)).sum()
    }

    /// `F` at `t` minus `F` at `v`, summed pairwise to keep the cancellation
    /// local, with a bound on its rounding error.
    fn energy_change(&self, v: &[f64], t: &[f64]) -> (f64, f64) {
        let e = |d: f64| smoothed(d, self.p);
        let mut change = 0.0;
        let mut noise = 0.0;
        for &(i, j, w) in &self.pairs {
            let (a, b) = (e(t[j] - t[i]), e(v[j] - v[i]));
            change += w * (a - b);
            noise += w * (a + b);
        }
        (change, 8.0 * f64::EPSILON * noise)
    }

    /// Gradient change caused by rounding every increment by a few ulps.
    fn noise_floor(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, j, w) in &self.pairs {
            let ulp = 16.0 * f64::EPSILON * v[i].abs().max(v[j].abs()).max(f64::MIN_POSITIVE);
            let c = w * self.curvature(v[j] - v[i], false) * ulp;
            if i < self.n {
                out[i] += c;
            }
            if j < self.n {
                out[j] += c;
            }
        }
        out
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for &(i, j, w) in &self.pairs {
            let f = w * phi(v[j] - v[i], self.p);
            if i < self.n {
                g[i] -= f;
            }
            if j < self.n {
                g[j] += f;
            }
        }
        g
    }

    /// Second derivative of `E_ε`, or with `majorize` the secant `E_ε'(Δ)/Δ`,
    /// whose quadratic model lies above `E_ε` when `p < 2`.
    fn curvature(&self, d: f64, majorize: bool) -> f64 {
        let h = d.hypot(KINK_EPS);
        let base = h.powf(self.p - 2.0);
        if majorize {
            base
        } else {
            let (a, b) = (d / h, KINK_EPS / h);
            base * ((self.p - 1.0) * a * a + b * b)
        }
    }

    fn hessian_dense(&self, v: &[f64], mm: bool) -> DMatrix<f64> {
        let n = self.n;
        let mut h = DMatrix::zeros(n, n);
        for &(i, j, w) in &self.pairs {
            let c = w * self.curvature(v[j] - v[i], mm);
            let (ii, jj) = (i < n, j < n);
            if ii {
                h[(i, i)] += c;
            }
            if jj {
                h[(j, j)] += c;
            }
            if ii && jj {
                h[(i, j)] -= c;
                h[(j, i)] -= c;
            }
        }
        h
    }

    fn hessian_apply(&self, v: &[f64], mm: bool, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let n = self.n;
        for &(i, j, w) in &self.pairs {
            let c = w * self.curvature(v[j] - v[i], mm);
            let xi = if i < n { x[i] } else { 0.0 };
            let xj = if j < n { x[j] } else { 0.0 };
            if i < n {
                out[i] += c * (xi - xj);
            }
            if j < n {
                out[j] += c * (xj - xi);
            }
        }
    }

    fn hessian_diag(&self, v: &[f64], mm: bool) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, w) in &self.pairs {
            let c = w * self.curvature(v[j] - v[i], mm);
            if i < self.n {
                d[i] += c;
            }
            if j < self.n {
                d[j] += c;
            }
        }
        d
    }

    /// Solves `H d = −g`.
    fn direction(&self, v: &[f64], g: &[f64], mm: bool) -> Vec<f64> {
        if self.n <= DENSE_LIMIT {
            let h = self.hessian_dense(v, mm);
            let rhs = DVector::from_iterator(self.n, g.iter().map(|x| -x));
            let dmax = h.diagonal().iter().fold(0.0f64, |a, b| a.max(*b)).max(f64::MIN_POSITIVE);
            let mut shift = 0.0;
            loop {
                let mut hs = h.clone();
                for k in 0..self.n {
                    hs[(k, k)] += shift;
                }
                if let Some(ch) = hs.clone().cholesky() {
                    let mut d = ch.solve(&rhs);
                    let r = &rhs - &hs * &d;
                    d += ch.solve(&r);
                    if d.iter().all(|x| x.is_finite()) {
                        return d.iter().copied().collect();
                    }
                }
                shift = if shift == 0.0 { 1e-14 * dmax } else { shift * 100.0 };
                if shift > 1e6 * dmax {
                    return g.iter().map(|x| -x / dmax).collect();
                }
            }
        } else {
            self.conjugate_gradient(v, g, mm)
        }
    }

    fn conjugate_gradient(&self, v: &[f64], g: &[f64], mm: bool) -> Vec<f64> {
        let n = self.n;
        let diag: Vec<f64> = self.hessian_diag(v, mm).into_iter().map(|d| d.max(f64::MIN_POSITIVE)).collect();
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut dir = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let r0 = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut hd = vec![0.0; n];
        for _ in 0..(10 * n).max(100) {
            self.hessian_apply(v, mm, &dir, &mut hd);
            let dhd: f64 = dir.iter().zip(&hd).map(|(a, b)| a * b).sum();
            if dhd <= 0.0 {
                break;
            }
            let alpha = rz / dhd;
            for k in 0..n {
                x[k] += alpha * dir[k];
                r[k] -= alpha * hd[k];
            }
            if r.iter().map(|a| a * a).sum::<f64>().sqrt() <= 1e-12 * r0 {
                break;
            }
            for k in 0..n {
                z[k] = r[k] / diag[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                dir[k] = z[k] + beta * dir[k];
            }
        }
        x
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn advisory(problem: &DomainProblem, p: f64) {
    let tiny = match poincare::layered_lower_bound(problem, p, ShellMetric::Hop) {
        Ok((lb, _)) => lb <= 1e-12,
        Err(_) => true,
    };
    if tiny {
        let est = poincare::best_constant(problem, p, &poincare::BestConstantOptions::quick());
        if est.lambda_upper < 1e-12 {
            log::warn!(
                "Poincaré constant at q = {p} is estimated below 1e-12 ({:e}); the p-Laplacian problem may be ill-conditioned",
                est.lambda_upper
            );
        }
    }
}

/// Minimiser of `F_p` with the data of `problem`.
pub fn solve_p(problem: &DomainProblem, p: f64, opts: &PSolveOptions) -> Result<PSolution> {
    check_exponent(p)?;
    if p > 16.0 {
        return Err(Error::InvalidExponent(p));
    }
    if opts.poincare_advisory {
        advisory(problem, p);
    }
    let n = problem.n_omega();
    let newton = Newton::new(problem, p);
    let mut u = match &opts.start {
        Some(s) if s.len() == n => s.clone(),
        Some(_) => return Err(Error::InvalidParameter("start vector must have one value per domain state".into())),
        None if p == 2.0 => vec![0.0; n],
        None => {
            let quad = PSolveOptions {
                start: None,
                poincare_advisory: false,
                ..opts.clone()
            };
            solve_p(problem, 2.0, &quad)?.u
        }
    };
    let (lo, hi) = problem.psi_range();
    let range = if hi > lo { hi - lo } else { 1.0 };
    let dmax = (0..n)
        .map(|i| newton.pairs.iter().filter(|&&(a, b, _)| a == i || b == i).map(|&(_, _, w)| w).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let scale = dmax * range.powf(p - 1.0);

    let target = opts.tol * scale;
    let loose = STALL_TOL * scale.max(1.0);
    // worst ratio of residual to the larger of `tol` and the rounding floor
    let excess = |v: &[f64], g: &[f64], tol: f64| {
        let floor = newton.noise_floor(v);
        g.iter().zip(&floor).fold(0.0f64, |m, (a, b)| m.max(a.abs() / tol.max(*b)))
    };
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut v = problem.extend(&u);
    let mut f = newton.energy(&v);
    let mut g = newton.gradient(&v);
    let mut iterations = 0;
    loop {
        let ratio = excess(&v, &g, target);
        if n == 0 || ratio <= 1.0 || iterations >= opts.max_iter {
            break;
        }
        if ratio < 0.99 * best {
            best = ratio;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_WINDOW && excess(&v, &g, loose) <= 1.0 {
                break;
            }
        }
        iterations += 1;
        let d = newton.direction(&v, &g, false);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let (d, slope) = if slope < 0.0 {
            (d, slope)
        } else {
            let d: Vec<f64> = g.iter().map(|x| -x).collect();
            let s = -g.iter().map(|x| x * x).sum::<f64>();
            (d, s)
        };
        // Newton decrement below what the pairwise energy change can resolve
        if -0.5 * slope <= f64::EPSILON * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = vec![0.0; n];
        for _ in 0..80 {
            for k in 0..n {
                trial[k] = u[k] + t * d[k];
            }
            let tv = problem.extend(&trial);
            let (change, noise) = newton.energy_change(&v, &tv);
            let armijo = change <= 1e-4 * t * slope;
            // energy change lost in rounding: approximate Wolfe on the derivative
            let wolfe = change.abs() <= noise && {
                let gt = newton.gradient(&tv);
                let dt: f64 = gt.iter().zip(&d).map(|(a, b)| a * b).sum();
                dt <= -(1.0 - 2e-4) * slope && dt >= 0.9 * slope
            };
            if armijo || wolfe {
                u.copy_from_slice(&trial);
                v = tv;
                f += change;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted && p < 2.0 {
            // majorise-minimise step: descent is guaranteed, so only a
            // detectable increase or a step below rounding rejects it
            let d = newton.direction(&v, &g, true);
            for k in 0..n {
                trial[k] = u[k] + d[k];
            }
            let tv = problem.extend(&trial);
            let (change, noise) = newton.energy_change(&v, &tv);
            if change <= noise && trial != u {
                u.copy_from_slice(&trial);
                v = tv;
                f += change;
                accepted = true;
            }
        }
        if !accepted {
            break;
        }
        g = newton.gradient(&v);
    }
    let residual = sup(&g);
    if n > 0 && excess(&v, &g, loose) > 1.0 {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            trace: Vec::new(),
        });
    }
    let excess = sup(&u) - problem.psi_sup();
    if excess > 1e-9 {
        return Err(Error::MaxPrinciple(excess));
    }
    let energy = energy_p(problem, &u, p)?;
    Ok(PSolution {
        u,
        p,
        energy,
        residual,
        iterations,
    })
}

/// `p_k = 1 + 2^{−k}`, `k = 0..=10`.
pub fn default_schedule() -> Vec<f64> {
    (0..=10).map(|k| 1.0 + 0.5f64.powi(k)).collect()
}

/// Strictly decreasing, starting at most 4, ending at least `1 + 1e-4`.
pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    let first = *schedule
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty p schedule".into()))?;
    let last = *schedule.last().unwrap();
    if let Some(&bad) = schedule.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
        return Err(Error::InvalidExponent(bad));
    }
    if first > 4.0 {
        return Err(Error::InvalidParameter(format!("schedule must start at p ≤ 4, got {first}")));
    }
    if last < 1.0 + 1e-4 {
        return Err(Error::InvalidParameter(format!("schedule must end at p ≥ 1.0001, got {last}")));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("schedule must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOptions {
    /// Relative tolerance on the last change of `J_ψ` along the schedule.
    pub trend_tol: f64,
    pub solve: PSolveOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            trend_tol: 1e-3,
            solve: PSolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationResult {
    /// Values on `Ω` at the last exponent.
    pub u: Vec<f64>,
    /// Flux field on the `Ω_m × Ω_m` support.
    pub g: PairField,
    pub p_trace: Vec<PTraceEntry>,
    pub j_value: f64,
    /// Largest amount by which the raw flux `|Δ|^{p−1}` exceeded 1.
    ///
    /// Grows like `(p − 1) ln |Δ|`, so it depends on the scale of `ψ` and is
    /// reported only; it does not enter `converged`.
    pub clip_magnitude: f64,
    pub converged: bool,
}

/// Warm-started `solve_p` along a decreasing schedule of exponents.
pub fn continuation_to_one(
    problem: &DomainProblem,
    schedule: &[f64],
    opts: &ContinuationOptions,
) -> Result<ContinuationResult> {
    validate_schedule(schedule)?;
    let mut trace: Vec<PTraceEntry> = Vec::with_capacity(schedule.len());
    let mut start = opts.solve.start.clone();
    let mut last: Option<PSolution> = None;
    for (k, &p) in schedule.iter().enumerate() {
        let step_opts = PSolveOptions {
            start: start.take(),
            poincare_advisory: opts.solve.poincare_advisory && k == 0,
            ..opts.solve.clone()
        };
        match solve_p(problem, p, &step_opts) {
            Ok(sol) => {
                trace.push(PTraceEntry {
                    p,
                    energy: sol.energy,
                    j_value: relaxed_energy(problem, &sol.u),
                    residual: sol.residual,
                    iterations: sol.iterations,
                });
                start = Some(sol.u.clone());
                last = Some(sol);
            }
            Err(Error::NoConvergence {
                iterations, residual, ..
            }) => {
                return Err(Error::NoConvergence {
                    iterations,
                    residual,
                    trace,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let sol = last.expect("schedule is nonempty");
    let p = sol.p;
    let v = problem.extend(&sol.u);
    let mut clip_magnitude = 0.0f64;
    let g = problem.pair_field(|i, j| {
        let d = v[j] - v[i];
        let flux = d.abs().powf(p - 1.0) * d.signum();
        clip_magnitude = clip_magnitude.max(flux.abs() - 1.0);
        if d.abs() > SIGN_THRESHOLD {
            d.signum()
        } else {
            flux.clamp(-1.0, 1.0)
        }
    });
    let j_value = relaxed_energy(problem, &sol.u);
    let trend_ok = trace.len() >= 2 && {
        let prev = trace[trace.len() - 2].j_value;
        (j_value - prev).abs() <= opts.trend_tol * j_value.abs().max(1.0)
    };
    let converged = trend_ok && g.sup_norm() <= 1.0 + 1e-6;
    Ok(ContinuationResult {
        u: sol.u,
        g,
        p_trace: trace,
        j_value,
        clip_magnitude: clip_magnitude.max(0.0),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::make_problem;
    use crate::space::{RandomWalkSpace, StateSpace, WeightTable};

    fn path_problem(a: f64, c: f64) -> DomainProblem {
        let s = StateSpace::new(["a", "b", "c"]).unwrap();
        let rws =
            RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0)])).unwrap();
        make_problem(&rws, &[1], &[(0, a), (2, c)]).unwrap()
    }

    fn cycle4() -> DomainProblem {
        let s = StateSpace::new(["a", "b", "c", "d"]).unwrap();
        let w = WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]);
        let rws = RandomWalkSpace::from_symmetric_weights(s, &w).unwrap();
        make_problem(&rws, &[1, 3], &[(0, 0.0), (2, 1.0)]).unwrap()
    }

    #[test]
    fn energies_and_residuals_on_path() {
        let p = path_problem(0.0, 1.0);
        assert_eq!(energy_p(&p, &[0.5], 2.0).unwrap(), 0.25);
        assert_eq!(residual_p(&p, &[0.5], 2.0).unwrap().0, vec![0.0]);
        assert_eq!(residual_p(&p, &[0.0], 2.0).unwrap().0, vec![-0.5]);
        assert!(matches!(energy_p(&p, &[0.5], 1.0), Err(Error::InvalidExponent(_))));
        let k = path_problem(2.0, 2.0);
        for q in [1.5, 2.0, 3.0] {
            assert_eq!(energy_p(&k, &[2.0], q).unwrap(), 0.0);
            assert_eq!(residual_p(&k, &[2.0], q).unwrap().0, vec![0.0]);
        }
        let scaled = path_problem(0.0, 3.0);
        assert_eq!(energy_p(&scaled, &[1.5], 2.0).unwrap(), 9.0 * 0.25);
    }

    #[test]
    fn mean_value_solutions() {
        let p = path_problem(0.0, 1.0);
        let s2 = solve_p(&p, 2.0, &PSolveOptions::default()).unwrap();
        assert_eq!(s2.u, vec![0.5]);
        let s3 = solve_p(&p, 3.0, &PSolveOptions::default()).unwrap();
        assert!((s3.u[0] - 0.5).abs() < 1e-12);
        let c = solve_p(&cycle4(), 2.0, &PSolveOptions::default()).unwrap();
        assert!((c.u[0] - 0.5).abs() < 1e-14 && (c.u[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn schedule_rules() {
        assert!(validate_schedule(&default_schedule()).is_ok());
        assert!(validate_schedule(&[]).is_err());
        assert!(validate_schedule(&[5.0, 2.0]).is_err());
        assert!(validate_schedule(&[2.0, 2.0]).is_err());
        assert!(validate_schedule(&[2.0, 1.00001]).is_err());
        assert!(matches!(validate_schedule(&[2.0, 1.0]), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn continuation_on_path() {
        let p = path_problem(0.0, 1.0);
        let r = continuation_to_one(&p, &[2.0, 1.5, 1.1, 1.01, 1.001], &ContinuationOptions::default()).unwrap();
        assert!((r.u[0] - 0.5).abs() < 1e-9);
        assert!((r.j_value - 1.0).abs() < 1e-12);
        assert!(r.converged);
        assert_eq!(r.p_trace.len(), 5);
        assert!(r.g.sup_norm() <= 1.0);
    }

    #[test]
    fn continuation_with_constant_data() {
        let p = path_problem(0.7, 0.7);
        let r = continuation_to_one(&p, &default_schedule(), &ContinuationOptions::default()).unwrap();
        assert_eq!(r.u, vec![0.7]);
        assert_eq!(r.g.sup_norm(), 0.0);
        assert!(r.p_trace.iter().all(|e| e.energy == 0.0 && e.j_value == 0.0));
        assert!(r.converged);
    }

    #[test]
    fn continuation_on_cycle() {
        let r = continuation_to_one(&cycle4(), &default_schedule(), &ContinuationOptions::default()).unwrap();
        assert!((r.j_value - 2.0).abs() < 1e-9);
    }
}
