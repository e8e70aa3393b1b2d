//! Nonlocal q-Poincaré constants.
//!
//! The ratio
//! `[Σ_{x∈Ω} ν(x) Σ_{y∈Ω_m} m_x(y) |u_ψ(y) − u(x)|^q + Σ_{∂_mΩ} ν |ψ|^q] / Σ_Ω ν |u|^q`
//! is bounded above by explicit witnesses and below by a layered shell
//! argument that walks inward from the boundary.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::problem::DomainProblem;

pub const DEFAULT_SEED: u64 = 0x5EED;
const EIGEN_LIMIT: usize = 1500;

/// Witness ratio for values `u` on `Ω`, with `ψ` optionally replaced.
pub fn poincare_ratio(problem: &DomainProblem, u: &[f64], psi_override: Option<&[f64]>, q: f64) -> Result<f64> {
    check_q(q)?;
    let psi = psi_override.unwrap_or(problem.psi());
    if psi.len() != problem.psi().len() {
        return Err(Error::InvalidParameter("boundary override must have one value per boundary state".into()));
    }
    let (num, den) = ratio_parts(problem, u, psi, q);
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(q))
    }
}

fn ratio_parts(problem: &DomainProblem, u: &[f64], psi: &[f64], q: f64) -> (f64, f64) {
    let l = problem.local();
    let v = problem.extend_with(u, psi);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..l.n_omega {
        let s: f64 = l.rows[i].iter().map(|&(j, m)| m * (v[j] - v[i]).abs().powf(q)).sum();
        num += l.nu[i] * s;
        den += l.nu[i] * v[i].abs().powf(q);
    }
    for (k, &p) in psi.iter().enumerate() {
        num += l.nu[l.n_omega + k] * p.abs().powf(q);
    }
    (num, den)
}

/// For each boundary state: `(Ω neighbour, ν(x) m_x(y))` couplings and `ν(y)`.
struct BoundaryCoupling {
    links: Vec<Vec<(usize, f64)>>,
    nu: Vec<f64>,
}

impl BoundaryCoupling {
    fn new(problem: &DomainProblem) -> Self {
        let l = problem.local();
        let nb = l.len() - l.n_omega;
        let mut links = vec![Vec::new(); nb];
        for i in 0..l.n_omega {
            for &(j, m) in &l.rows[i] {
                if j >= l.n_omega {
                    links[j - l.n_omega].push((i, l.nu[i] * m));
                }
            }
        }
        Self {
            links,
            nu: l.nu[l.n_omega..].to_vec(),
        }
    }

    /// Minimiser of `Σ a |ψ − u_x|^q + ν |ψ|^q` for every boundary state.
    fn optimal_psi(&self, u: &[f64], q: f64) -> Vec<f64> {
        self.links
            .iter()
            .zip(&self.nu)
            .map(|(links, &nu)| {
                let pts: Vec<(f64, f64)> = links
                    .iter()
                    .map(|&(i, a)| (u[i], a))
                    .chain(std::iter::once((0.0, nu)))
                    .collect();
                optimal_point(&pts, q)
            })
            .collect()
    }
}

/// `argmin_t Σ w |t − c|^q` over weighted points.
fn optimal_point(pts: &[(f64, f64)], q: f64) -> f64 {
    if q == 2.0 {
        let (s, w) = pts.iter().fold((0.0, 0.0), |(s, w), &(c, a)| (s + a * c, w + a));
        return s / w;
    }
    let mut sorted = pts.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if q == 1.0 {
        // weighted median
        let total: f64 = sorted.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        for &(c, a) in &sorted {
            acc += a;
            if acc >= 0.5 * total {
                return c;
            }
        }
        return sorted.last().unwrap().0;
    }
    let deriv = |t: f64| -> f64 {
        sorted
            .iter()
            .map(|&(c, a)| {
                let d = t - c;
                a * q * d.abs().powf(q - 1.0) * d.signum()
            })
            .sum()
    };
    let (mut lo, mut hi) = (sorted[0].0, sorted[sorted.len() - 1].0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestConstantOptions {
    /// Random starts in addition to the deterministic ones.
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative change of the ratio below which a descent stops.
    pub stall_tol: f64,
    /// Further starting vectors on `Ω`, e.g. known witnesses.
    pub extra_starts: Vec<Vec<f64>>,
}

impl Default for BestConstantOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            seed: DEFAULT_SEED,
            max_iter: 2000,
            stall_tol: 1e-10,
            extra_starts: Vec::new(),
        }
    }
}

impl BestConstantOptions {
    /// Cheap settings for advisory checks.
    pub fn quick() -> Self {
        Self {
            starts: 1,
            max_iter: 200,
            ..Self::default()
        }
    }
}

/// Best witness found; its ratio is an upper bound on the constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareUpper {
    pub q: f64,
    pub lambda_upper: f64,
    pub witness_u: Vec<f64>,
    pub witness_psi: Vec<f64>,
    /// Label of the start that produced the witness.
    pub start: String,
    pub notes: Vec<String>,
}

fn reduced_ratio(problem: &DomainProblem, bc: &BoundaryCoupling, u: &[f64], q: f64) -> (f64, Vec<f64>) {
    let psi = bc.optimal_psi(u, q);
    let (num, den) = ratio_parts(problem, u, &psi, q);
    (if den > 0.0 { num / den } else { f64::INFINITY }, psi)
}

/// Gradient of the ratio in `u` at fixed `ψ`.
fn ratio_gradient(problem: &DomainProblem, u: &[f64], psi: &[f64], q: f64) -> Vec<f64> {
    let l = problem.local();
    let n = l.n_omega;
    let v = problem.extend_with(u, psi);
    let (num, den) = ratio_parts(problem, u, psi, q);
    let dpow = |d: f64| q * d.abs().powf(q - 1.0) * d.signum();
    let mut gnum = vec![0.0; n];
    for i in 0..n {
        for &(j, m) in &l.rows[i] {
            // term ν_i m_ij |v_j − v_i|^q
            let t = l.nu[i] * m * dpow(v[j] - v[i]);
            gnum[i] -= t;
            if j < n {
                gnum[j] += t;
            }
        }
    }
    (0..n)
        .map(|i| (gnum[i] * den - num * l.nu[i] * dpow(v[i])) / (den * den))
        .collect()
}

fn descend(problem: &DomainProblem, bc: &BoundaryCoupling, start: Vec<f64>, q: f64, opts: &BestConstantOptions) -> (f64, Vec<f64>, Vec<f64>) {
    let mut u = start;
    let (mut r, mut psi) = reduced_ratio(problem, bc, &u, q);
    if !r.is_finite() {
        return (r, u, psi);
    }
    let mut step = 0.1;
    for _ in 0..opts.max_iter {
        let g = ratio_gradient(problem, &u, &psi, q);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn == 0.0 || !gn.is_finite() {
            break;
        }
        let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut accepted = false;
        let mut s = step;
        while s > 1e-14 {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - s * un * b / gn).collect();
            let (rt, pt) = reduced_ratio(problem, bc, &trial, q);
            if rt < r {
                let rel = (r - rt) / r.abs().max(f64::MIN_POSITIVE);
                u = trial;
                psi = pt;
                r = rt;
                accepted = true;
                step = (2.0 * s).min(1.0);
                if rel < opts.stall_tol {
                    return (r, u, psi);
                }
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r, u, psi)
}

/// Smallest eigenpair of the `q = 2` quadratic form after eliminating `ψ`.
fn quadratic_start(problem: &DomainProblem) -> Option<Vec<f64>> {
    let l = problem.local();
    let n = l.n_omega;
    if n == 0 || n > EIGEN_LIMIT {
        return None;
    }
    let nb = l.len() - n;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, nb);
    let mut c = l.nu[n..].to_vec();
    for i in 0..n {
        for &(j, m) in &l.rows[i] {
            let w = l.nu[i] * m;
            a[(i, i)] += w;
            if j < n {
                a[(j, j)] += w;
                a[(i, j)] -= w;
                a[(j, i)] -= w;
            } else {
                c[j - n] += w;
                b[(i, j - n)] -= w;
            }
        }
    }
    let mut s = a;
    for k in 0..nb {
        for i in 0..n {
            if b[(i, k)] == 0.0 {
                continue;
            }
            for j in 0..n {
                s[(i, j)] -= b[(i, k)] * b[(j, k)] / c[k];
            }
        }
    }
    let d: Vec<f64> = l.nu[..n].iter().map(|x| 1.0 / x.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * s[(i, j)] * d[j]);
    let eig = SymmetricEigen::new(scaled);
    let k = (0..n).min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]))?;
    Some((0..n).map(|i| eig.eigenvectors[(i, k)] * d[i]).collect())
}

/// Multi-start descent on the ratio with the optimal `ψ` for each `u`.
pub fn best_constant(problem: &DomainProblem, q: f64, opts: &BestConstantOptions) -> PoincareUpper {
    let n = problem.n_omega();
    let bc = BoundaryCoupling::new(problem);
    let mut starts: Vec<(String, Vec<f64>)> = vec![("constant".into(), vec![1.0; n])];
    if q == 2.0 {
        if let Some(v) = quadratic_start(problem) {
            starts.push(("eigenvector".into(), v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for k in 0..opts.starts {
        starts.push((format!("random-{k}"), (0..n).map(|_| rng.random_range(0.0..1.0)).collect()));
    }
    for (k, s) in opts.extra_starts.iter().enumerate() {
        if s.len() == n {
            starts.push((format!("extra-{k}"), s.clone()));
        }
    }
    let runs = par::map_slice(&starts, |(_, s)| descend(problem, &bc, s.clone(), q, opts));
    let (best, (ratio, u, psi)) = runs
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, (f64, Vec<f64>, Vec<f64>))>, (k, run)| match acc {
            Some((_, ref b)) if !(run.0 < b.0) => acc,
            _ => Some((k, run)),
        })
        .expect("at least one start");
    PoincareUpper {
        q,
        lambda_upper: ratio,
        witness_u: u,
        witness_psi: psi,
        start: starts[best].0.clone(),
        notes: vec!["upper bound from an explicit witness; not certified as the infimum".into()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "width")]
pub enum ShellMetric {
    /// Shells by jumps of the walk.
    Hop,
    /// Shells of the given metric width.
    Width(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellDecomposition {
    /// `B_0 = ∂_mΩ`, then `B_1, …, B_l` covering `Ω`.
    pub shells: Vec<Vec<usize>>,
    /// `α_j = min_{x∈B_j} m_x(B_{j−1})`, `j ≥ 1`.
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub coefficients: Vec<f64>,
}

/// Lower bound `1 / Σ c_j` with `c_j = (2^q / α_j)(1 + c_{j−1})`.
pub fn layered_lower_bound(problem: &DomainProblem, q: f64, metric: ShellMetric) -> Result<(f64, ShellDecomposition)> {
    check_q(q)?;
    let rws = problem.space();
    if let ShellMetric::Width(w) = metric {
        if !rws.states().has_metric() {
            return Err(Error::MissingMetric);
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("shell width must be positive, got {w}")));
        }
    }
    let mut assigned = rws.mask(problem.boundary());
    let mut remaining: Vec<usize> = problem.omega().to_vec();
    let mut shells = vec![problem.boundary().to_vec()];
    while !remaining.is_empty() {
        let prev = shells.last().unwrap();
        let prev_mask = rws.mask(prev);
        let next: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&x| match metric {
                ShellMetric::Hop => rws.m_set(x, &prev_mask) > 0.0,
                ShellMetric::Width(w) => prev.iter().any(|&y| rws.states().distance(x, y).unwrap() <= w),
            })
            .collect();
        if next.is_empty() {
            return Err(Error::Unbounded(remaining.iter().map(|&x| rws.label(x).to_string()).collect()));
        }
        for &x in &next {
            assigned[x] = true;
        }
        remaining.retain(|&x| !assigned[x]);
        shells.push(next);
    }
    let two_q = 2f64.powf(q);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut coefficients = Vec::new();
    let mut c_prev = 0.0;
    for j in 1..shells.len() {
        let prev_mask = rws.mask(&shells[j - 1]);
        let alpha = shells[j]
            .iter()
            .map(|&x| rws.m_set(x, &prev_mask))
            .fold(f64::INFINITY, f64::min);
        if alpha <= 0.0 {
            return Err(Error::ZeroAlpha(j));
        }
        let beta = two_q / alpha;
        let c = beta * (1.0 + c_prev);
        alphas.push(alpha);
        betas.push(beta);
        coefficients.push(c);
        c_prev = c;
    }
    let total: f64 = coefficients.iter().sum();
    Ok((
        1.0 / total,
        ShellDecomposition {
            shells,
            alphas,
            betas,
            coefficients,
        },
    ))
}

/// Both sides of the constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareEstimate {
    pub q: f64,
    pub upper: PoincareUpper,
    pub lambda_lower: Option<f64>,
    pub shells: Option<ShellDecomposition>,
    pub lower_error: Option<String>,
}

pub fn estimate(problem: &DomainProblem, q: f64, metric: ShellMetric, opts: &BestConstantOptions) -> Result<PoincareEstimate> {
    check_q(q)?;
    let upper = best_constant(problem, q, opts);
    let (lambda_lower, shells, lower_error) = match layered_lower_bound(problem, q, metric) {
        Ok((lb, s)) => (Some(lb), Some(s), None),
        Err(e @ (Error::Unbounded(_) | Error::ZeroAlpha(_))) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(PoincareEstimate {
        q,
        upper,
        lambda_lower,
        shells,
        lower_error,
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

    #[test]
    fn ratios_on_path() {
        let p = path_problem(1.0, 1.0);
        // all increments vanish: ν(∂)/ν(Ω)
        assert_eq!(poincare_ratio(&p, &[1.0], None, 2.0).unwrap(), 1.0);
        assert_eq!(poincare_ratio(&p, &[1.0], Some(&[0.5, 0.5]), 2.0).unwrap(), 0.5);
        assert!(matches!(poincare_ratio(&p, &[0.0], None, 2.0), Err(Error::ZeroDenominator)));
        let a = poincare_ratio(&p, &[0.3], Some(&[0.1, -0.7]), 1.5).unwrap();
        let b = poincare_ratio(&p, &[-0.9], Some(&[-0.3, 2.1]), 1.5).unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn best_constant_on_path() {
        let p = path_problem(0.0, 1.0);
        let est = best_constant(&p, 2.0, &BestConstantOptions::default());
        assert!((est.lambda_upper - 0.5).abs() < 1e-6, "{est:?}");
        let ratio = poincare_ratio(&p, &est.witness_u, Some(&est.witness_psi), 2.0).unwrap();
        assert!((ratio - est.lambda_upper).abs() < 1e-12);
        let one = best_constant(&p, 1.0, &BestConstantOptions::default());
        assert!(one.lambda_upper <= 1.0);
    }

    #[test]
    fn shells_on_path() {
        let p = path_problem(0.0, 1.0);
        let (lb, s) = layered_lower_bound(&p, 2.0, ShellMetric::Hop).unwrap();
        assert_eq!(lb, 0.25);
        assert_eq!(s.shells, vec![vec![0, 2], vec![1]]);
        assert_eq!(s.alphas, vec![1.0]);
        assert_eq!(s.coefficients, vec![4.0]);
        let (lb1, _) = layered_lower_bound(&p, 1.0, ShellMetric::Hop).unwrap();
        assert_eq!(lb1, 0.5);
        assert_eq!(layered_lower_bound(&p, 2.0, ShellMetric::Width(1.0)), Err(Error::MissingMetric));
    }

    #[test]
    fn weighted_median_includes_zero() {
        assert_eq!(optimal_point(&[(1.0, 1.0), (0.0, 3.0)], 1.0), 0.0);
        assert_eq!(optimal_point(&[(1.0, 3.0), (0.0, 1.0)], 1.0), 1.0);
        assert_eq!(optimal_point(&[(1.0, 1.0), (0.0, 1.0)], 2.0), 0.5);
        assert!((optimal_point(&[(1.0, 1.0), (0.0, 1.0)], 3.0) - 0.5).abs() < 1e-12);
    }
}
