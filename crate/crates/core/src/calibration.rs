//! Euler–Lagrange certificates for the nonlocal 1-Laplacian.
//!
//! A calibration of `u` is an antisymmetric pair field `g` with `|g| ≤ 1`,
//! `g ∈ sign(∇u_ψ)` and `Σ_y g(x, y) m_x(y) = 0` at every `x ∈ Ω`.

use num::ToPrimitive;
use serde::Serialize;

use crate::calculus::PairField;
use crate::error::{Error, Result};
use crate::lp::exact::RationalSystem;
use crate::lp::{BoxLp, PdhgOptions};
use crate::problem::DomainProblem;

/// Free variables up to which feasibility is decided in exact arithmetic.
pub const EXACT_FREE_LIMIT: usize = 30;
/// Free variables above which the search is refused.
pub const LP_MAX_FREE: usize = 20_000;
/// Dead band for deciding that an increment vanishes.
pub const SIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionPasses {
    pub bound: bool,
    pub antisymmetry: bool,
    pub sign: bool,
    pub divergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCertificate {
    pub g: PairField,
    /// `max(|g| − 1, 0)`.
    pub bound_defect: f64,
    pub antisymmetry_defect: f64,
    pub sign_defect: f64,
    /// `max_{x∈Ω} |Σ_y g(x, y) m_x(y)|`.
    pub divergence_defect: f64,
    pub tol: f64,
    pub passes: ConditionPasses,
    pub passed: bool,
}

fn in_support(problem: &DomainProblem, member: &[bool], x: usize, y: usize) -> bool {
    member[x] && member[y] && problem.space().m(x, y) > 0.0
}

/// Checks the four calibration conditions for `u` (values on `Ω`).
pub fn verify_calibration(problem: &DomainProblem, u: &[f64], g: &PairField, tol: f64) -> Result<CalibrationCertificate> {
    let rws = problem.space();
    if g.len_states() != rws.len() {
        return Err(Error::InvalidParameter("pair field sized for another space".into()));
    }
    let member = rws.mask(&problem.decomposition().omega_m);
    for (x, y, _) in g.iter() {
        if !in_support(problem, &member, x, y) {
            return Err(Error::SupportMismatch(rws.label(x).into(), rws.label(y).into()));
        }
    }
    let v = problem.to_global(u);
    let l = problem.local();
    let mut bound_defect = 0.0f64;
    let mut antisymmetry_defect = 0.0f64;
    let mut sign_defect = 0.0f64;
    for &x in &l.global {
        for &(y, _) in rws.row(x) {
            if !in_support(problem, &member, x, y) {
                continue;
            }
            let gxy = g.get(x, y);
            bound_defect = bound_defect.max(gxy.abs() - 1.0);
            if rws.m(y, x) > 0.0 {
                antisymmetry_defect = antisymmetry_defect.max((gxy + g.get(y, x)).abs());
            }
            let d = v[y] - v[x];
            if d.abs() > tol {
                sign_defect = sign_defect.max((gxy - d.signum()).abs());
            }
        }
    }
    let mut divergence_defect = 0.0f64;
    for &x in problem.omega() {
        let s: f64 = rws.row(x).iter().map(|&(y, p)| g.get(x, y) * p).sum();
        divergence_defect = divergence_defect.max(s.abs());
    }
    let passes = ConditionPasses {
        bound: bound_defect <= tol,
        antisymmetry: antisymmetry_defect <= tol,
        sign: sign_defect <= tol,
        divergence: divergence_defect <= tol,
    };
    let passed = passes.bound && passes.antisymmetry && passes.sign && passes.divergence;
    Ok(CalibrationCertificate {
        g: g.clone(),
        bound_defect: bound_defect.max(0.0),
        antisymmetry_defect,
        sign_defect,
        divergence_defect,
        tol,
        passes,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CalibrationSearch {
    Feasible {
        method: &'static str,
        certificate: CalibrationCertificate,
    },
    Infeasible {
        method: &'static str,
        /// Best constraint violation found (zero for exact verdicts).
        violation: f64,
    },
}

impl CalibrationSearch {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CalibrationSearch::Feasible { .. })
    }

    pub fn certificate(&self) -> Option<&CalibrationCertificate> {
        match self {
            CalibrationSearch::Feasible { certificate, .. } => Some(certificate),
            CalibrationSearch::Infeasible { .. } => None,
        }
    }
}

/// Searches for a calibration of `u`: signs fixed where `|Δ| > tol`, the rest by LP.
pub fn find_calibration(problem: &DomainProblem, u: &[f64], tol: f64) -> Result<CalibrationSearch> {
    let l = problem.local();
    let n = l.n_omega;
    let v = problem.extend(u);
    let m_of = |i: usize, j: usize| -> f64 {
        l.rows[i].binary_search_by_key(&j, |&(k, _)| k).map_or(0.0, |k| l.rows[i][k].1)
    };
    // value of g(i, j) for i < j: fixed sign or a free column
    enum Slot {
        Fixed(f64),
        Free(usize),
    }
    let mut slots = Vec::with_capacity(l.pairs.len());
    let mut free_pairs = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rhs = vec![0.0; n];
    for &(i, j, _, _) in &l.pairs {
        let d = v[j] - v[i];
        let touches = i < n || j < n;
        if d.abs() > tol || !touches {
            let s = if d.abs() > tol { d.signum() } else { 0.0 };
            if i < n {
                rhs[i] -= s * m_of(i, j);
            }
            if j < n {
                rhs[j] += s * m_of(j, i);
            }
            slots.push(Slot::Fixed(s));
        } else {
            let col = free_pairs.len();
            free_pairs.push((i, j));
            if i < n {
                rows[i].push((col, m_of(i, j)));
            }
            if j < n {
                rows[j].push((col, -m_of(j, i)));
            }
            slots.push(Slot::Free(col));
        }
    }
    let k = free_pairs.len();
    if k > LP_MAX_FREE {
        return Err(Error::ProblemTooLarge(format!("{k} free calibration variables")));
    }
    for r in &mut rows {
        r.retain(|&(_, a)| a != 0.0);
    }
    let lp = BoxLp {
        cost: vec![0.0; k],
        rows,
        rhs,
        lower: vec![-1.0; k],
        upper: vec![1.0; k],
    };
    let (values, method) = if k <= EXACT_FREE_LIMIT {
        match RationalSystem::from_lp(&lp).feasible_point() {
            Some(x) => (x.iter().map(|r| r.to_f64().unwrap_or(0.0)).collect::<Vec<f64>>(), "exact-simplex"),
            None => {
                return Ok(CalibrationSearch::Infeasible {
                    method: "exact-simplex",
                    violation: 0.0,
                })
            }
        }
    } else {
        let out = lp.solve_pdhg(&PdhgOptions::default());
        if out.max_violation > PdhgOptions::default().infeasible_above {
            return Ok(CalibrationSearch::Infeasible {
                method: "pdhg",
                violation: out.max_violation,
            });
        }
        (out.x, "pdhg")
    };
    let mut local_g = std::collections::HashMap::with_capacity(2 * slots.len());
    for (&(i, j, _, _), slot) in l.pairs.iter().zip(&slots) {
        let s = match *slot {
            Slot::Fixed(s) => s,
            Slot::Free(c) => values[c],
        };
        local_g.insert((i, j), s);
        local_g.insert((j, i), -s);
    }
    let g = problem.pair_field(|i, j| local_g[&(i, j)]);
    let certificate = verify_calibration(problem, u, &g, tol.max(1e-9))?;
    if certificate.passed {
        Ok(CalibrationSearch::Feasible { method, certificate })
    } else {
        Ok(CalibrationSearch::Infeasible {
            method,
            violation: certificate.divergence_defect,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianEntry {
    pub state: String,
    /// `m_x(E_+)`, `m_x(E_−)`, `m_x(E_0)`.
    pub plus: f64,
    pub minus: f64,
    pub zero: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianReport {
    pub tau: f64,
    pub entries: Vec<MedianEntry>,
    pub passed: bool,
}

fn median_masses(problem: &DomainProblem, v: &[f64], x: usize, tau: f64) -> (f64, f64, f64) {
    let (mut plus, mut minus, mut zero) = (0.0, 0.0, 0.0);
    for &(y, p) in problem.space().row(x) {
        let d = v[y] - v[x];
        if d > tau {
            plus += p;
        } else if d < -tau {
            minus += p;
        } else {
            zero += p;
        }
    }
    (plus, minus, zero)
}

/// `m_x(E_+ ∪ E_0) ≥ ½ − τ` and `m_x(E_− ∪ E_0) ≥ ½ − τ` at every `x ∈ Ω`.
pub fn median_value_check(problem: &DomainProblem, u: &[f64], tau: f64) -> MedianReport {
    let v = problem.to_global(u);
    let rws = problem.space();
    let entries: Vec<MedianEntry> = problem
        .omega()
        .iter()
        .map(|&x| {
            let (plus, minus, zero) = median_masses(problem, &v, x, tau);
            MedianEntry {
                state: rws.label(x).to_string(),
                plus,
                minus,
                zero,
                passed: plus + zero >= 0.5 - tau && minus + zero >= 0.5 - tau,
            }
        })
        .collect();
    let passed = entries.iter().all(|e| e.passed);
    MedianReport { tau, entries, passed }
}

/// Pair field built from the median masses; satisfies every condition but antisymmetry.
pub fn median_pseudocalibration(problem: &DomainProblem, u: &[f64]) -> Result<PairField> {
    let report = median_value_check(problem, u, SIGN_TOL);
    if let Some(bad) = report.entries.iter().find(|e| !e.passed) {
        return Err(Error::MedianViolated(bad.state.clone()));
    }
    let rws = problem.space();
    let v = problem.to_global(u);
    let sign = |d: f64| {
        if d > SIGN_TOL {
            1.0
        } else if d < -SIGN_TOL {
            -1.0
        } else {
            0.0
        }
    };
    let mut g = PairField::empty(rws.len());
    for &x in problem.omega() {
        let (plus, minus, zero) = median_masses(problem, &v, x, SIGN_TOL);
        let flat = if zero > 0.0 { (minus - plus) / zero } else { 0.0 };
        for &(y, _) in rws.row(x) {
            let s = sign(v[y] - v[x]);
            g.set(x, y, if s == 0.0 { flat } else { s });
        }
    }
    let interior = rws.mask(problem.omega());
    let member = rws.mask(&problem.decomposition().omega_m);
    for &x in problem.boundary() {
        for &(y, _) in rws.row(x) {
            if interior[y] {
                let back = g.get(y, x);
                g.set(x, y, -back);
            } else if member[y] && y != x {
                g.set(x, y, sign(v[y] - v[x]));
            }
        }
    }
    Ok(g)
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

    fn star() -> DomainProblem {
        // x = 0, y = 1 adjacent; x–b0, x–b1, y–b1, y–b2
        let s = StateSpace::new(["x", "y", "b0", "b1", "b2"]).unwrap();
        let w = WeightTable::from_edges([(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 3, 1.0), (1, 4, 1.0)]);
        let rws = RandomWalkSpace::from_symmetric_weights(s, &w).unwrap();
        make_problem(&rws, &[0, 1], &[(2, 0.0), (3, 1.0), (4, 0.0)]).unwrap()
    }

    fn path_g(gba: f64) -> PairField {
        PairField::from_entries(3, [(1, 2, 1.0), (2, 1, -1.0), (1, 0, gba), (0, 1, -gba)])
    }

    #[test]
    fn verify_on_path() {
        let p = path_problem(0.0, 1.0);
        let ok = verify_calibration(&p, &[0.0], &path_g(-1.0), 1e-9).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = verify_calibration(&p, &[0.0], &path_g(0.0), 1e-9).unwrap();
        assert!(!bad.passes.divergence);
        assert_eq!(bad.divergence_defect, 0.5);
        let c = path_problem(1.0, 1.0);
        assert!(verify_calibration(&c, &[1.0], &PairField::empty(3), 1e-9).unwrap().passed);
        let stray = PairField::from_entries(3, [(0, 2, 1.0)]);
        assert!(matches!(verify_calibration(&p, &[0.0], &stray, 1e-9), Err(Error::SupportMismatch(..))));
    }

    #[test]
    fn search_on_path() {
        let p = path_problem(0.0, 1.0);
        let found = find_calibration(&p, &[0.0], 1e-9).unwrap();
        let cert = found.certificate().expect("feasible");
        assert_eq!(cert.g.get(1, 0), -1.0);
        assert_eq!(cert.g.get(1, 2), 1.0);
        let bump = path_problem(0.0, 0.0);
        assert!(!find_calibration(&bump, &[1.0], 1e-9).unwrap().is_feasible());
        let c = path_problem(1.0, 1.0);
        let flat = find_calibration(&c, &[1.0], 1e-9).unwrap();
        assert!(flat.certificate().unwrap().passed);
    }

    #[test]
    fn median_on_path() {
        let p = path_problem(0.0, 1.0);
        let r = median_value_check(&p, &[0.0], 1e-9);
        assert!(r.passed);
        assert_eq!((r.entries[0].plus, r.entries[0].minus, r.entries[0].zero), (0.5, 0.0, 0.5));
        let low = median_value_check(&p, &[-1.0], 1e-9);
        assert!(!low.passed);
        assert_eq!(low.entries[0].plus, 1.0);
        let g = median_pseudocalibration(&p, &[0.0]).unwrap();
        assert_eq!(g.get(1, 0), -1.0);
        assert!(verify_calibration(&p, &[0.0], &g, 1e-12).unwrap().passed);
        assert!(matches!(median_pseudocalibration(&p, &[-1.0]), Err(Error::MedianViolated(_))));
        let c = path_problem(2.0, 2.0);
        assert_eq!(median_pseudocalibration(&c, &[2.0]).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn star_pseudocalibration_breaks_antisymmetry() {
        let p = star();
        let u = [0.0, 0.0];
        let g = median_pseudocalibration(&p, &u).unwrap();
        assert_eq!(g.get(0, 1), -0.5);
        assert_eq!(g.get(1, 0), -0.5);
        let cert = verify_calibration(&p, &u, &g, 1e-12).unwrap();
        assert!(cert.passes.bound && cert.passes.sign && cert.passes.divergence);
        assert!(!cert.passes.antisymmetry);
        assert_eq!(cert.antisymmetry_defect, 1.0);
        assert!(find_calibration(&p, &u, 1e-9).unwrap().is_feasible());
    }
}
