//! Exact and brute-force minimisation of `J_ψ`, and least gradient checks.
//!
//! The exact solver cuts the problem at every midpoint between consecutive
//! boundary values and stacks the nested source sides into a layer cake.

use serde::Serialize;

use crate::calculus::total_variation;
use crate::error::{Error, Result};
use crate::maxflow::FlowNetwork;
use crate::par;
use crate::problem::{energy_of_extension, make_problem, relaxed_energy, DomainProblem};
use crate::space::RandomWalkSpace;

/// Largest domain searched by subset enumeration.
pub const SUBSET_ENUMERATION_LIMIT: usize = 14;
/// Largest domain for brute force over the default grid.
pub const BRUTEFORCE_DOMAIN_LIMIT: usize = 6;
/// Largest number of grid points brute force will visit.
pub const BRUTEFORCE_MAX_CANDIDATES: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Pointwise smallest minimiser.
    Minimal,
    /// Pointwise largest minimiser.
    Maximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MinCut,
    BruteForce,
}

/// One threshold of the layer cake.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCut {
    pub threshold: f64,
    /// Jump `v_{i+1} − v_i` between the boundary values around the threshold.
    pub height: f64,
    /// Min-cut value over edges touching `Ω`.
    pub cut_value: f64,
    /// Cost of boundary–boundary pairs split by the threshold.
    pub boundary_cost: f64,
    pub source_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// States of `Ω_m`, domain first.
    pub states: Vec<usize>,
    /// `u_ψ` aligned with `states`.
    pub u: Vec<f64>,
    pub n_omega: usize,
    pub energy: f64,
    pub method: Method,
    pub tie_break: Option<TieBreak>,
    pub levels: Vec<LevelCut>,
}

impl SolveReport {
    /// Values on `Ω`.
    pub fn omega_values(&self) -> &[f64] {
        &self.u[..self.n_omega]
    }

    /// `Σ (v_{i+1} − v_i)(cut_i + boundary_i)` over the levels.
    pub fn coarea_energy(&self) -> f64 {
        self.levels.iter().map(|l| l.height * (l.cut_value + l.boundary_cost)).sum()
    }
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Network over `Ω` plus terminals `s = |Ω|`, `t = |Ω| + 1` for threshold `t`.
fn level_network(problem: &DomainProblem, boundary_high: impl Fn(usize) -> bool) -> (FlowNetwork, f64) {
    let l = problem.local();
    let n = l.n_omega;
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    let mut boundary_cost = 0.0;
    let terminal = |j: usize| if boundary_high(j) { s } else { t };
    for &(i, j, a, b) in &l.pairs {
        let w = 0.5 * (a + b);
        match (l.is_interior(i), l.is_interior(j)) {
            (true, true) => net.add_edge(i, j, w),
            (true, false) => net.add_edge(i, terminal(j), w),
            (false, true) => net.add_edge(j, terminal(i), w),
            (false, false) => {
                if boundary_high(i) != boundary_high(j) {
                    boundary_cost += w;
                }
            }
        }
    }
    (net, boundary_cost)
}

fn cut_at(problem: &DomainProblem, threshold: f64, tie_break: TieBreak) -> (Vec<bool>, f64, f64) {
    let l = problem.local();
    let n = l.n_omega;
    let psi = problem.psi();
    let (net, boundary_cost) = level_network(problem, |j| psi[j - n] > threshold);
    let cut = match tie_break {
        TieBreak::Minimal => net.minimal_cut(n, n + 1),
        TieBreak::Maximal => net.maximal_cut(n, n + 1),
    };
    let side = cut.source_side[..n].to_vec();
    (side, net.cut_value(&cut.source_side), boundary_cost)
}

/// Exact minimiser of `J_ψ` by parametric min cuts.
pub fn solve_exact(problem: &DomainProblem, tie_break: TieBreak) -> Result<SolveReport> {
    let n = problem.n_omega();
    let values = distinct_sorted(problem.psi());
    let thresholds: Vec<(f64, f64)> = values.windows(2).map(|w| (0.5 * (w[0] + w[1]), w[1] - w[0])).collect();
    let cuts = par::map_slice(&thresholds, |&(t, _)| cut_at(problem, t, tie_break));
    for k in 1..cuts.len() {
        if (0..n).any(|i| cuts[k].0[i] && !cuts[k - 1].0[i]) {
            return Err(Error::NonNestedCuts(thresholds[k].0));
        }
    }
    // nested cuts: the number of levels containing x indexes its value
    let mut depth = vec![0usize; n];
    let mut levels = Vec::with_capacity(cuts.len());
    for ((side, cut_value, boundary_cost), &(threshold, height)) in cuts.into_iter().zip(&thresholds) {
        for i in 0..n {
            if side[i] {
                depth[i] += 1;
            }
        }
        levels.push(LevelCut {
            threshold,
            height,
            cut_value,
            boundary_cost,
            source_size: side.iter().filter(|&&b| b).count(),
        });
    }
    let u: Vec<f64> = depth.iter().map(|&d| values[d]).collect();
    let energy = relaxed_energy(problem, &u);
    Ok(SolveReport {
        states: problem.local().global.clone(),
        u: problem.extend(&u),
        n_omega: n,
        energy,
        method: Method::MinCut,
        tie_break: Some(tie_break),
        levels,
    })
}

/// Exhaustive minimisation of `J_ψ` over `grid^Ω`; ties go to the first candidate.
pub fn solve_bruteforce(problem: &DomainProblem, grid: Option<&[f64]>) -> Result<SolveReport> {
    let n = problem.n_omega();
    let grid: Vec<f64> = match grid {
        Some(g) => {
            let g = distinct_sorted(g);
            if (g.len() as f64).powi(n as i32) > BRUTEFORCE_MAX_CANDIDATES {
                return Err(Error::ProblemTooLarge(format!("{}^{} grid candidates", g.len(), n)));
            }
            g
        }
        None => {
            if n > BRUTEFORCE_DOMAIN_LIMIT {
                return Err(Error::ProblemTooLarge(format!(
                    "brute force over boundary values needs |Ω| ≤ {BRUTEFORCE_DOMAIN_LIMIT}, got {n}"
                )));
            }
            distinct_sorted(problem.psi())
        }
    };
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let k = grid.len();
    let total = k.pow(n as u32);
    let decode = |mut c: usize| -> Vec<f64> {
        let mut u = vec![0.0; n];
        for slot in u.iter_mut() {
            *slot = grid[c % k];
            c /= k;
        }
        u
    };
    let (best, energy) = par::argmin_range(0..total, |c| relaxed_energy(problem, &decode(c))).expect("nonempty grid");
    let u = decode(best);
    Ok(SolveReport {
        states: problem.local().global.clone(),
        u: problem.extend(&u),
        n_omega: n,
        energy,
        method: Method::BruteForce,
        tie_break: None,
        levels: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastGradientVerdict {
    pub least_gradient: bool,
    pub total_variation: f64,
    /// Optimal `J_ψ` for the trace of `u` on the boundary.
    pub optimum: f64,
    /// Part of `TV_m(u)` from pairs not inside `Ω_m`.
    pub outside: f64,
    /// Whether every pair leaving `Ω_m` avoids `Ω`, so that part is fixed.
    pub outside_is_constant: bool,
}

/// Whether `u` cannot lower `TV_m` by any perturbation supported in `Ω`.
pub fn is_least_gradient(rws: &RandomWalkSpace, u: &[f64], omega: &[usize]) -> Result<LeastGradientVerdict> {
    if omega.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let decomp = rws.m_boundary(omega);
    let tv = total_variation(rws, u, None);
    let inside_tv = total_variation(rws, u, Some(&decomp.omega_m));
    let outside = tv - inside_tv;
    let in_m = rws.mask(&decomp.omega_m);
    let in_omega = rws.mask(&decomp.omega);
    let outside_is_constant = (0..rws.len()).all(|x| {
        rws.row(x)
            .iter()
            .all(|&(y, _)| !((in_omega[x] && !in_m[y]) || (in_omega[y] && !in_m[x])))
    });
    let optimum = if decomp.boundary.is_empty() {
        0.0
    } else {
        let psi: Vec<(usize, f64)> = decomp.boundary.iter().map(|&x| (x, u[x])).collect();
        let problem = make_problem(rws, &decomp.omega, &psi)?;
        solve_exact(&problem, TieBreak::Minimal)?.energy
    };
    let scale = tv.abs().max(1.0);
    Ok(LeastGradientVerdict {
        least_gradient: outside_is_constant && inside_tv <= optimum + 1e-9 * scale,
        total_variation: tv,
        optimum,
        outside,
        outside_is_constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetSearch {
    /// Enumeration up to the limit, min cut beyond.
    Auto,
    Enumerate,
    MinCut,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperlevelVerdict {
    pub threshold: f64,
    pub minimal: bool,
    /// `J` of the indicator of `E_t(u_ψ)`.
    pub level_energy: f64,
    /// Smallest `J` over indicators with the same boundary trace.
    pub optimum: f64,
}

/// Whether `χ_{E_t(u_ψ)}` minimises `J` among indicators of subsets of `Ω` with trace `χ_{E_t(ψ)}`.
pub fn superlevel_minimality(
    problem: &DomainProblem,
    u: &[f64],
    t: f64,
    search: SubsetSearch,
) -> Result<SuperlevelVerdict> {
    let n = problem.n_omega();
    let psi = problem.psi();
    let trace: Vec<f64> = psi.iter().map(|&v| if v > t { 1.0 } else { 0.0 }).collect();
    let indicator = |inside: &dyn Fn(usize) -> bool| -> f64 {
        let mut v: Vec<f64> = (0..n).map(|i| if inside(i) { 1.0 } else { 0.0 }).collect();
        v.extend_from_slice(&trace);
        energy_of_extension(problem, &v)
    };
    let level_energy = indicator(&|i| u[i] > t);
    let enumerate = match search {
        SubsetSearch::Enumerate if n > SUBSET_ENUMERATION_LIMIT => {
            return Err(Error::ProblemTooLarge(format!(
                "subset enumeration needs |Ω| ≤ {SUBSET_ENUMERATION_LIMIT}, got {n}"
            )))
        }
        SubsetSearch::Enumerate => true,
        SubsetSearch::Auto => n <= SUBSET_ENUMERATION_LIMIT,
        SubsetSearch::MinCut => false,
    };
    let optimum = if enumerate {
        par::argmin_range(0..(1usize << n), |mask| indicator(&|i| mask >> i & 1 == 1))
            .expect("nonempty")
            .1
    } else {
        let (net, boundary_cost) = level_network(problem, |j| psi[j - n] > t);
        net.minimal_cut(n, n + 1).value + boundary_cost
    };
    let scale = level_energy.abs().max(1.0);
    Ok(SuperlevelVerdict {
        threshold: t,
        minimal: level_energy <= optimum + 1e-9 * scale,
        level_energy,
        optimum,
    })
}

/// Midpoints between consecutive distinct boundary values.
pub fn midpoint_thresholds(problem: &DomainProblem) -> Vec<f64> {
    distinct_sorted(problem.psi()).windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}
