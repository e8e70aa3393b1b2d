//! The Dirichlet problem on a domain `Ω` with data `ψ` on its `m`-boundary.
//!
//! Unknowns live on `Ω`. Internally the problem keeps a local view of
//! `Ω_m = Ω ∪ ∂_mΩ` with `Ω` first (in ascending state order) followed by the
//! boundary, so a vector over `Ω` extends to `Ω_m` by appending `ψ`.

use serde::Serialize;

use crate::calculus::{PairField, ScalarField};
use crate::error::{Error, Result};
use crate::space::{DomainDecomposition, RandomWalkSpace};

/// Local copy of the kernel restricted to `Ω_m × Ω_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGraph {
    /// Local index to state index.
    pub global: Vec<usize>,
    pub n_omega: usize,
    pub nu: Vec<f64>,
    /// `(j, m_x(y))` for `y ∈ Ω_m`, `y ≠ x`, sorted by `j`.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Unordered pairs `i < j` with `a_ij = ν(x) m_x(y)` and `a_ji`.
    pub pairs: Vec<(usize, usize, f64, f64)>,
}

impl LocalGraph {
    fn build(rws: &RandomWalkSpace, decomp: &DomainDecomposition) -> Self {
        let global: Vec<usize> = decomp.omega.iter().chain(&decomp.boundary).copied().collect();
        let mut local = vec![usize::MAX; rws.len()];
        for (i, &x) in global.iter().enumerate() {
            local[x] = i;
        }
        let rows: Vec<Vec<(usize, f64)>> = global
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut r: Vec<(usize, f64)> = rws
                    .row(x)
                    .iter()
                    .filter(|&&(y, _)| local[y] != usize::MAX && local[y] != i)
                    .map(|&(y, p)| (local[y], p))
                    .collect();
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        let nu: Vec<f64> = global.iter().map(|&x| rws.nu(x)).collect();
        let mut pairs = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                let back = rows[j]
                    .binary_search_by_key(&i, |&(k, _)| k)
                    .map_or(0.0, |k| rows[j][k].1);
                if i < j {
                    pairs.push((i, j, nu[i] * p, nu[j] * back));
                } else if back == 0.0 {
                    // one-way pair whose reverse is absent
                    pairs.push((j, i, 0.0, nu[i] * p));
                }
            }
        }
        pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Self {
            global,
            n_omega: decomp.omega.len(),
            nu,
            rows,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        i < self.n_omega
    }
}

/// Domain, boundary data and the extension rule `u ↦ u_ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainProblem {
    rws: RandomWalkSpace,
    decomp: DomainDecomposition,
    psi: Vec<f64>,
    local: LocalGraph,
}

/// Poses the problem; `psi` must cover exactly the `m`-boundary of `omega`.
pub fn make_problem(rws: &RandomWalkSpace, omega: &[usize], psi: &[(usize, f64)]) -> Result<DomainProblem> {
    if omega.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if let Some(&x) = omega.iter().chain(psi.iter().map(|(x, _)| x)).find(|&&x| x >= rws.len()) {
        return Err(Error::UnknownState(x.to_string()));
    }
    let decomp = rws.m_boundary(omega);
    if decomp.boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut values = vec![None; rws.len()];
    for &(x, v) in psi {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("boundary value at {} is not finite", rws.label(x))));
        }
        values[x] = Some(v);
    }
    let in_boundary = rws.mask(&decomp.boundary);
    let missing: Vec<String> = decomp
        .boundary
        .iter()
        .filter(|&&x| values[x].is_none())
        .map(|&x| rws.label(x).to_string())
        .collect();
    let mut extra: Vec<String> = psi
        .iter()
        .filter(|&&(x, _)| !in_boundary[x])
        .map(|&(x, _)| rws.label(x).to_string())
        .collect();
    extra.dedup();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::BoundaryMismatch { missing, extra });
    }
    if rws.ergodic() == Some(false) {
        log::warn!("space is not ergodic; the boundary value problem may be ill-posed");
    }
    let psi = decomp.boundary.iter().map(|&x| values[x].unwrap()).collect();
    let local = LocalGraph::build(rws, &decomp);
    Ok(DomainProblem {
        rws: rws.clone(),
        decomp,
        psi,
        local,
    })
}

impl DomainProblem {
    pub fn space(&self) -> &RandomWalkSpace {
        &self.rws
    }

    pub fn decomposition(&self) -> &DomainDecomposition {
        &self.decomp
    }

    pub fn omega(&self) -> &[usize] {
        &self.decomp.omega
    }

    pub fn boundary(&self) -> &[usize] {
        &self.decomp.boundary
    }

    /// Boundary values aligned with [`Self::boundary`].
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn local(&self) -> &LocalGraph {
        &self.local
    }

    pub fn n_omega(&self) -> usize {
        self.decomp.omega.len()
    }

    pub fn psi_sup(&self) -> f64 {
        self.psi.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn psi_range(&self) -> (f64, f64) {
        let lo = self.psi.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Same domain with new boundary values.
    pub fn with_psi(&self, psi: Vec<f64>) -> Result<Self> {
        if psi.len() != self.psi.len() || psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("boundary data must be finite, one value per boundary state".into()));
        }
        Ok(Self { psi, ..self.clone() })
    }

    /// `u_ψ` on `Ω_m` in local order.
    pub fn extend(&self, u: &[f64]) -> Vec<f64> {
        self.extend_with(u, &self.psi)
    }

    pub fn extend_with(&self, u: &[f64], psi: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n_omega(), "one value per domain state");
        u.iter().chain(psi).copied().collect()
    }

    /// `u_ψ` as a field on the whole space, zero off `Ω_m`.
    pub fn to_global(&self, u: &[f64]) -> ScalarField {
        let mut out = ScalarField::zeros(self.rws.len());
        for (i, v) in self.extend(u).into_iter().enumerate() {
            out[self.local.global[i]] = v;
        }
        out
    }

    /// Values of a global field on `Ω`.
    pub fn restrict(&self, field: &[f64]) -> Vec<f64> {
        self.decomp.omega.iter().map(|&x| field[x]).collect()
    }

    /// Local pair field `(i, j) ↦ f(i, j)` re-keyed by state indices.
    pub fn pair_field(&self, mut f: impl FnMut(usize, usize) -> f64) -> PairField {
        let g = &self.local.global;
        let mut out = PairField::empty(self.rws.len());
        for (i, row) in self.local.rows.iter().enumerate() {
            for &(j, _) in row {
                out.set(g[i], g[j], f(i, j));
            }
        }
        out
    }
}

/// `J_ψ(u) = ½ Σ_{x,y ∈ Ω_m} ν(x) m_x(y) |u_ψ(y) − u_ψ(x)|`.
pub fn relaxed_energy(problem: &DomainProblem, u: &[f64]) -> f64 {
    energy_of_extension(problem, &problem.extend(u))
}

pub(crate) fn energy_of_extension(problem: &DomainProblem, v: &[f64]) -> f64 {
    let l = problem.local();
    let mut total = 0.0;
    for (i, row) in l.rows.iter().enumerate() {
        let s: f64 = row.iter().map(|&(j, p)| p * (v[j] - v[i]).abs()).sum();
        total += l.nu[i] * s;
    }
    0.5 * total
}

/// Clamps `u` into `[−‖ψ‖∞, ‖ψ‖∞]`.
pub fn clamp_to_boundary_range(u: &[f64], psi: &[f64]) -> Vec<f64> {
    let r = psi.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    u.iter().map(|v| v.clamp(-r, r)).collect()
}

/// Domain and boundary labels, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub omega: Vec<String>,
    pub boundary: Vec<String>,
    pub psi: Vec<f64>,
}

impl DomainProblem {
    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            omega: self.omega().iter().map(|&x| self.rws.label(x).to_string()).collect(),
            boundary: self.boundary().iter().map(|&x| self.rws.label(x).to_string()).collect(),
            psi: self.psi.clone(),
        }
    }
}
