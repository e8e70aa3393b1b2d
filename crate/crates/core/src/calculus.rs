//! Nonlocal calculus on a random walk space.
//!
//! All sums run over states in ascending index order, so results are
//! reproducible bit for bit regardless of the thread count.

use std::ops::{Deref, DerefMut};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{BoxLp, LpStatus, PdhgOptions};
use crate::par;
use crate::space::RandomWalkSpace;

/// Pair count above which the dual LP is refused.
pub const DUAL_MAX_PAIRS: usize = 20_000;
/// Pair count up to which the dual LP is solved by vertex enumeration.
pub const DUAL_ENUMERATION_PAIRS: usize = 20;

/// One real value per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Values on ordered pairs `(x, y)`; row `x` is sorted by `y`.
///
/// Entries not stored read as zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairField {
    rows: Vec<Vec<(usize, f64)>>,
}

impl PairField {
    pub fn empty(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    /// Evaluates `f` on every pair of the support of `ν ⊗ m_x`.
    pub fn from_support(rws: &RandomWalkSpace, f: impl Fn(usize, usize) -> f64) -> Self {
        let rows = (0..rws.len())
            .map(|x| rws.row(x).iter().map(|&(y, _)| (y, f(x, y))).collect())
            .collect();
        Self { rows }
    }

    /// Builds from unsorted triples; later duplicates overwrite earlier ones.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut out = Self::empty(n);
        for (x, y, v) in entries {
            out.set(x, y, v);
        }
        out
    }

    pub fn len_states(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        let row = &self.rows[x];
        row.binary_search_by_key(&y, |&(t, _)| t).map_or(0.0, |k| row[k].1)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows[x].binary_search_by_key(&y, |&(t, _)| t).is_ok()
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let row = &mut self.rows[x];
        match row.binary_search_by_key(&y, |&(t, _)| t) {
            Ok(k) => row[k].1 = v,
            Err(k) => row.insert(k, (y, v)),
        }
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, r)| r.iter().map(move |&(y, v)| (x, y, v)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.iter().fold(0.0, |a, (_, _, v)| a.max(v.abs()))
    }

    /// `α self + β other` on the union of supports.
    pub fn combine(&self, alpha: f64, other: &PairField, beta: f64) -> PairField {
        let mut out = PairField::empty(self.rows.len());
        for (x, y, v) in self.iter() {
            out.set(x, y, alpha * v);
        }
        for (x, y, v) in other.iter() {
            let cur = out.get(x, y);
            out.set(x, y, cur + beta * v);
        }
        out
    }
}

/// `L_m(A, B) = Σ_{x∈A} ν(x) m_x(B)`.
pub fn interaction(rws: &RandomWalkSpace, a: &[usize], b: &[usize]) -> f64 {
    let mask = rws.mask(b);
    let mut a = a.to_vec();
    a.sort_unstable();
    a.dedup();
    a.iter().map(|&x| rws.nu(x) * rws.m_set(x, &mask)).sum()
}

/// `P_m(E) = L_m(E, X \ E)`.
pub fn perimeter(rws: &RandomWalkSpace, e: &[usize]) -> f64 {
    let inside = rws.mask(e);
    let mut total = 0.0;
    for x in (0..rws.len()).filter(|&x| inside[x]) {
        let out: f64 = rws.row(x).iter().filter(|&&(y, _)| !inside[y]).map(|&(_, p)| p).sum();
        total += rws.nu(x) * out;
    }
    total
}

/// `ν(E) − L_m(E, E)`, which equals `P_m(E)` on reversible spaces.
pub fn perimeter_by_complement(rws: &RandomWalkSpace, e: &[usize]) -> f64 {
    let mut e = e.to_vec();
    e.sort_unstable();
    e.dedup();
    rws.measure().mass(&e) - interaction(rws, &e, &e)
}

/// `TV_m(u) = ½ Σ ν(x) m_x(y) |u(y) − u(x)|`, optionally over pairs inside `restrict`.
pub fn total_variation(rws: &RandomWalkSpace, u: &[f64], restrict: Option<&[usize]>) -> f64 {
    let mask = restrict.map(|r| rws.mask(r));
    let keep = |x: usize| mask.as_ref().is_none_or(|m| m[x]);
    let per_state = par::map_range(0..rws.len(), |x| {
        if !keep(x) {
            return 0.0;
        }
        let s: f64 = rws
            .row(x)
            .iter()
            .filter(|&&(y, _)| keep(y))
            .map(|&(y, p)| p * (u[y] - u[x]).abs())
            .sum();
        rws.nu(x) * s
    });
    0.5 * per_state.iter().sum::<f64>()
}

/// `∇u(x, y) = u(y) − u(x)` on the support.
pub fn nonlocal_gradient(rws: &RandomWalkSpace, u: &[f64]) -> PairField {
    PairField::from_support(rws, |x, y| u[y] - u[x])
}

/// `(div_m z)(x) = ½ Σ_y (z(x, y) − z(y, x)) m_x(y)`.
pub fn divergence(rws: &RandomWalkSpace, z: &PairField) -> ScalarField {
    ScalarField(par::map_range(0..rws.len(), |x| {
        0.5 * rws
            .row(x)
            .iter()
            .map(|&(y, p)| (z.get(x, y) - z.get(y, x)) * p)
            .sum::<f64>()
    }))
}

/// Defect in `Σ u div(z) ν = −½ Σ ∇u z ν⊗m`, together with the scale it should be read against.
pub fn greens_identity_terms(rws: &RandomWalkSpace, u: &[f64], z: &PairField) -> Result<(f64, f64)> {
    rws.require_reversible()?;
    let div = divergence(rws, z);
    let mut lhs = 0.0;
    let mut scale = 0.0;
    for x in 0..rws.len() {
        let t = u[x] * div[x] * rws.nu(x);
        lhs += t;
        scale += t.abs();
    }
    let mut rhs = 0.0;
    for x in 0..rws.len() {
        for &(y, p) in rws.row(x) {
            let t = (u[y] - u[x]) * z.get(x, y) * rws.nu(x) * p;
            rhs += t;
            scale += 0.5 * t.abs();
        }
    }
    Ok(((lhs + 0.5 * rhs).abs(), scale))
}

/// `|Σ u div(z) ν + ½ Σ ∇u z ν⊗m|`.
pub fn greens_identity_residual(rws: &RandomWalkSpace, u: &[f64], z: &PairField) -> Result<f64> {
    greens_identity_terms(rws, u, z).map(|(r, _)| r)
}

/// `∫ P_m(E_t(u)) dt` evaluated exactly over the distinct values of `u`.
pub fn coarea_integral(rws: &RandomWalkSpace, u: &[f64]) -> f64 {
    let mut levels: Vec<f64> = u.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let pieces = par::map_range(0..levels.len().saturating_sub(1), |i| {
        let t = levels[i];
        let e: Vec<usize> = (0..u.len()).filter(|&x| u[x] > t).collect();
        perimeter(rws, &e) * (levels[i + 1] - t)
    });
    pieces.iter().sum()
}

/// Optimal value and maximiser of the dual problem for `TV_m`.
#[derive(Debug, Clone, Serialize)]
pub struct DualSolution {
    pub value: f64,
    pub z: PairField,
    pub method: &'static str,
}

/// `max Σ_x u(x) (div_m z)(x) ν(x)` over `|z| ≤ 1`.
pub fn tv_dual(rws: &RandomWalkSpace, u: &[f64]) -> Result<DualSolution> {
    rws.require_reversible()?;
    // objective Σ z(x,y) c(x,y) with c = ½(u(x) ν(x)m_x(y) − u(y) ν(y)m_y(x))
    let mut pairs = Vec::new();
    let mut cost = Vec::new();
    for x in 0..rws.len() {
        for &(y, p) in rws.row(x) {
            if y == x {
                continue;
            }
            pairs.push((x, y));
            cost.push(0.5 * (u[x] * rws.nu(x) * p - u[y] * rws.flux(y, x)));
        }
    }
    if pairs.len() > DUAL_MAX_PAIRS {
        return Err(Error::ProblemTooLarge(format!("{} pair variables in the dual LP", pairs.len())));
    }
    let (z_vals, method) = if pairs.len() <= DUAL_ENUMERATION_PAIRS {
        let k = pairs.len();
        let vertex = |mask: usize| -> f64 {
            (0..k)
                .map(|i| if mask >> i & 1 == 1 { cost[i] } else { -cost[i] })
                .sum()
        };
        let (best, _) = par::argmin_range(0..(1usize << k), |mask| -vertex(mask)).expect("nonempty range");
        let z: Vec<f64> = (0..k).map(|i| if best >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        (z, "enumeration")
    } else {
        let lp = BoxLp {
            cost: cost.iter().map(|c| -c).collect(),
            lower: vec![-1.0; pairs.len()],
            upper: vec![1.0; pairs.len()],
            ..Default::default()
        };
        let out = lp.solve_pdhg(&PdhgOptions::default());
        debug_assert_eq!(out.status, LpStatus::Optimal);
        (out.x, "pdhg")
    };
    let value = z_vals.iter().zip(&cost).map(|(z, c)| z * c).sum();
    let z = PairField::from_entries(rws.len(), pairs.iter().zip(&z_vals).map(|(&(x, y), &v)| (x, y, v)));
    Ok(DualSolution { value, z, method })
}

pub fn tv_dual_value(rws: &RandomWalkSpace, u: &[f64]) -> Result<f64> {
    tv_dual(rws, u).map(|d| d.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Measure, StateSpace, WeightTable};

    fn path3() -> RandomWalkSpace {
        let s = StateSpace::new(["a", "b", "c"]).unwrap();
        RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0)])).unwrap()
    }

    #[test]
    fn interaction_on_path() {
        let p = path3();
        assert_eq!(interaction(&p, &[0], &[1]), 1.0);
        assert_eq!(interaction(&p, &[1], &[0]), 1.0);
        assert_eq!(interaction(&p, &[0, 1], &[]), 0.0);
    }

    #[test]
    fn perimeters_on_path() {
        let p = path3();
        assert_eq!(perimeter(&p, &[]), 0.0);
        assert_eq!(perimeter(&p, &[0, 1, 2]), 0.0);
        assert_eq!(perimeter(&p, &[2]), 1.0);
        assert_eq!(perimeter(&p, &[1, 2]), 1.0);
        assert_eq!(perimeter_by_complement(&p, &[1, 2]), 1.0);
        let cross = 0.5 * (p.flux(1, 2) + p.flux(2, 1));
        assert_eq!(cross, 1.0);
    }

    #[test]
    fn total_variation_of_ramp() {
        let p = path3();
        let u = [0.0, 0.5, 1.0];
        assert_eq!(total_variation(&p, &u, None), 1.0);
        assert_eq!(total_variation(&p, &[3.0; 3], None), 0.0);
        assert_eq!(total_variation(&p, &u, Some(&[0, 1])), 0.5);
        assert_eq!(coarea_integral(&p, &u), 1.0);
    }

    #[test]
    fn gradient_and_divergence_on_path() {
        let p = path3();
        let u = [0.0, 0.5, 1.0];
        let g = nonlocal_gradient(&p, &u);
        assert_eq!(g.get(1, 2), 0.5);
        assert_eq!(g.get(2, 1), -0.5);
        let d = divergence(&p, &g);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[0], 0.5);
        let sym = PairField::from_support(&p, |_, _| 2.0);
        assert!(divergence(&p, &sym).iter().all(|&v| v == 0.0));
        assert_eq!(greens_identity_residual(&p, &u, &g).unwrap(), 0.0);
    }

    #[test]
    fn dual_value_and_maximiser() {
        let p = path3();
        let u = [0.0, 0.5, 1.0];
        let d = tv_dual(&p, &u).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        let grad = nonlocal_gradient(&p, &u);
        for (x, y, z) in d.z.iter() {
            assert_eq!(z, -grad.get(x, y).signum());
        }
        assert_eq!(tv_dual_value(&p, &[1.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn non_reversible_space_is_refused() {
        let s = StateSpace::indexed(3);
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let cyc = RandomWalkSpace::from_markov_kernel(s, rows, Some(Measure::uniform(3).weights().to_vec())).unwrap();
        let z = PairField::empty(3);
        assert!(matches!(greens_identity_residual(&cyc, &[0.0; 3], &z), Err(Error::NotReversible(_))));
        assert!(matches!(tv_dual_value(&cyc, &[0.0; 3]), Err(Error::NotReversible(_))));
        let forced = cyc.with_force(true);
        assert!(greens_identity_residual(&forced, &[0.0; 3], &z).is_ok());
    }
}
