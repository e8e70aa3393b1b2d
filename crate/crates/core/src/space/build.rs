use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{Check, Measure, RandomWalk, RandomWalkSpace, StateSpace};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DENSE_STATIONARY_LIMIT: usize = 2000;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000_000;

/// Sparse nonnegative weight table `w_xy` keyed by ordered pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<(usize, usize), f64>,
}

impl WeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Undirected edges; each `(x, y, w)` sets both `w_xy` and `w_yx`. Repeats accumulate.
    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t = Self::new();
        for (x, y, w) in edges {
            t.add_edge(x, y, w);
        }
        t
    }

    /// Ordered entries taken as given, so asymmetric tables are representable.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t = Self::new();
        for (x, y, w) in entries {
            *t.entries.entry((x, y)).or_insert(0.0) += w;
        }
        t
    }

    pub fn add_edge(&mut self, x: usize, y: usize, w: f64) {
        *self.entries.entry((x, y)).or_insert(0.0) += w;
        if x != y {
            *self.entries.entry((y, x)).or_insert(0.0) += w;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries.get(&(x, y)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(x, y), &w)| (x, y, w))
    }

    /// Recovers `w_xy = ν(x) m_x(y)` from a space.
    pub fn from_space(rws: &RandomWalkSpace) -> Self {
        let mut t = Self::new();
        for x in 0..rws.len() {
            for &(y, p) in rws.row(x) {
                t.entries.insert((x, y), rws.nu(x) * p);
            }
        }
        t
    }
}

impl RandomWalkSpace {
    /// Weighted graph walk: `m_x(y) = w_xy / d_x`, `ν(x) = d_x`.
    pub fn from_symmetric_weights(states: StateSpace, weights: &WeightTable) -> Result<Self> {
        let n = states.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (x, y, w) in weights.iter() {
            if x >= n || y >= n {
                return Err(Error::InvalidParameter(format!("weight entry ({x}, {y}) out of range")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight ({}, {}) = {w} must be finite and nonnegative",
                    states.label(x),
                    states.label(y)
                )));
            }
            let back = weights.get(y, x);
            if (w - back).abs() > SYMMETRY_TOL * w.abs().max(1.0) {
                return Err(Error::AsymmetricWeights(
                    states.label(x).to_string(),
                    states.label(y).to_string(),
                    w,
                    back,
                ));
            }
            if w > 0.0 {
                rows[x].push((y, w));
            }
        }
        let degree: Vec<f64> = rows.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        if let Some(x) = degree.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedState(states.label(x).to_string()));
        }
        let kernel: Vec<Vec<(usize, f64)>> = rows
            .into_iter()
            .zip(&degree)
            .map(|(r, &d)| r.into_iter().map(|(y, w)| (y, w / d)).collect())
            .collect();
        let walk = RandomWalk::from_rows(kernel, states.labels())?;
        let nu = Measure::new(degree)?;
        let mut out = Self::new(states, walk, nu)?;
        // detailed balance holds algebraically: d_x (w_xy / d_x) = w_xy = w_yx
        out.mark_reversible();
        Ok(out)
    }

    /// Markov kernel with a given or computed stationary measure.
    pub fn from_markov_kernel(
        states: StateSpace,
        rows: Vec<Vec<(usize, f64)>>,
        pi: Option<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != states.len() {
            return Err(Error::InvalidParameter(format!(
                "{} kernel rows for {} states",
                rows.len(),
                states.len()
            )));
        }
        let walk = RandomWalk::from_rows(rows, states.labels())?;
        let nu = match pi {
            Some(pi) => Measure::new(pi)?,
            None => Measure::new(stationary_measure(&walk)?)?,
        };
        Self::new(states, walk, nu)
    }

    /// `ε`-step walk: `m_x = μ` restricted to the closed ball `B(x, ε)`, normalised.
    pub fn epsilon_step(states: StateSpace, mu: Measure, eps: f64) -> Result<Self> {
        if !states.has_metric() {
            return Err(Error::MissingMetric);
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("radius {eps} must be finite and nonnegative")));
        }
        let n = states.len();
        let rows = (0..n)
            .map(|x| {
                let ball: Vec<usize> = (0..n)
                    .filter(|&y| states.distance(x, y).unwrap() <= eps)
                    .collect();
                let mass: f64 = ball.iter().map(|&y| mu.weights()[y]).sum();
                ball.into_iter().map(|y| (y, mu.weights()[y] / mass)).collect()
            })
            .collect();
        let walk = RandomWalk::from_rows(rows, states.labels())?;
        Self::new(states, walk, mu)
    }

    /// Walk uniform (w.r.t. `μ`) on the annulus `δ < d(x, y) ≤ ε`.
    pub fn annulus_step(states: StateSpace, mu: Measure, eps: f64, delta: f64) -> Result<Self> {
        if !states.has_metric() {
            return Err(Error::MissingMetric);
        }
        if !(delta >= 0.0 && delta < eps && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "annulus radii need 0 <= delta < eps, got delta = {delta}, eps = {eps}"
            )));
        }
        let n = states.len();
        let mut rows = Vec::with_capacity(n);
        for x in 0..n {
            let shell: Vec<usize> = (0..n)
                .filter(|&y| {
                    let d = states.distance(x, y).unwrap();
                    d > delta && d <= eps
                })
                .collect();
            let mass: f64 = shell.iter().map(|&y| mu.weights()[y]).sum();
            if mass <= 0.0 {
                return Err(Error::EmptyAnnulus(states.label(x).to_string()));
            }
            rows.push(shell.into_iter().map(|y| (y, mu.weights()[y] / mass)).collect());
        }
        let walk = RandomWalk::from_rows(rows, states.labels())?;
        Self::new(states, walk, mu)
    }

    /// The space `[Ω, d, m^Ω]`: mass leaving `Ω` is folded into a self-atom.
    pub fn restrict_to_domain(&self, omega: &[usize]) -> Result<Self> {
        let mut keep: Vec<usize> = omega.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut local = vec![usize::MAX; self.len()];
        for (i, &x) in keep.iter().enumerate() {
            local[x] = i;
        }
        let rows = keep
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut row = Vec::new();
                let mut leaked = 0.0;
                for &(y, p) in self.row(x) {
                    if local[y] == usize::MAX {
                        leaked += p;
                    } else {
                        row.push((local[y], p));
                    }
                }
                if leaked > 0.0 {
                    row.push((i, leaked));
                }
                row
            })
            .collect();
        let states = self.states().subset(&keep);
        let walk = RandomWalk::from_rows(rows, states.labels())?;
        let nu = Measure::new(keep.iter().map(|&x| self.nu(x)).collect())?;
        let mut out = Self::new(states, walk, nu)?;
        out.force = self.force;
        if matches!(self.reversibility(), Check::Pass(_)) && out.validate_reversibility(super::BALANCE_TOL).passed {
            out.mark_reversible();
        }
        Ok(out)
    }
}

/// Stationary probability vector `π K = π`, `Σ π = 1`, strictly positive.
pub fn stationary_measure(walk: &RandomWalk) -> Result<Vec<f64>> {
    let n = walk.len();
    if n == 0 {
        return Err(Error::NoStationaryMeasure("empty state space".into()));
    }
    let pi = if n <= DENSE_STATIONARY_LIMIT {
        stationary_dense(walk)?
    } else {
        stationary_power(walk)?
    };
    let max = pi.iter().cloned().fold(0.0, f64::max);
    if let Some(i) = pi.iter().position(|&p| !(p > 1e-14 * max)) {
        return Err(Error::NoStationaryMeasure(format!(
            "stationary vector vanishes at state {i} (transient or disconnected structure)"
        )));
    }
    let mut residual: f64 = 0.0;
    let mut image = vec![0.0; n];
    for x in 0..n {
        for &(y, p) in walk.row(x) {
            image[y] += pi[x] * p;
        }
    }
    for y in 0..n {
        residual = residual.max((image[y] - pi[y]).abs());
    }
    if residual > 1e-9 {
        return Err(Error::NoStationaryMeasure(format!("stationary residual {residual:e}")));
    }
    Ok(pi)
}

fn stationary_dense(walk: &RandomWalk) -> Result<Vec<f64>> {
    let n = walk.len();
    // (K^T - I) π = 0 with the last equation replaced by Σ π = 1
    let mut a = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        for &(y, p) in walk.row(x) {
            a[(y, x)] += p;
        }
        a[(x, x)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoStationaryMeasure("singular stationary system".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoStationaryMeasure("singular stationary system".into()));
    }
    Ok(sol.iter().copied().collect())
}

fn stationary_power(walk: &RandomWalk) -> Result<Vec<f64>> {
    let n = walk.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITER {
        next.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..n {
            for &(y, p) in walk.row(x) {
                next[y] += pi[x] * p;
            }
        }
        // lazy averaging removes periodicity
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let v = 0.5 * (pi[i] + next[i]);
            delta = delta.max((v - pi[i]).abs());
            pi[i] = v;
        }
        if delta <= POWER_TOL {
            let s: f64 = pi.iter().sum();
            return Ok(pi.into_iter().map(|v| v / s).collect());
        }
    }
    Err(Error::NoStationaryMeasure("power iteration did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> RandomWalkSpace {
        let s = StateSpace::new(["a", "b", "c"]).unwrap();
        RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0)])).unwrap()
    }

    #[test]
    fn path_graph_measure_and_kernel() {
        let p = path3();
        assert_eq!(p.measure().weights(), &[1.0, 2.0, 1.0]);
        assert_eq!(p.row(1), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(p.row(0), &[(1, 1.0)]);
        assert!(matches!(p.reversibility(), Check::Pass(_)));
        assert_eq!(p.ergodic(), Some(true));
    }

    #[test]
    fn single_edge() {
        let s = StateSpace::new(["a", "b"]).unwrap();
        let p = RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_edges([(0, 1, 2.5)])).unwrap();
        assert_eq!(p.measure().weights(), &[2.5, 2.5]);
        assert_eq!(p.row(0), &[(1, 1.0)]);
        assert_eq!(p.row(1), &[(0, 1.0)]);
    }

    #[test]
    fn isolated_vertex_is_rejected() {
        let s = StateSpace::new(["a", "b", "c"]).unwrap();
        let err = RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_edges([(0, 1, 1.0), (0, 2, 0.0)]));
        assert_eq!(err.unwrap_err(), Error::IsolatedState("c".into()));
    }

    #[test]
    fn asymmetric_weights_are_rejected() {
        let s = StateSpace::indexed(2);
        let err = RandomWalkSpace::from_symmetric_weights(s, &WeightTable::from_entries([(0, 1, 1.0), (1, 0, 2.0)]));
        assert!(matches!(err, Err(Error::AsymmetricWeights(..))));
    }

    #[test]
    fn swap_chain_has_uniform_stationary_measure() {
        let s = StateSpace::indexed(2);
        let p = RandomWalkSpace::from_markov_kernel(s, vec![vec![(1, 1.0)], vec![(0, 1.0)]], None).unwrap();
        let w = p.measure().weights();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        assert!(matches!(p.reversibility(), Check::Pass(_)));
    }

    #[test]
    fn three_cycle_is_not_reversible() {
        let s = StateSpace::indexed(3);
        let rows = (0..3).map(|x| vec![((x + 1) % 3, 1.0)]).collect();
        let p = RandomWalkSpace::from_markov_kernel(s, rows, None).unwrap();
        for &w in p.measure().weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-14);
        }
        match p.reversibility() {
            Check::Fail(r) => assert!((r - 1.0 / 3.0).abs() < 1e-14),
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(matches!(p.invariance(), Check::Pass(_)));
    }

    #[test]
    fn transient_chain_has_no_positive_stationary_measure() {
        let s = StateSpace::indexed(2);
        let err = RandomWalkSpace::from_markov_kernel(s, vec![vec![(1, 1.0)], vec![(1, 1.0)]], None);
        assert!(matches!(err, Err(Error::NoStationaryMeasure(_))));
    }

    #[test]
    fn power_iteration_agrees_with_dense_solve() {
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let walk = RandomWalk::from_rows(
            vec![
                vec![(0, 0.2), (1, 0.8)],
                vec![(0, 0.3), (2, 0.7)],
                vec![(1, 0.5), (3, 0.5)],
                vec![(2, 1.0)],
            ],
            &labels,
        )
        .unwrap();
        let dense = stationary_dense(&walk).unwrap();
        let power = stationary_power(&walk).unwrap();
        for (a, b) in dense.iter().zip(&power) {
            assert!((a - b).abs() < 1e-10, "{dense:?} vs {power:?}");
        }
    }

    fn line(n: usize) -> StateSpace {
        StateSpace::indexed(n)
            .with_coords((0..n).map(|i| vec![i as f64]).collect())
            .unwrap()
    }

    #[test]
    fn epsilon_step_on_three_collinear_points() {
        let p = RandomWalkSpace::epsilon_step(line(3), Measure::uniform(3), 1.5).unwrap();
        assert_eq!(p.row(0), &[(0, 0.5), (1, 0.5)]);
        let third = 1.0 / 3.0;
        assert_eq!(p.row(1), &[(0, third), (1, third), (2, third)]);
        match p.reversibility() {
            Check::Fail(r) => assert!((r - (0.5 - third)).abs() < 1e-15),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_step_extremes() {
        let big = RandomWalkSpace::epsilon_step(line(4), Measure::uniform(4), 10.0).unwrap();
        for x in 0..4 {
            assert_eq!(big.row(x).len(), 4);
        }
        assert!(matches!(big.reversibility(), Check::Pass(_)));
        let small = RandomWalkSpace::epsilon_step(line(4), Measure::uniform(4), 0.5).unwrap();
        for x in 0..4 {
            assert_eq!(small.row(x), &[(x, 1.0)]);
        }
        assert_eq!(small.ergodic(), Some(false));
        assert_eq!(
            RandomWalkSpace::epsilon_step(StateSpace::indexed(2), Measure::uniform(2), 1.0).unwrap_err(),
            Error::MissingMetric
        );
    }

    #[test]
    fn annulus_on_lattice_segment() {
        let p = RandomWalkSpace::annulus_step(line(5), Measure::uniform(5), 1.5, 0.5).unwrap();
        assert_eq!(p.row(2), &[(1, 0.5), (3, 0.5)]);
        assert_eq!(p.row(0), &[(1, 1.0)]);
        // δ = 0 drops only the self-atom of the closed ball
        let a = RandomWalkSpace::annulus_step(line(3), Measure::uniform(3), 1.5, 0.0).unwrap();
        assert_eq!(a.row(1), &[(0, 0.5), (2, 0.5)]);
        assert!(matches!(
            RandomWalkSpace::annulus_step(line(3), Measure::uniform(3), 1.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert_eq!(
            RandomWalkSpace::annulus_step(line(3), Measure::uniform(3), 0.8, 0.5).unwrap_err(),
            Error::EmptyAnnulus("0".into())
        );
    }

    #[test]
    fn restriction_folds_leaked_mass() {
        let p = path3();
        let r = p.restrict_to_domain(&[0, 1]).unwrap();
        assert_eq!(r.row(0), &[(1, 1.0)]);
        assert_eq!(r.row(1), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(r.measure().weights(), &[1.0, 2.0]);
        assert!(matches!(r.reversibility(), Check::Pass(_)));
        let full = p.restrict_to_domain(&[0, 1, 2]).unwrap();
        assert_eq!(full.walk(), p.walk());
        assert_eq!(p.restrict_to_domain(&[]).unwrap_err(), Error::EmptyDomain);
    }

    #[test]
    fn weights_round_trip_through_space() {
        let p = path3();
        let w = WeightTable::from_space(&p);
        let q = RandomWalkSpace::from_symmetric_weights(p.states().clone(), &w).unwrap();
        assert_eq!(q.walk(), p.walk());
        assert_eq!(q.measure(), p.measure());
    }
}
