//! Finite metric random walk spaces `[X, d, m]` with a positive measure `ν`.
//!
//! A space is a state set, a row-stochastic sparse kernel `m_x(y)` and a
//! measure. Builders validate what they can and record invariance,
//! reversibility and ergodicity on the value; nothing mutates afterwards.

mod build;
mod validate;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub use build::{stationary_measure, WeightTable};
pub use validate::{CertificateReport, DomainDecomposition, Ergodicity};

/// Relative detailed-balance tolerance used when builders validate.
pub const BALANCE_TOL: f64 = 1e-9;
/// Absolute tolerance on kernel row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Labels, optional coordinates and an optional distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    coords: Option<Vec<Vec<f64>>>,
    metric: Option<Vec<f64>>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate state label {l:?}")));
            }
        }
        Ok(Self {
            labels,
            index,
            coords: None,
            metric: None,
        })
    }

    /// States labelled `"0"`, `"1"`, ...
    pub fn indexed(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string())).expect("numeric labels are unique")
    }

    /// Attaches coordinates and the Euclidean metric they induce.
    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinate vectors for {} states",
                coords.len(),
                self.len()
            )));
        }
        let dim = coords.first().map_or(0, Vec::len);
        if coords.iter().any(|c| c.len() != dim || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("coordinates must be finite and of equal dimension".into()));
        }
        let n = self.len();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                table[i * n + j] = d;
                table[j * n + i] = d;
            }
        }
        self.coords = Some(coords);
        self.metric = Some(table);
        Ok(self)
    }

    /// Attaches an explicit distance table (row-major `n × n`).
    pub fn with_metric(mut self, table: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.len();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("metric table must be n × n".into()));
        }
        for i in 0..n {
            if table[i][i] != 0.0 {
                return Err(Error::InvalidParameter(format!("metric diagonal at {} is nonzero", self.labels[i])));
            }
            for j in 0..n {
                let d = table[i][j];
                if !(d.is_finite() && d >= 0.0) || d != table[j][i] {
                    return Err(Error::InvalidParameter(format!(
                        "metric entry ({}, {}) must be finite, nonnegative and symmetric",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        self.metric = Some(table.into_iter().flatten().collect());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn has_metric(&self) -> bool {
        self.metric.is_some()
    }

    /// Distance between two states, if a metric is attached.
    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.len();
        self.metric.as_ref().map(|t| t[i * n + j])
    }

    /// The explicit table, when one was supplied rather than derived from coordinates.
    pub fn metric_table(&self) -> Option<Vec<Vec<f64>>> {
        let n = self.len();
        self.metric
            .as_ref()
            .map(|t| t.chunks(n.max(1)).map(<[f64]>::to_vec).collect())
    }

    pub(crate) fn subset(&self, keep: &[usize]) -> Self {
        let labels: Vec<String> = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let coords = self
            .coords
            .as_ref()
            .map(|c| keep.iter().map(|&i| c[i].clone()).collect());
        let n = self.len();
        let metric = self.metric.as_ref().map(|t| {
            let mut out = Vec::with_capacity(keep.len() * keep.len());
            for &i in keep {
                for &j in keep {
                    out.push(t[i * n + j]);
                }
            }
            out
        });
        Self {
            labels,
            index,
            coords,
            metric,
        }
    }
}

/// Strictly positive state weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!("measure weight {w} at state {i} is not positive")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.0[i]).sum()
    }
}

/// Sparse row-stochastic kernel; row `x` lists `(y, m_x(y))` sorted by `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RandomWalk {
    /// Validates and canonicalises rows: duplicates merged, zeros dropped, sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, labels: &[String]) -> Result<Self> {
        let n = rows.len();
        let mut out = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut row: Vec<(usize, f64)> = row;
            for &(y, p) in &row {
                if y >= n {
                    return Err(Error::InvalidParameter(format!("kernel target {y} out of range")));
                }
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::NotStochastic {
                        state: labels[x].clone(),
                        sum: f64::NAN,
                    });
                }
            }
            row.sort_by_key(|&(y, _)| y);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (y, p) in row {
                match merged.last_mut() {
                    Some((ly, lp)) if *ly == y => *lp += p,
                    _ => merged.push((y, p)),
                }
            }
            merged.retain(|&(_, p)| p > 0.0);
            let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic {
                    state: labels[x].clone(),
                    sum,
                });
            }
            out.push(merged);
        }
        Ok(Self { rows: out })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// `m_x({y})`, zero off the stored support.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        let row = &self.rows[x];
        row.binary_search_by_key(&y, |&(t, _)| t).map_or(0.0, |k| row[k].1)
    }
}

/// Outcome of a validation that may not have been run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "residual", rename_all = "lowercase")]
pub enum Check {
    Unchecked,
    Pass(f64),
    Fail(f64),
}

impl Check {
    pub fn passed(self) -> Option<bool> {
        match self {
            Check::Unchecked => None,
            Check::Pass(_) => Some(true),
            Check::Fail(_) => Some(false),
        }
    }

    fn from_report(r: &CertificateReport) -> Self {
        if r.passed {
            Check::Pass(r.max_residual)
        } else {
            Check::Fail(r.max_residual)
        }
    }
}

/// A validated finite metric random walk space.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalkSpace {
    space: StateSpace,
    walk: RandomWalk,
    nu: Measure,
    invariance: Check,
    reversibility: Check,
    ergodic: Option<bool>,
    force: bool,
}

impl RandomWalkSpace {
    /// Assembles a space and runs the invariance, reversibility and ergodicity checks.
    pub fn new(space: StateSpace, walk: RandomWalk, nu: Measure) -> Result<Self> {
        if walk.len() != space.len() || nu.weights().len() != space.len() {
            return Err(Error::InvalidParameter(format!(
                "{} states, {} kernel rows, {} measure weights",
                space.len(),
                walk.len(),
                nu.weights().len()
            )));
        }
        let mut out = Self {
            space,
            walk,
            nu,
            invariance: Check::Unchecked,
            reversibility: Check::Unchecked,
            ergodic: None,
            force: false,
        };
        out.invariance = Check::from_report(&out.validate_invariance(BALANCE_TOL));
        out.reversibility = Check::from_report(&out.validate_reversibility(BALANCE_TOL));
        out.ergodic = Some(out.is_ergodic().ergodic);
        Ok(out)
    }

    /// Lets reversibility-dependent operations run on a space flagged non-reversible.
    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn states(&self) -> &StateSpace {
        &self.space
    }

    pub fn walk(&self) -> &RandomWalk {
        &self.walk
    }

    pub fn measure(&self) -> &Measure {
        &self.nu
    }

    pub fn nu(&self, x: usize) -> f64 {
        self.nu.0[x]
    }

    pub fn label(&self, x: usize) -> &str {
        self.space.label(x)
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        self.walk.row(x)
    }

    pub fn m(&self, x: usize, y: usize) -> f64 {
        self.walk.prob(x, y)
    }

    /// Mass `ν(x) m_x(y)` of the generalised product measure on the pair.
    pub fn flux(&self, x: usize, y: usize) -> f64 {
        self.nu.0[x] * self.walk.prob(x, y)
    }

    /// `m_x(A)` for a membership mask.
    pub fn m_set(&self, x: usize, mask: &[bool]) -> f64 {
        self.walk.row(x).iter().filter(|&&(y, _)| mask[y]).map(|&(_, p)| p).sum()
    }

    pub fn invariance(&self) -> Check {
        self.invariance
    }

    pub fn reversibility(&self) -> Check {
        self.reversibility
    }

    pub fn ergodic(&self) -> Option<bool> {
        self.ergodic
    }

    pub fn is_forced(&self) -> bool {
        self.force
    }

    /// Guard for operations that rely on detailed balance.
    pub fn require_reversible(&self) -> Result<()> {
        if self.force {
            return Ok(());
        }
        match self.reversibility {
            Check::Pass(_) => Ok(()),
            Check::Fail(r) => Err(Error::NotReversible(r)),
            Check::Unchecked => {
                let r = self.validate_reversibility(BALANCE_TOL);
                if r.passed {
                    Ok(())
                } else {
                    Err(Error::NotReversible(r.max_residual))
                }
            }
        }
    }

    pub(crate) fn mark_reversible(&mut self) {
        if let Check::Fail(r) | Check::Pass(r) = self.reversibility {
            self.reversibility = Check::Pass(r);
        }
    }

    /// Mask of membership for an index list.
    pub fn mask(&self, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        for &i in set {
            m[i] = true;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_must_be_unique() {
        assert!(StateSpace::new(["a", "b", "a"]).is_err());
        let s = StateSpace::new(["a", "b"]).unwrap();
        assert_eq!(s.index_of("b"), Some(1));
        assert_eq!(s.index_of("z"), None);
    }

    #[test]
    fn metric_table_is_validated() {
        let s = StateSpace::indexed(2);
        assert!(s.clone().with_metric(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(s.clone().with_metric(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(s.clone().with_metric(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        let s = s.with_metric(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(s.distance(0, 1), Some(3.0));
    }

    #[test]
    fn coords_give_euclidean_distances() {
        let s = StateSpace::indexed(2)
            .with_coords(vec![vec![0.0, 0.0], vec![3.0, 4.0]])
            .unwrap();
        assert_eq!(s.distance(1, 0), Some(5.0));
    }

    #[test]
    fn measure_rejects_nonpositive() {
        assert!(Measure::new(vec![1.0, 0.0]).is_err());
        assert!(Measure::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(Measure::new(vec![1.0, 2.0]).unwrap().total(), 3.0);
    }

    #[test]
    fn rows_are_canonicalised() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let w = RandomWalk::from_rows(vec![vec![(1, 0.5), (0, 0.0), (1, 0.5)], vec![(0, 1.0)]], &labels).unwrap();
        assert_eq!(w.row(0), &[(1, 1.0)]);
        assert_eq!(w.prob(0, 0), 0.0);
        let bad = RandomWalk::from_rows(vec![vec![(1, 0.9)], vec![(0, 1.0)]], &labels);
        assert!(matches!(bad, Err(Error::NotStochastic { .. })));
    }
}
