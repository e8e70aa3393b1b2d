//! Truncations of two infinite spaces on which the Poincaré inequality fails,
//! with their witnesses and the interval recurrence that rules out bounded
//! calibrations on the infinite two-row graph.

use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::problem::{make_problem, DomainProblem};
use crate::space::{RandomWalkSpace, StateSpace, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Mass beyond the truncation is added to the state's self-jump.
    SelfLoopFold,
    /// Edges leaving the truncation are removed.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSpec {
    pub n: usize,
    pub tail_policy: TailPolicy,
    /// Exact mass folded or dropped.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub space: RandomWalkSpace,
    pub problem: DomainProblem,
    pub truncation: TruncationSpec,
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Chain on `0..=N` with `ν(n) = 2^{−n}` (`ν(0) = 1`), `Ω = {1..N}`, `ψ(0) = 0`.
pub fn gen_markov_counterexample(n: usize) -> Result<Counterexample> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation depth must be at least 2, got {n}")));
    }
    let ni = n as i32;
    let tail = pow2(-2 * ni) / 3.0;
    let mut rows = Vec::with_capacity(n + 1);
    let mut first = vec![(0, 2.0 / 3.0 + tail)];
    first.extend((1..=n).map(|k| (k, pow2(-2 * k as i32))));
    rows.push(first);
    for k in 1..=n {
        let p = pow2(-(k as i32));
        rows.push(vec![(0, p), (k, 1.0 - p)]);
    }
    let nu: Vec<f64> = (0..=n).map(|k| pow2(-(k as i32))).collect();
    let states = StateSpace::new((0..=n).map(|k| k.to_string()))?;
    let space = RandomWalkSpace::from_markov_kernel(states, rows, Some(nu))?;
    let omega: Vec<usize> = (1..=n).collect();
    let problem = make_problem(&space, &omega, &[(0, 0.0)])?;
    Ok(Counterexample {
        space,
        problem,
        truncation: TruncationSpec {
            n,
            tail_policy: TailPolicy::SelfLoopFold,
            tail_bound: tail,
        },
    })
}

/// `u(n) = 2^{(n−1)/q}` for `1 ≤ n ≤ k+1`, zero beyond, on `Ω = {1..N}`.
pub fn gen_poincare_witness(k: usize, q: f64, n: usize) -> Result<ScalarField> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    if k + 1 > n {
        return Err(Error::WitnessExceedsTruncation {
            needed: k + 1,
            available: n,
        });
    }
    Ok(ScalarField(
        (1..=n)
            .map(|s| if s <= k + 1 { 2f64.powf((s - 1) as f64 / q) } else { 0.0 })
            .collect(),
    ))
}

/// Index of bottom state `(k, −1)` in a two-row truncation.
pub fn tworow_bottom(k: usize) -> usize {
    k - 2
}

/// Index of top state `(k, +1)` in a two-row truncation of depth `n`.
pub fn tworow_top(k: usize, n: usize) -> usize {
    3 * n + 1 + k - 2
}

/// Two rows of columns `2..=3N+2`; `Ω` is the bottom row, `ψ(top k) = (−1)^k`.
pub fn gen_tworow_counterexample(n: usize) -> Result<Counterexample> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("truncation depth must be at least 3, got {n}")));
    }
    let last = 3 * n + 2;
    let cols = last - 1;
    let labels = (2..=last)
        .map(|k| format!("b{k}"))
        .chain((2..=last).map(|k| format!("t{k}")));
    let states = StateSpace::new(labels)?;
    let mut weights = WeightTable::new();
    let mut dropped = 0.0;
    let mut horizontal = |a: usize, w: f64| {
        if a >= 2 && a < last {
            weights.add_edge(tworow_bottom(a), tworow_bottom(a + 1), w);
            weights.add_edge(tworow_top(a, n), tworow_top(a + 1, n), w);
        } else if a == last {
            dropped += 2.0 * w;
        }
    };
    for j in 0..=n + 1 {
        let ji = j as i32;
        horizontal(3 * j, pow2(-ji));
        horizontal(3 * j + 1, pow2(-2 * ji));
        horizontal(3 * j + 2, pow2(-ji));
    }
    for k in 2..=last {
        let w = pow2(-3 * (k / 3) as i32);
        weights.add_edge(tworow_bottom(k), tworow_top(k, n), w);
    }
    let space = RandomWalkSpace::from_symmetric_weights(states, &weights)?;
    let omega: Vec<usize> = (0..cols).collect();
    let psi: Vec<(usize, f64)> = (2..=last)
        .map(|k| (tworow_top(k, n), if k % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    let problem = make_problem(&space, &omega, &psi)?;
    Ok(Counterexample {
        space,
        problem,
        truncation: TruncationSpec {
            n,
            tail_policy: TailPolicy::Drop,
            tail_bound: dropped,
        },
    })
}

/// Indicator of bottom columns `≥ 3k+2`, with `ψ = 0` on the top row.
pub fn tworow_witness(k: usize, n: usize) -> Result<(ScalarField, Vec<f64>)> {
    if 3 * k + 2 > 3 * n + 2 {
        return Err(Error::WitnessExceedsTruncation {
            needed: k,
            available: n,
        });
    }
    let u = (2..=3 * n + 2).map(|c| if c >= 3 * k + 2 { 1.0 } else { 0.0 }).collect();
    Ok((ScalarField(u), vec![0.0; 3 * n + 1]))
}

/// Closed interval; `lo > hi` never occurs, emptiness is reported as `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn scale(self, s: f64) -> Self {
        Self {
            lo: s * self.lo,
            hi: s * self.hi,
        }
    }

    fn widen(self, r: f64) -> Self {
        Self {
            lo: self.lo - r,
            hi: self.hi + r,
        }
    }

    fn clip_unit(self) -> Option<Self> {
        let lo = self.lo.max(-1.0);
        let hi = self.hi.min(1.0);
        (lo <= hi).then_some(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceStep {
    pub k: usize,
    /// Admissible `g(3k, 3k+1)`.
    pub a: Option<Interval>,
    /// Admissible `g(3k+1, 3k+2)`.
    pub b: Option<Interval>,
    /// Admissible `g(3k+2, 3k+3)`.
    pub h: Option<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "step")]
pub enum RecurrenceVerdict {
    /// Some flux is forced outside `[−1, 1]` at the given step.
    NoBoundedSolution(usize),
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceTrace {
    pub g23: f64,
    pub depth: usize,
    pub steps: Vec<RecurrenceStep>,
    pub verdict: RecurrenceVerdict,
}

/// Propagates the admissible horizontal fluxes of a calibration column by
/// column from `g(2, 3) = g23`, with the vertical fluxes free in `[−1, 1]`.
pub fn propagate_calibration_recurrence(depth: usize, g23: f64) -> Result<RecurrenceTrace> {
    if depth < 2 {
        return Err(Error::InvalidParameter(format!("recurrence depth must be at least 2, got {depth}")));
    }
    if !g23.is_finite() {
        return Err(Error::InvalidParameter("starting flux must be finite".into()));
    }
    let mut steps = Vec::new();
    let mut verdict = RecurrenceVerdict::Bounded;
    let mut h = Interval::point(g23).clip_unit();
    if h.is_none() {
        verdict = RecurrenceVerdict::NoBoundedSolution(0);
    }
    for k in 1..depth {
        let Some(cur) = h else { break };
        let ki = k as i32;
        let a = cur.scale(2.0).widen(pow2(-2 * ki)).clip_unit();
        let b = a.and_then(|a| a.scale(pow2(ki)).widen(pow2(-ki)).clip_unit());
        let next = b.and_then(|b| b.scale(pow2(-ki)).widen(pow2(-2 * ki)).clip_unit());
        steps.push(RecurrenceStep { k, a, b, h: next });
        if next.is_none() {
            verdict = RecurrenceVerdict::NoBoundedSolution(k);
        }
        h = next;
    }
    Ok(RecurrenceTrace {
        g23,
        depth,
        steps,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::poincare_ratio;

    #[test]
    fn markov_rows() {
        let c = gen_markov_counterexample(3).unwrap();
        let row: Vec<f64> = (0..4).map(|y| c.space.m(0, y)).collect();
        assert_eq!(row, vec![2.0 / 3.0 + 1.0 / 192.0, 0.25, 1.0 / 16.0, 1.0 / 64.0]);
        assert_eq!(c.space.m(2, 0), 0.25);
        assert_eq!(c.space.m(2, 2), 0.75);
        assert_eq!(c.problem.boundary(), &[0]);
        assert!(c.space.validate_reversibility(0.0).passed);
        assert!(c.space.validate_invariance(1.0 / 64.0).passed);
        assert!(matches!(gen_markov_counterexample(1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn markov_witnesses() {
        let c = gen_markov_counterexample(6).unwrap();
        let w = gen_poincare_witness(1, 1.0, 6).unwrap();
        assert_eq!(w.0, vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let w0 = gen_poincare_witness(0, 2.0, 6).unwrap();
        assert!(poincare_ratio(&c.problem, &w0, None, 2.0).unwrap().is_finite());
        for k in 1..6 {
            let w = gen_poincare_witness(k, 2.0, 6).unwrap();
            assert!(poincare_ratio(&c.problem, &w, None, 2.0).unwrap() <= 2.0 / k as f64);
        }
        assert_eq!(
            gen_poincare_witness(6, 2.0, 6),
            Err(Error::WitnessExceedsTruncation { needed: 7, available: 6 })
        );
    }

    #[test]
    fn tworow_degrees() {
        let n = 4;
        let c = gen_tworow_counterexample(n).unwrap();
        for j in 1..n {
            let ji = j as i32;
            let expect = pow2(1 - ji) + pow2(-ji) + pow2(-3 * ji);
            assert_eq!(c.space.nu(tworow_bottom(3 * j)), expect);
            assert_eq!(c.space.nu(tworow_top(3 * j, n)), expect);
        }
        assert!(c.space.is_ergodic().ergodic);
        assert_eq!(c.problem.boundary().len(), 3 * n + 1);
        assert_eq!(c.problem.psi()[0], 1.0);
        for k in 1..n {
            let (u, psi) = tworow_witness(k, n).unwrap();
            let r = poincare_ratio(&c.problem, &u, Some(&psi), 2.0).unwrap();
            assert!(r <= 3.0 * pow2(-(k as i32)), "k = {k}: {r}");
        }
    }

    #[test]
    fn recurrence_examples() {
        let t = propagate_calibration_recurrence(3, 1.0).unwrap();
        assert_eq!(t.verdict, RecurrenceVerdict::NoBoundedSolution(1));
        let t = propagate_calibration_recurrence(20, 0.0).unwrap();
        assert_eq!(t.verdict, RecurrenceVerdict::Bounded);
        assert_eq!(t.steps.len(), 19);
        assert!(propagate_calibration_recurrence(1, 0.0).is_err());
    }
}
