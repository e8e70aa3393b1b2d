//! Exact rational feasibility for small box-constrained systems.
//!
//! Phase-one simplex over `BigRational` with Bland's rule, so cycling is
//! impossible and the verdict carries no rounding.

use num::{BigRational, Signed, Zero};

use super::BoxLp;

pub fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coefficient")
}

/// Dense rational system `A x = b`, `l ≤ x ≤ u`.
#[derive(Debug, Clone)]
pub struct RationalSystem {
    pub a: Vec<Vec<BigRational>>,
    pub b: Vec<BigRational>,
    pub lower: Vec<BigRational>,
    pub upper: Vec<BigRational>,
}

impl RationalSystem {
    /// Exact image of a floating-point LP's constraints (costs are ignored).
    pub fn from_lp(lp: &BoxLp) -> Self {
        let n = lp.num_vars();
        let a = lp
            .rows
            .iter()
            .map(|row| {
                let mut dense = vec![BigRational::zero(); n];
                for &(j, v) in row {
                    dense[j] += rational(v);
                }
                dense
            })
            .collect();
        Self {
            a,
            b: lp.rhs.iter().map(|&v| rational(v)).collect(),
            lower: lp.lower.iter().map(|&v| rational(v)).collect(),
            upper: lp.upper.iter().map(|&v| rational(v)).collect(),
        }
    }

    /// A feasible point, or `None` when the system has none.
    pub fn feasible_point(&self) -> Option<Vec<BigRational>> {
        let n = self.lower.len();
        let m = self.a.len();
        if (0..n).any(|i| self.lower[i] > self.upper[i]) {
            return None;
        }
        // shift x = l + s with 0 <= s <= w; columns: s (n) | slack t (n) | artificial (m)
        let cols = 2 * n + m;
        let rows = m + n;
        let mut t = vec![vec![BigRational::zero(); cols + 1]; rows];
        let mut basis = vec![0usize; rows];
        for k in 0..m {
            let mut rhs = self.b[k].clone();
            for j in 0..n {
                rhs -= &self.a[k][j] * &self.lower[j];
            }
            let flip = rhs.is_negative();
            for j in 0..n {
                t[k][j] = if flip { -self.a[k][j].clone() } else { self.a[k][j].clone() };
            }
            t[k][2 * n + k] = BigRational::from_integer(1.into());
            t[k][cols] = if flip { -rhs } else { rhs };
            basis[k] = 2 * n + k;
        }
        for j in 0..n {
            let r = m + j;
            t[r][j] = BigRational::from_integer(1.into());
            t[r][n + j] = BigRational::from_integer(1.into());
            t[r][cols] = &self.upper[j] - &self.lower[j];
            basis[r] = n + j;
        }
        let is_art = |c: usize| c >= 2 * n;
        // reduced costs of the phase-one objective Σ artificials
        let mut d = vec![BigRational::zero(); cols + 1];
        for c in (2 * n)..cols {
            d[c] = BigRational::from_integer(1.into());
        }
        for k in 0..m {
            for c in 0..=cols {
                let v = t[k][c].clone();
                d[c] -= v;
            }
        }
        loop {
            let Some(enter) = (0..cols).find(|&c| d[c].is_negative()) else {
                break;
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<BigRational> = None;
            for r in 0..rows {
                if t[r][enter].is_positive() {
                    let ratio = &t[r][cols] / &t[r][enter];
                    let better = match &best {
                        None => true,
                        Some(b) => ratio < *b || (ratio == *b && basis[r] < basis[leave.unwrap()]),
                    };
                    if better {
                        best = Some(ratio);
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                // unbounded direction cannot occur for a bounded phase-one objective
                break;
            };
            let piv = t[r][enter].clone();
            for c in 0..=cols {
                let v = &t[r][c] / &piv;
                t[r][c] = v;
            }
            let pivot_row = t[r].clone();
            for (i, row) in t.iter_mut().enumerate() {
                if i == r || row[enter].is_zero() {
                    continue;
                }
                let f = row[enter].clone();
                for c in 0..=cols {
                    if !pivot_row[c].is_zero() {
                        row[c] -= &f * &pivot_row[c];
                    }
                }
            }
            if !d[enter].is_zero() {
                let f = d[enter].clone();
                for c in 0..=cols {
                    if !pivot_row[c].is_zero() {
                        d[c] -= &f * &pivot_row[c];
                    }
                }
            }
            basis[r] = enter;
        }
        let infeasibility: BigRational = (0..rows)
            .filter(|&r| is_art(basis[r]))
            .map(|r| t[r][cols].clone())
            .fold(BigRational::zero(), |a, b| a + b);
        if !infeasibility.is_zero() {
            return None;
        }
        let mut s = vec![BigRational::zero(); n];
        for r in 0..rows {
            if basis[r] < n {
                s[basis[r]] = t[r][cols].clone();
            }
        }
        Some(s.into_iter().zip(&self.lower).map(|(v, l)| v + l).collect())
    }
}
