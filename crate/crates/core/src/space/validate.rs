use serde::Serialize;

use super::RandomWalkSpace;

/// Pass/fail verdict with the worst residual and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub check: String,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub worst: Option<(String, String)>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn new(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            passed: true,
            max_residual: 0.0,
            tolerance,
            worst: None,
            notes: Vec::new(),
        }
    }
}

/// Ergodicity verdict; a non-ergodic space carries a partition with `L_m(A, B) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ergodicity {
    pub ergodic: bool,
    pub partition: Option<(Vec<usize>, Vec<usize>)>,
}

/// `Ω`, its `m`-boundary and `Ω_m = Ω ∪ ∂_mΩ`, all sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDecomposition {
    pub omega: Vec<usize>,
    pub boundary: Vec<usize>,
    pub omega_m: Vec<usize>,
}

impl RandomWalkSpace {
    /// Worst relative defect `|ν(y) − Σ_x ν(x) m_x(y)| / ν(y)`.
    pub fn validate_invariance(&self, tol: f64) -> CertificateReport {
        let n = self.len();
        let mut image = vec![0.0; n];
        for x in 0..n {
            let nx = self.nu(x);
            for &(y, p) in self.row(x) {
                image[y] += nx * p;
            }
        }
        let mut rep = CertificateReport::new("invariance", tol);
        for y in 0..n {
            let r = (self.nu(y) - image[y]).abs() / self.nu(y);
            if r > rep.max_residual || rep.worst.is_none() {
                rep.max_residual = r;
                rep.worst = Some((self.label(y).to_string(), self.label(y).to_string()));
            }
        }
        rep.passed = rep.max_residual <= tol;
        rep
    }

    /// Worst detailed-balance defect `|ν(x) m_x(y) − ν(y) m_y(x)|`.
    ///
    /// A pair passes when its defect is at most `tol · max(1, ν(x) m_x(y))`.
    pub fn validate_reversibility(&self, tol: f64) -> CertificateReport {
        let mut rep = CertificateReport::new("reversibility", tol);
        let mut support_symmetric = true;
        for x in 0..self.len() {
            for &(y, p) in self.row(x) {
                if y == x {
                    continue;
                }
                let fwd = self.nu(x) * p;
                let back = self.flux(y, x);
                let r = (fwd - back).abs();
                if back == 0.0 {
                    support_symmetric = false;
                }
                if r > tol * fwd.max(1.0) {
                    rep.passed = false;
                }
                if r > rep.max_residual || rep.worst.is_none() {
                    rep.max_residual = r;
                    rep.worst = Some((self.label(x).to_string(), self.label(y).to_string()));
                }
            }
        }
        if rep.passed && !support_symmetric {
            rep.passed = false;
            rep.notes.push("pair support is not symmetric".into());
        }
        rep
    }

    /// Connectivity of the support graph `{x, y}` with `ν(x) m_x(y) > 0`.
    pub fn is_ergodic(&self) -> Ergodicity {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for x in 0..n {
            for &(y, p) in self.row(x) {
                if y != x && p > 0.0 {
                    let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        if n == 0 {
            return Ergodicity {
                ergodic: true,
                partition: None,
            };
        }
        let root = find(&mut parent, 0);
        let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&x| find(&mut parent, x) == root);
        if b.is_empty() {
            Ergodicity {
                ergodic: true,
                partition: None,
            }
        } else {
            Ergodicity {
                ergodic: false,
                partition: Some((a, b)),
            }
        }
    }

    /// `∂_mΩ = {x ∉ Ω : m_x(Ω) > 0}`.
    ///
    /// # Panics
    /// If `omega` holds an index outside the state range.
    pub fn m_boundary(&self, omega: &[usize]) -> DomainDecomposition {
        let n = self.len();
        let mut omega: Vec<usize> = omega.to_vec();
        omega.sort_unstable();
        omega.dedup();
        assert!(omega.last().is_none_or(|&x| x < n), "domain index out of range");
        let mask = self.mask(&omega);
        let boundary: Vec<usize> = (0..n)
            .filter(|&x| !mask[x] && self.m_set(x, &mask) > 0.0)
            .collect();
        if boundary.is_empty() || self.measure().mass(&boundary) <= 0.0 {
            log::warn!("m-boundary of the domain has zero measure; the space may not be ergodic");
        }
        let mut omega_m = omega.clone();
        omega_m.extend_from_slice(&boundary);
        omega_m.sort_unstable();
        DomainDecomposition {
            omega,
            boundary,
            omega_m,
        }
    }
}
