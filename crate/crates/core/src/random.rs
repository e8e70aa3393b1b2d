//! Random connected weighted graphs and Dirichlet problems on them.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::problem::{make_problem, DomainProblem};
use crate::space::{RandomWalkSpace, StateSpace, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub n: usize,
    /// Probability of each non-tree edge.
    pub density: f64,
    pub min_weight: f64,
    pub max_weight: f64,
}

impl GraphParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            density: 0.3,
            min_weight: 0.1,
            max_weight: 1.0,
        }
    }
}

/// Random spanning tree plus independent extra edges; always connected.
pub fn random_graph_space<R: Rng + ?Sized>(rng: &mut R, params: &GraphParams) -> Result<RandomWalkSpace> {
    let n = params.n.max(2);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut weights = WeightTable::new();
    let weight = |rng: &mut R| rng.random_range(params.min_weight..=params.max_weight);
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        weights.add_edge(order[i], parent, weight(rng));
    }
    for x in 0..n {
        for y in x + 1..n {
            if weights.get(x, y) == 0.0 && rng.random_bool(params.density) {
                weights.add_edge(x, y, weight(rng));
            }
        }
    }
    RandomWalkSpace::from_symmetric_weights(StateSpace::indexed(n), &weights)
}

/// Proper random domain of `omega_size` states with boundary values drawn
/// from `levels` distinct integers, or uniformly from `[−1, 1]` when `levels == 0`.
pub fn random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    rws: &RandomWalkSpace,
    omega_size: usize,
    levels: usize,
) -> Result<DomainProblem> {
    let n = rws.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut omega: Vec<usize> = order[..omega_size.clamp(1, n - 1)].to_vec();
    omega.sort_unstable();
    let decomp = rws.m_boundary(&omega);
    let psi: Vec<(usize, f64)> = decomp
        .boundary
        .iter()
        .map(|&x| {
            let v = if levels == 0 {
                rng.random_range(-1.0..=1.0)
            } else {
                rng.random_range(0..levels) as f64
            };
            (x, v)
        })
        .collect();
    make_problem(rws, &omega, &psi)
}

/// Random graph of `n` states with a random domain of `omega_size` states.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, omega_size: usize, levels: usize) -> Result<DomainProblem> {
    let rws = random_graph_space(rng, &GraphParams::new(n))?;
    random_problem(rng, &rws, omega_size, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_spaces_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..20 {
            let rws = random_graph_space(&mut rng, &GraphParams::new(n)).unwrap();
            assert!(rws.is_ergodic().ergodic);
            assert!(rws.validate_reversibility(1e-12).passed);
            let p = random_problem(&mut rng, &rws, n / 2, 3).unwrap();
            assert!(!p.boundary().is_empty());
        }
    }
}
