//! Finite metric random walk spaces and the nonlocal least gradient problem.
//!
//! The crate builds and validates random walk spaces, evaluates the nonlocal
//! calculus on them (interaction, perimeter, total variation, gradient,
//! divergence), and solves the Dirichlet problem for the nonlocal 1-Laplacian
//! three ways: exact parametric min cuts, p-Laplacian continuation, and
//! calibration search. It also estimates nonlocal Poincaré constants and
//! generates the two infinite counterexample spaces as truncations.
//!
//! ```
//! use mrws_core::{least_gradient, problem, space};
//!
//! let states = space::StateSpace::new(["a", "b", "c"]).unwrap();
//! let weights = space::WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0)]);
//! let rws = space::RandomWalkSpace::from_symmetric_weights(states, &weights).unwrap();
//! let p = problem::make_problem(&rws, &[1], &[(0, 0.0), (2, 1.0)]).unwrap();
//! let sol = least_gradient::solve_exact(&p, least_gradient::TieBreak::Minimal).unwrap();
//! assert_eq!(sol.energy, 1.0);
//! ```

pub mod calculus;
pub mod calibration;
pub mod counterexamples;
pub mod error;
pub mod least_gradient;
pub mod lp;
pub mod maxflow;
pub mod par;
pub mod plap;
pub mod poincare;
pub mod problem;
pub mod random;
pub mod space;

pub use calculus::{PairField, ScalarField};
pub use error::{Error, Result};
pub use problem::{make_problem, DomainProblem};
pub use space::{Measure, RandomWalk, RandomWalkSpace, StateSpace};
