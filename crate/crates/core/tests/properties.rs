use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrws_core::calculus::{coarea_integral, greens_identity_residual, total_variation, PairField};
use mrws_core::calibration::median_value_check;
use mrws_core::least_gradient::{solve_exact, TieBreak};
use mrws_core::plap::{residual_p, solve_p, PSolveOptions};
use mrws_core::poincare::{layered_lower_bound, poincare_ratio, ShellMetric};
use mrws_core::problem::relaxed_energy;
use mrws_core::random::{random_graph_space, random_instance, GraphParams};
use mrws_core::DomainProblem;

fn instance(seed: u64, n: usize, omega: usize, levels: usize) -> DomainProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, n, omega, levels).unwrap()
}

fn random_values(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coarea_equals_total_variation(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rws = random_graph_space(&mut rng, &GraphParams::new(n)).unwrap();
        let u = random_values(seed, n);
        let tv = total_variation(&rws, &u, None);
        prop_assert!((coarea_integral(&rws, &u) - tv).abs() <= 1e-10 * tv.max(1.0));
    }

    #[test]
    fn greens_identity(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rws = random_graph_space(&mut rng, &GraphParams::new(n)).unwrap();
        let u = random_values(seed, n);
        let z = random_values(seed.wrapping_add(1), n * n);
        let field = PairField::from_support(&rws, |x, y| z[x * n + y] - z[y * n + x]);
        prop_assert!(greens_identity_residual(&rws, &u, &field).unwrap() <= 1e-9);
    }

    #[test]
    fn exact_solution_beats_perturbations(seed in any::<u64>(), n in 3usize..16, levels in 0usize..4) {
        let p = instance(seed, n, n / 2, levels);
        let sol = solve_exact(&p, TieBreak::Minimal).unwrap();
        let u = sol.omega_values().to_vec();
        prop_assert!((relaxed_energy(&p, &u) - sol.energy).abs() <= 1e-12 * sol.energy.max(1.0));
        let noise = random_values(seed, u.len());
        for scale in [1e-3, 0.1, 1.0] {
            let v: Vec<f64> = u.iter().zip(&noise).map(|(a, b)| a + scale * b).collect();
            prop_assert!(relaxed_energy(&p, &v) >= sol.energy - 1e-9);
        }
    }

    #[test]
    fn tie_breaks_bracket_each_other(seed in any::<u64>(), n in 3usize..16) {
        let p = instance(seed, n, n / 2, 3);
        let lo = solve_exact(&p, TieBreak::Minimal).unwrap();
        let hi = solve_exact(&p, TieBreak::Maximal).unwrap();
        prop_assert!((lo.energy - hi.energy).abs() <= 1e-9 * lo.energy.max(1.0));
        for (a, b) in lo.omega_values().iter().zip(hi.omega_values()) {
            prop_assert!(a <= b);
        }
        let (min, max) = p.psi_range();
        prop_assert!(lo.u.iter().all(|&v| v >= min && v <= max));
        prop_assert!(median_value_check(&p, lo.omega_values(), 1e-9).passed);
    }

    #[test]
    fn quadratic_solution_has_zero_residual(seed in any::<u64>(), n in 3usize..20) {
        let p = instance(seed, n, n / 2, 0);
        let sol = solve_p(&p, 2.0, &PSolveOptions { poincare_advisory: false, ..Default::default() }).unwrap();
        let r = residual_p(&p, &sol.u, 2.0).unwrap();
        prop_assert!(r.sup_norm() <= 1e-9);
    }

    #[test]
    fn ratios_dominate_the_layered_bound(seed in any::<u64>(), n in 3usize..16, q in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)]) {
        let p = instance(seed, n, n / 2, 0);
        let (lb, _) = layered_lower_bound(&p, q, ShellMetric::Hop).unwrap();
        let u = random_values(seed, p.n_omega());
        let psi = random_values(seed.wrapping_add(7), p.psi().len());
        if let Ok(r) = poincare_ratio(&p, &u, Some(&psi), q) {
            prop_assert!(r >= lb * (1.0 - 1e-12), "ratio {r} below bound {lb}");
        }
    }
}
