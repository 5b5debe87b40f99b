use fragkit_core::admissibility::{check, log_ratio, CheckOptions};
use fragkit_core::kernels::{FragmentKernel, RateFunction};
use fragkit_core::simulator::{
    discretize, expm_oracle, semigroup_check, simulate, step, DensityState, DiscreteGenerator, Grid,
    InitialCondition, Propagator, Scheme,
};
use fragkit_core::weight_builder::{build_btilde, exp_weight_search, solve_volterra, BuildOptions};
use fragkit_core::weights::{compare_weights, Weight};
use fragkit_core::{BuildError, QuadratureSpec};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn kernels() -> Vec<FragmentKernel<f64>> {
    vec![
        FragmentKernel::homogeneous_power(-1.0).unwrap(),
        FragmentKernel::homogeneous_power(0.0).unwrap(),
        FragmentKernel::homogeneous_power(1.5).unwrap(),
        FragmentKernel::homogeneous_tabulated(vec![(0.0, 1.0), (0.5, 3.0), (1.0, 1.0)]).unwrap(),
        FragmentKernel::boundary_binary(),
        FragmentKernel::concentrated(),
        FragmentKernel::zero(),
    ]
}

fn random_generator(n: usize, seed: u64) -> DiscreteGenerator<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid::geometric(0.1, 10.0, n).unwrap();
    let loss = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    let mut gain = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            gain[i * n + j] = rng.gen_range(0.0..0.5);
        }
    }
    let dust = (0..n).map(|_| rng.gen_range(0.0..0.2)).collect();
    DiscreteGenerator::from_parts(grid, loss, gain, dust).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_vanish_above_the_parent(k in 0usize..7, y in 0.01f64..50.0, excess in 1e-9f64..10.0) {
        let kernel = &kernels()[k];
        prop_assert_eq!(kernel.eval(y + excess, y), 0.0);
        prop_assert!(kernel.eval(y * 0.5, y) >= 0.0);
    }

    #[test]
    fn homogeneous_kernels_scale(k in 0usize..4, x in 0.01f64..1.0, y in 1.0f64..20.0, lambda in 0.1f64..10.0) {
        let kernel = &kernels()[k];
        let lhs = kernel.eval(lambda * x, lambda * y);
        let rhs = kernel.eval(x, y) / lambda;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
    }

    #[test]
    fn envelope_dominates_and_is_monotone(alpha in 0.0f64..3.0, x in 0.0f64..20.0, dx in 0.0f64..5.0) {
        let table = RateFunction::tabulated(vec![(0.0, 1.0), (2.0, 4.0), (5.0, 0.5), (9.0, 3.0)]).unwrap();
        for rate in [RateFunction::power(alpha).unwrap(), table] {
            prop_assert!(rate.envelope(x) >= rate.eval(x));
            prop_assert!(rate.envelope(x + dx) >= rate.envelope(x));
        }
    }

    #[test]
    fn weight_log_and_linear_agree(p in 0.0f64..4.0, c in 0.01f64..3.0, x in 0.01f64..30.0) {
        for w in [Weight::power(p).unwrap(), Weight::power_shifted(p).unwrap(), Weight::exponential_log_base(c).unwrap(), Weight::super_exponential()] {
            let l = w.log_eval(x).unwrap();
            if let Ok(v) = w.eval(x) {
                prop_assert!((v.ln() - l).abs() <= 1e-12 * l.abs().max(1.0));
            }
        }
    }

    #[test]
    fn ratio_ignores_weight_scale(k in 1usize..6, y in 0.2f64..30.0, lambda_exp in -8i32..8) {
        let lambda = 10f64.powi(lambda_exp);
        let kernel = &kernels()[k];
        for w in [Weight::power(2.0).unwrap(), Weight::exponential_log_base(1.0).unwrap()] {
            let a = log_ratio(kernel, &w, y, &spec()).unwrap();
            let b = log_ratio(kernel, &w.scaled(lambda).unwrap(), y, &spec()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn homogeneous_ratio_is_constant(nu in -0.9f64..2.0, p in 0.0f64..3.0, y in 0.01f64..100.0) {
        let kernel = FragmentKernel::homogeneous_power(nu).unwrap();
        let r = log_ratio(&kernel, &Weight::power(p).unwrap(), y, &spec()).unwrap().exp();
        let expected = (nu + 2.0) / (nu + p + 1.0);
        prop_assert!((r - expected).abs() < 1e-8 * expected, "r = {r}, expected {expected}");
    }

    #[test]
    fn exp_search_output_satisfies_inequalities(d1 in 0.2f64..5.0, d2 in 0.01f64..2.0, d in 1.001f64..100.0, bm in 1e-3f64..20.0) {
        match exp_weight_search(d1, d2, d, bm) {
            Ok(p) => {
                prop_assert!(p.checks.all());
                prop_assert!(p.c.powf(-p.delta) + p.delta * bm < 1.0);
            }
            Err(e) => prop_assert!(matches!(e, BuildError::SearchOverflow(_))),
        }
    }

    #[test]
    fn volterra_nodes_are_positive(beta in 0.0f64..3.0, kappa in 0.5f64..2.0, f0 in 0.1f64..2.0) {
        let s = solve_volterra(|x, y| beta * (1.0 + (y - x).sin().abs()), |y| f0 + y * 0.1, kappa, 1.0, 4.0, 0.02, 1.0).unwrap();
        for (y, v) in s.nodes.iter().zip(&s.values) {
            prop_assert!(*v >= (f0 + y * 0.1) / kappa * (1.0 - 1e-15));
        }
    }

    #[test]
    fn implicit_euler_keeps_densities_nonnegative(seed in 0u64..1000, dt in 1e-4f64..1.0) {
        let gen = random_generator(24, seed);
        let mut rng = StdRng::seed_from_u64(seed + 1);
        let mut state = DensityState::new((0..24).map(|_| rng.gen_range(0.0..1.0)).collect());
        for _ in 0..5 {
            let next = step(&state, &gen, dt, Scheme::ImplicitEuler).unwrap();
            prop_assert!(next.u.iter().all(|&v| v >= 0.0));
            prop_assert!(next.dust_mass >= state.dust_mass);
            state = next;
        }
    }

    #[test]
    fn grid_weights_sum_to_length(lo in 1e-5f64..1.0, span in 1.5f64..1e4, n in 2usize..600) {
        let g = Grid::geometric(lo, lo * span, n).unwrap();
        let s: f64 = g.weights.iter().sum();
        prop_assert!((s - (g.x_max() - g.x_min())).abs() <= 1e-12 * g.x_max());
        prop_assert!(g.weights.iter().all(|&w| w > 0.0));
    }
}

#[test]
fn btilde_dominates_on_ten_thousand_points() {
    let opts = BuildOptions::<f64> { validation_samples: 10_000, ..BuildOptions::default() };
    for k in [FragmentKernel::boundary_binary(), FragmentKernel::homogeneous_power(-1.0).unwrap(), FragmentKernel::homogeneous_power(1.0).unwrap()] {
        build_btilde(&k, 1.0, 20.0, &opts).unwrap();
    }
}

#[test]
fn volterra_error_shrinks_fourfold_per_halving() {
    let err = |dt: f64| (solve_volterra(|_, _| 1.0, |_| 1.0, 1.0, 0.0, 1.0, dt, 1.0).unwrap().values.last().unwrap() - 1f64.exp()).abs();
    let ratio = err(2e-3) / err(1e-3);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn comparison_orders_kappa2() {
    let k = FragmentKernel::boundary_binary();
    let (w1, w2) = (Weight::power(2.0).unwrap(), Weight::exponential_log_base(1.0).unwrap());
    let xs: Vec<f64> = (0..50).map(|i| 2.0 + i as f64).collect();
    let v = compare_weights(&w2, &w1, &k, &xs, &[3.0], &spec()).unwrap();
    let mut opts = CheckOptions::new(2.0);
    opts.y_max = 50.0;
    let r1 = check(&k, &w1, &opts).unwrap();
    let r2 = check(&k, &w2, &opts).unwrap();
    // (log x²)' = 2/x ≤ 1 = (log eˣ)' on [2, ∞).
    let ordered = compare_weights(&w1, &w2, &k, &xs, &[3.0], &spec()).unwrap();
    assert!(ordered.hypothesis_holds && !v.hypothesis_holds);
    assert!(r1.kappa2_hat >= r2.kappa2_hat);
}

#[test]
fn rk4_matches_oracle_at_fourth_order() {
    let gen = random_generator(16, 7);
    let u0: Vec<f64> = (0..16).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let w = Weight::power(1.0).unwrap();
    let reference = expm_oracle(&gen, 1.0, &u0).unwrap();
    let err = |dt: f64| {
        let t = simulate(&u0, &gen, 1.0, dt, Scheme::Rk4, &w, usize::MAX).unwrap();
        fragkit_core::simulator::relative_distance(&gen.grid, &w, &t.final_state.u, &reference.u).unwrap()
    };
    let ratio = err(0.1) / err(0.05);
    assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
}

#[test]
fn implicit_euler_on_random_generator_tracks_oracle() {
    let gen = random_generator(32, 3);
    let u0 = vec![1.0; 32];
    let w = Weight::power(1.0).unwrap();
    let reference = expm_oracle(&gen, 1.0, &u0).unwrap();
    let t = simulate(&u0, &gen, 1.0, 1e-3, Scheme::ImplicitEuler, &w, 100).unwrap();
    let e = fragkit_core::simulator::relative_distance(&gen.grid, &w, &t.final_state.u, &reference.u).unwrap();
    assert!(e < 5e-3, "{e}");
}

#[test]
fn semigroup_property() {
    let w = Weight::power(1.0).unwrap();
    let g = Grid::geometric(0.1, 10.0, 32).unwrap();
    let decay = discretize(&FragmentKernel::zero(), &RateFunction::power(1.0).unwrap(), &g, &spec()).unwrap();
    let u0 = InitialCondition::ExpDecay { scale: 2.0 }.sample(&g).unwrap();
    let d = semigroup_check(&decay, &u0, 0.25, 0.25, Propagator::Oracle, &w).unwrap();
    assert!(d <= 1e-12, "{d}");
    let gen = random_generator(32, 11);
    let d = semigroup_check(&gen, &u0, 0.25, 0.25, Propagator::Scheme { scheme: Scheme::ImplicitEuler, dt: 1e-4 }, &w).unwrap();
    assert!(d < 1e-3, "{d}");
    let d = semigroup_check(&gen, &u0, 0.3, 0.2, Propagator::Oracle, &w).unwrap();
    assert!(d < 1e-9, "{d}");
}

#[test]
fn sub_conserving_kernel_is_substochastic_for_mass() {
    // h(z) = z keeps a third of the parent mass.
    let k = FragmentKernel::homogeneous_tabulated(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
    let g = Grid::geometric(1e-3, 20.0, 256).unwrap();
    let w = Weight::power(1.0).unwrap();
    let gen = discretize(&k, &RateFunction::power(1.0).unwrap(), &g, &spec()).unwrap();
    assert!(gen.column_weighted_ratio(&w).unwrap().into_iter().flatten().all(|r| r <= 1.0));
    let u0 = InitialCondition::Bump { lo: 1.0, hi: 10.0 }.sample(&g).unwrap();
    let t = simulate(&u0, &gen, 1.0, 1e-2, Scheme::ImplicitEuler, &w, 1).unwrap();
    assert!(t.max_norm_increase <= 1e-10);
    assert!(t.samples.windows(2).all(|p| p[1].norm_omega <= p[0].norm_omega * (1.0 + 1e-10)));
}

#[test]
fn number_of_clusters_grows_under_binary_fragmentation() {
    let g = Grid::geometric(1e-3, 20.0, 256).unwrap();
    let gen = discretize(&FragmentKernel::homogeneous_power(0.0).unwrap(), &RateFunction::power(1.0).unwrap(), &g, &spec()).unwrap();
    let u0 = InitialCondition::Bump { lo: 1.0, hi: 10.0 }.sample(&g).unwrap();
    let t = simulate(&u0, &gen, 1.0, 1e-2, Scheme::ImplicitEuler, &Weight::power(0.0).unwrap(), 1).unwrap();
    assert!(t.samples.windows(2).all(|p| p[1].m0 >= p[0].m0 * (1.0 - 1e-12)));
}

#[test]
fn mass_conservation_with_dust() {
    let g = Grid::geometric(1e-3, 20.0, 256).unwrap();
    let gen = discretize(&FragmentKernel::homogeneous_power(0.0).unwrap(), &RateFunction::power(1.0).unwrap(), &g, &spec()).unwrap();
    assert!(gen.column_mass_defect().into_iter().flatten().all(|d| d < 1e-3));
    let u0 = InitialCondition::Bump { lo: 1.0, hi: 10.0 }.sample(&g).unwrap();
    let t = simulate(&u0, &gen, 2.0, 1e-2, Scheme::Rk4, &Weight::power(1.0).unwrap(), 10).unwrap();
    assert!(t.max_mass_defect() < 1e-3 * 2.0);
    assert!(t.dust_monotone);
}
