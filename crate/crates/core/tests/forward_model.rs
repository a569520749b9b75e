use nalgebra::{DMatrix, DVector};
use netgames::games::{equilibrium, sample_benefits, BenefitRegime};
use netgames::graphs::{beta_for_rho, generate_graph, graph_laplacian, spectral_radius};
use netgames::{BetaSign, Graph, GraphModel, GraphModelParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weighted_graph(n: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..3.0], n * (n - 1) / 2)
        .prop_map(move |u| Graph::from_upper(n, &u).unwrap())
}

fn nonempty_graph() -> impl Strategy<Value = Graph> {
    (2usize..=9)
        .prop_flat_map(weighted_graph)
        .prop_filter("needs an edge", |g| g.edge_count() > 0)
}

fn model() -> impl Strategy<Value = GraphModel> {
    prop_oneof![Just(GraphModel::Er), Just(GraphModel::Ws), Just(GraphModel::Ba)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_graphs_are_valid_and_reproducible(model in model(), n in 4usize..30, seed in any::<u64>()) {
        let params = GraphModelParams::standard(model, n, seed);
        let g = generate_graph(&params).unwrap();
        let w = g.weights();
        prop_assert_eq!(w, &w.transpose());
        prop_assert!((0..n).all(|i| w[(i, i)] == 0.0));
        prop_assert!(w.iter().all(|&v| v == 0.0 || v == 1.0));
        prop_assert_eq!(generate_graph(&params).unwrap(), g);
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_quadratic_form_matches(g in nonempty_graph(), seed in any::<u64>()) {
        let n = g.n();
        let l = graph_laplacian(&g);
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() <= 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let quad = (x.transpose() * &l * &x)[0];
            let mut pairs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    pairs += 0.5 * g.weight(i, j) * (x[i] - x[j]).powi(2);
                }
            }
            prop_assert!(quad >= -1e-10);
            prop_assert!((quad - pairs).abs() <= 1e-10 * pairs.abs().max(1.0));
        }
    }

    #[test]
    fn beta_round_trips_to_target_radius(g in nonempty_graph(), target in 0.01f64..0.99, sub in any::<bool>()) {
        let sign = if sub { BetaSign::Substitute } else { BetaSign::Complement };
        let beta = beta_for_rho(&g, target, sign).unwrap();
        prop_assert_eq!(beta.signum(), sign.factor());
        let rho = spectral_radius(&(g.weights() * beta)).unwrap();
        prop_assert!((rho - target).abs() <= 1e-8);
    }

    #[test]
    fn complements_amplify_nonnegative_benefits(g in nonempty_graph(), target in 0.05f64..0.9, seed in any::<u64>()) {
        let beta = beta_for_rho(&g, target, BetaSign::Complement).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DVector::from_fn(g.n(), |_, _| rng.random_range(0.0..2.0));
        let a = equilibrium(&g, beta, &b).unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(ai, bi)| *ai >= *bi - 1e-12));
    }

    #[test]
    fn equilibrium_is_stationary(g in nonempty_graph(), target in 0.05f64..0.9, sub in any::<bool>(), seed in any::<u64>()) {
        let sign = if sub { BetaSign::Substitute } else { BetaSign::Complement };
        let beta = beta_for_rho(&g, target, sign).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DVector::from_fn(g.n(), |_, _| rng.random_range(-2.0..2.0));
        let a = equilibrium(&g, beta, &b).unwrap();
        let marginal = &b - &a + g.weights() * &a * beta;
        prop_assert!(marginal.amax() <= 1e-8);
    }

    #[test]
    fn benefits_are_reproducible(model in model(), seed in any::<u64>(), homophilous in any::<bool>()) {
        let g = generate_graph(&GraphModelParams::standard(model, 12, 5)).unwrap();
        let regime = if homophilous { BenefitRegime::homophilous(0.3) } else { BenefitRegime::independent(0.3) };
        prop_assert_eq!(sample_benefits(&g, 6, &regime, seed).unwrap(), sample_benefits(&g, 6, &regime, seed).unwrap());
    }
}

fn entry_variance(b: &DMatrix<f64>) -> f64 {
    let m = b.mean();
    b.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (b.len() - 1) as f64
}

#[test]
fn independent_benefits_have_unit_variance() {
    let g = generate_graph(&GraphModelParams::er(20, 0.2, 1)).unwrap();
    let b = sample_benefits(&g, 10_000, &BenefitRegime::independent(0.0), 2).unwrap();
    let v = entry_variance(b.values());
    assert!((0.94..=1.06).contains(&v), "variance {v}");
}

#[test]
fn noise_adds_its_variance() {
    let g = generate_graph(&GraphModelParams::er(20, 0.2, 1)).unwrap();
    let b = sample_benefits(&g, 10_000, &BenefitRegime::independent(0.1f64.sqrt()), 3).unwrap();
    let v = entry_variance(b.values());
    assert!((v - 1.1).abs() <= 0.05 * 1.1, "variance {v}");
}

#[test]
fn homophilous_energy_matches_laplacian_rank() {
    for (model, seed) in [(GraphModel::Er, 4), (GraphModel::Ws, 5), (GraphModel::Ba, 6)] {
        let g = generate_graph(&GraphModelParams::standard(model, 20, seed)).unwrap();
        let l = graph_laplacian(&g);
        let b = sample_benefits(&g, 10_000, &BenefitRegime::homophilous(0.0), 7).unwrap();
        let b = b.values();
        let energy = (b.transpose() * &l * b).trace() / b.ncols() as f64;
        let rank = (g.n() - g.component_count()) as f64;
        assert!((energy - rank).abs() <= 0.05 * rank, "{model}: {energy} vs {rank}");
    }
}

#[test]
fn equilibrium_matches_neumann_series_on_generated_graphs() {
    for (i, model) in [GraphModel::Er, GraphModel::Ws, GraphModel::Ba].into_iter().enumerate() {
        let g = generate_graph(&GraphModelParams::standard(model, 20, 40 + i as u64)).unwrap();
        for (rho, sign) in [(0.3, BetaSign::Complement), (0.9, BetaSign::Substitute)] {
            let beta = beta_for_rho(&g, rho, sign).unwrap();
            let b = DVector::from_fn(20, |r, _| (r as f64 * 0.7).sin());
            let a = equilibrium(&g, beta, &b).unwrap();
            let m = g.weights() * beta;
            let mut term = b.clone();
            let mut series = b.clone();
            let depth = (1e-12f64.ln() / f64::ln(rho)).ceil() as usize + 1;
            for _ in 0..depth {
                term = &m * term;
                series += &term;
            }
            assert!((a - &series).norm() <= 1e-8 * series.norm());
        }
    }
}
