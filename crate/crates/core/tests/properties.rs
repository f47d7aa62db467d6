use hubbard_tunneling::basis::{FockBasis, Hop};
use hubbard_tunneling::bspline;
use hubbard_tunneling::curvefit::{fit_binary_entropy, fit_bspline, xlogx};
use hubbard_tunneling::evolution::QuantumState;
use hubbard_tunneling::kan::{stratified_folds, KanConfig, KanModel};
use hubbard_tunneling::observables::{Bipartition, Observer};
use hubbard_tunneling::system::Spin;
use hubbard_tunneling::Complex64;
use proptest::prelude::*;

fn state_strategy(dim: usize) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            QuantumState::from_amplitudes(v.iter().map(|(a, b)| Complex64::new(a / norm, b / norm)).collect())
        })
}

fn law_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (0.1f64..3.0, 0.1f64..3.0, prop::collection::vec((0.001f64..0.2, -0.01f64..0.01), 5..40)).prop_map(
        |(c1, c2, draws)| {
            draws
                .into_iter()
                .map(|(n, noise)| {
                    let s = c1 * xlogx(n).unwrap() + c2 * xlogx(1.0 - n).unwrap();
                    (n, -s + noise)
                })
                .collect()
        },
    )
}

fn sse(points: &[(f64, f64)], c1: f64, c2: f64) -> f64 {
    points
        .iter()
        .map(|&(n, s)| (s - c1 * xlogx(n).unwrap() - c2 * xlogx(1.0 - n).unwrap()).powi(2))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hopping_is_reversible(
        sites in 2usize..7,
        n_up in 0usize..3,
        n_down in 0usize..3,
        pick in 0usize..10_000,
        bond in 0usize..6,
        down in any::<bool>(),
    ) {
        prop_assume!(n_up <= sites && n_down <= sites);
        let basis = FockBasis::new(sites, n_up, n_down).unwrap();
        let from = pick % basis.dimension();
        let site = 1 + bond % (sites - 1);
        let spin = if down { Spin::Down } else { Spin::Up };
        for (there, back) in [(Hop::Right, Hop::Left), (Hop::Left, Hop::Right)] {
            if let Some((to, sign)) = basis.hop_element(from, site, spin, there) {
                let (home, sign_back) = basis.hop_element(to, site, spin, back).unwrap();
                prop_assert_eq!(home, from);
                prop_assert_eq!(sign * sign_back, 1.0);
            }
        }
    }

    #[test]
    fn index_of_inverts_state(sites in 1usize..9, n_up in 0usize..4, n_down in 0usize..4) {
        prop_assume!(n_up <= sites && n_down <= sites);
        let basis = FockBasis::new(sites, n_up, n_down).unwrap();
        for (i, s) in basis.states().iter().enumerate() {
            prop_assert_eq!(basis.index_of(*s), Some(i));
        }
    }

    #[test]
    fn observables_ignore_global_phase(psi in state_strategy(36), theta in -10.0f64..10.0) {
        let basis = FockBasis::new(6, 1, 1).unwrap();
        let observer = Observer::new(&basis, Bipartition::post_barrier(6).unwrap()).unwrap();
        let (n, s) = observer.measure(&psi).unwrap();
        let (n2, s2) = observer.measure(&psi.with_global_phase(theta)).unwrap();
        prop_assert!((n - n2).abs() < 1e-12);
        prop_assert!((s - s2).abs() < 1e-10);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(psi in state_strategy(64)) {
        let basis = FockBasis::new(8, 1, 1).unwrap();
        let observer = Observer::new(&basis, Bipartition::post_barrier(8).unwrap()).unwrap();
        let rho_a = observer.reduced_density_matrix(&psi).unwrap();
        let rho_b = observer.complement_density_matrix(&psi).unwrap();
        let (sa, sb) = (rho_a.von_neumann_entropy(), rho_b.von_neumann_entropy());
        prop_assert!((sa - sb).abs() < 1e-10, "{} vs {}", sa, sb);
        prop_assert!((rho_a.trace() - 1.0).abs() < 1e-12);
        prop_assert!(sa >= 0.0 && sa <= (rho_a.patterns().len() as f64).ln() + 1e-12);
        let n = observer.density(&psi).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&n));
    }

    #[test]
    fn binary_fit_is_least_squares(points in law_points(), d1 in -0.05f64..0.05, d2 in -0.05f64..0.05) {
        let fit = fit_binary_entropy(&points).unwrap();
        prop_assert!(sse(&points, fit.c1, fit.c2) <= sse(&points, fit.c1 + d1, fit.c2 + d2) + 1e-15);
    }

    #[test]
    fn binary_fit_matches_grid_search(points in law_points()) {
        let fit = fit_binary_entropy(&points).unwrap();
        // Coarse-to-fine grid search over (c1, c2).
        let (mut best, mut step) = ((1.5, 1.5), 0.5);
        for _ in 0..30 {
            let mut local = best;
            for i in -4i32..=4 {
                for j in -4i32..=4 {
                    let cand = (best.0 + f64::from(i) * step, best.1 + f64::from(j) * step);
                    if sse(&points, cand.0, cand.1) < sse(&points, local.0, local.1) {
                        local = cand;
                    }
                }
            }
            best = local;
            step *= 0.5;
        }
        let (grid, exact) = (sse(&points, best.0, best.1), sse(&points, fit.c1, fit.c2));
        prop_assert!(exact <= grid + 1e-14, "{} > {}", exact, grid);
    }

    #[test]
    fn binary_fit_ignores_point_order(points in law_points(), seed in any::<u64>()) {
        let mut shuffled = points.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        shuffled.reverse();
        let (a, b) = (fit_binary_entropy(&points).unwrap(), fit_binary_entropy(&shuffled).unwrap());
        prop_assert!((a.c1 - b.c1).abs() < 1e-9 * a.c1.abs().max(1.0));
        prop_assert!((a.c2 - b.c2).abs() < 1e-9 * a.c2.abs().max(1.0));
        prop_assert!((a.r_squared - b.r_squared).abs() < 1e-9);
    }

    #[test]
    fn adding_origin_does_not_lower_r2(points in law_points()) {
        let before = fit_binary_entropy(&points).unwrap().r_squared;
        let mut more = points.clone();
        more.push((0.0, 0.0));
        let after = fit_binary_entropy(&more).unwrap().r_squared;
        prop_assert!(after >= before - 1e-12, "{} < {}", after, before);
    }

    #[test]
    fn spline_basis_is_partition_of_unity(degree in 0usize..5, intervals in 1usize..12, x in 0.0f64..1.0) {
        let knots = bspline::extended_uniform_knots(-1.0, 1.0, degree, intervals);
        let v = bspline::basis(&knots, degree, -1.0 + 2.0 * x);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|&b| b >= -1e-15));
    }

    #[test]
    fn spline_fit_reproduces_cubics(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let points: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let x = f64::from(i) / 59.0;
                (x, a + x * (b + x * (c + x * d)))
            })
            .collect();
        let fit = fit_bspline(&points, 5).unwrap();
        for &(x, y) in &points {
            prop_assert!((fit.eval(x).unwrap() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn folds_always_partition(sizes in prop::collection::vec(5usize..30, 1..6), folds in 2usize..6, seed in any::<u64>()) {
        let groups: Vec<f64> = sizes.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat_n(g as f64, n)).collect();
        let sets = stratified_folds(&groups, folds, seed).unwrap();
        let mut all = sets.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..groups.len()).collect::<Vec<_>>());
        for set in &sets {
            for g in 0..sizes.len() {
                prop_assert!(set.iter().any(|&r| groups[r] == g as f64));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_of_duplicated_batch_is_unchanged(seed in any::<u64>(), rows in prop::collection::vec((2.0f64..5.5, 0.0f64..0.07, -0.1f64..0.3), 3..20)) {
        let config = KanConfig { seed, ..KanConfig::default() };
        let inputs: Vec<f64> = rows.iter().flat_map(|r| [r.0, r.1]).collect();
        let targets: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let model = KanModel::init(&config, &inputs).unwrap();
        let mut g1 = vec![0.0; model.param_count()];
        let mut g2 = g1.clone();
        let l1 = model.loss_and_gradient(&inputs, &targets, &mut g1);
        let l2 = model.loss_and_gradient(&inputs.repeat(2), &targets.repeat(2), &mut g2);
        prop_assert!((l1 - l2).abs() <= 1e-14 * l1.abs().max(1e-300) + 1e-300);
        for (a, b) in g1.iter().zip(&g2) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(seed in any::<u64>(), probe in prop::collection::vec((0.0f64..8.0, -0.1f64..0.2), 1..10)) {
        let config = KanConfig { seed, ..KanConfig::default() };
        let model = KanModel::init(&config, &[2.0, 0.0, 5.5, 0.07, 3.0, 0.01]).unwrap();
        let back = KanModel::from_json(&model.to_json().unwrap()).unwrap();
        for (u, n) in probe {
            prop_assert_eq!(model.predict_one(&[u, n]).to_bits(), back.predict_one(&[u, n]).to_bits());
        }
    }
}
