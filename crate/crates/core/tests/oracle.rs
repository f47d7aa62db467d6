mod support;

use hubbard_tunneling::basis::FockBasis;
use hubbard_tunneling::evolution::{eigendecompose, Propagator, QuantumState};
use hubbard_tunneling::hamiltonian::{Couplings, SparseHamiltonian};
use hubbard_tunneling::observables::{reduced_density_matrix, Bipartition, Observer};
use hubbard_tunneling::system::SystemSpec;
use hubbard_tunneling::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    QuantumState::from_amplitudes(amps)
}

#[test]
fn sector_hamiltonian_matches_mode_operator_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n_up, n_down) in [(1, 1), (2, 1), (1, 2), (2, 2), (1, 0), (0, 2), (3, 1)] {
        let basis = FockBasis::new(4, n_up, n_down).unwrap();
        let mut couplings = Couplings::new(4, rng.random_range(0.5..2.0), rng.random_range(0.0..8.0));
        couplings.potentials = (0..4).map(|_| rng.random_range(-3.0..6.0)).collect();
        let full = support::full_hamiltonian(4, couplings.hopping, couplings.interaction, &couplings.potentials);
        let expected = support::project(&full, &support::sector_indices(&basis));
        let h = SparseHamiltonian::build(&basis, &couplings).unwrap().to_dense();
        let diff = (h - expected).abs().max();
        assert!(diff < 1e-14, "sector ({n_up},{n_down}): {diff}");
    }
}

#[test]
fn sector_is_closed_under_full_hamiltonian() {
    let spec = SystemSpec::new(4, 3.0, 6.0);
    let basis = FockBasis::for_system(&spec).unwrap();
    let full = support::full_hamiltonian(4, 1.0, 3.0, &spec.potentials());
    let inside = support::sector_indices(&basis);
    for &i in &inside {
        for j in 0..full.ncols() {
            if full[(i, j)] != 0.0 {
                assert!(inside.contains(&j));
            }
        }
    }
}

#[test]
fn reduced_density_matrix_matches_brute_force_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n_up, n_down) in [(1, 1), (2, 1), (2, 2)] {
        let basis = FockBasis::new(4, n_up, n_down).unwrap();
        let idx = support::sector_indices(&basis);
        for a_len in 1..=3 {
            let a_sites: Vec<usize> = (5 - a_len..=4).collect();
            let part = Bipartition::new(4, &a_sites).unwrap();
            let psi = random_state(&mut rng, basis.dimension());
            let rho = reduced_density_matrix(&basis, &psi, &part).unwrap();
            let oracle = support::partial_trace(&support::embed(psi.amplitudes(), &idx, 4), 4, a_len);
            let diff = support::max_abs_diff(&rho.to_full().unwrap(), &oracle);
            assert!(diff < 1e-13, "({n_up},{n_down}) |A|={a_len}: {diff}");
            let ds = (rho.von_neumann_entropy() - support::entropy(&oracle)).abs();
            assert!(ds < 1e-10, "entropy {ds}");
        }
    }
}

#[test]
fn complementary_regions_share_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let basis = FockBasis::new(6, 1, 1).unwrap();
    let part = Bipartition::post_barrier(6).unwrap();
    let observer = Observer::new(&basis, part).unwrap();
    for _ in 0..20 {
        let psi = random_state(&mut rng, basis.dimension());
        let a = observer.reduced_density_matrix(&psi).unwrap().von_neumann_entropy();
        let b = observer.complement_density_matrix(&psi).unwrap().von_neumann_entropy();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn spectral_evolution_matches_matrix_exponential() {
    for sites in [4, 6] {
        let spec = SystemSpec::new(sites, 4.0, 6.0);
        let basis = FockBasis::for_system(&spec).unwrap();
        let h = SparseHamiltonian::for_system(&basis, &spec).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let psi0 = QuantumState::initial(&basis, &spec).unwrap();
        let prop = Propagator::new(&eig, &psi0).unwrap();
        let dense = h.to_dense();
        for t in [0.37, 5.0, 42.0, 100.0] {
            let exact = support::dense_evolve(&dense, psi0.amplitudes(), t);
            let got = prop.state_at(t);
            let diff = got
                .amplitudes()
                .iter()
                .zip(exact.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-9, "L={sites} t={t}: {diff}");
        }
    }
}

#[test]
fn expm_reference_is_unitary_for_hermitian_generators() {
    let spec = SystemSpec::new(4, 2.0, 5.0);
    let basis = FockBasis::for_system(&spec).unwrap();
    let dense = SparseHamiltonian::for_system(&basis, &spec).unwrap().to_dense();
    let u = support::expm(&dense.map(|v| Complex64::new(0.0, -v * 100.0)));
    let err = support::max_abs_diff(&(&u * u.adjoint()), &nalgebra::DMatrix::identity(16, 16));
    assert!(err < 1e-11, "{err}");
}
