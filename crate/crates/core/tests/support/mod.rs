//! Brute-force references built in the full `4^L` Fock space from explicit
//! Jordan–Wigner mode operators. Mode `2(j-1) + s` is site `j` (1-based),
//! spin `s` (0 up, 1 down); full-space index bit `m` is its occupation.

#![allow(dead_code)]

use hubbard_tunneling::basis::FockBasis;
use hubbard_tunneling::Complex64;
use nalgebra::{DMatrix, DVector};

/// Annihilation operators `c_m` for `modes` modes.
pub fn annihilators(modes: usize) -> Vec<DMatrix<f64>> {
    let dim = 1usize << modes;
    (0..modes)
        .map(|m| {
            let mut c = DMatrix::zeros(dim, dim);
            for n in 0..dim {
                if n >> m & 1 == 1 {
                    let below = (n & ((1 << m) - 1)).count_ones();
                    c[(n ^ (1 << m), n)] = if below % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
            c
        })
        .collect()
}

/// Open-chain Hubbard Hamiltonian on the whole Fock space.
pub fn full_hamiltonian(sites: usize, hopping: f64, interaction: f64, potentials: &[f64]) -> DMatrix<f64> {
    let c = annihilators(2 * sites);
    let dim = 1usize << (2 * sites);
    let mut h = DMatrix::zeros(dim, dim);
    let number = |m: usize| c[m].transpose() * &c[m];
    for j in 0..sites {
        for s in 0..2 {
            let m = 2 * j + s;
            if j + 1 < sites {
                let hop = c[m].transpose() * &c[m + 2];
                h -= (&hop + hop.transpose()) * hopping;
            }
            h += number(m) * potentials[j];
        }
        h += number(2 * j) * number(2 * j + 1) * interaction;
    }
    h
}

/// Full-space index of every basis state, in basis order.
pub fn sector_indices(basis: &FockBasis) -> Vec<usize> {
    basis
        .states()
        .iter()
        .map(|s| {
            (0..basis.sites())
                .map(|j| ((s.up >> j & 1) << (2 * j) | (s.down >> j & 1) << (2 * j + 1)) as usize)
                .sum()
        })
        .collect()
}

/// Restriction of a full-space operator to the basis states.
pub fn project(full: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), indices.len(), |i, j| full[(indices[i], indices[j])])
}

pub fn embed(amplitudes: &[Complex64], indices: &[usize], sites: usize) -> DVector<Complex64> {
    let mut full = DVector::zeros(1 << (2 * sites));
    for (a, &i) in amplitudes.iter().zip(indices) {
        full[i] = *a;
    }
    full
}

/// Reduced density matrix of the last `a_len` sites, by summing the full
/// density matrix over the occupations of the leading sites.
pub fn partial_trace(psi: &DVector<Complex64>, sites: usize, a_len: usize) -> DMatrix<Complex64> {
    let rho = psi * psi.adjoint();
    let b_dim = 1usize << (2 * (sites - a_len));
    let a_dim = 1usize << (2 * a_len);
    DMatrix::from_fn(a_dim, a_dim, |a, a2| {
        (0..b_dim).map(|b| rho[(b + a * b_dim, b + a2 * b_dim)]).sum()
    })
}

/// Matrix exponential by scaling, an 18-term Taylor series, and squaring.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let norm: f64 = (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);
    let n = a.nrows();
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=18 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i H t) psi0` through [`expm`].
pub fn dense_evolve(h: &DMatrix<f64>, psi0: &[Complex64], t: f64) -> DVector<Complex64> {
    let generator = h.map(|v| Complex64::new(0.0, -v * t));
    expm(&generator) * DVector::from_column_slice(psi0)
}

/// `-Σ λ ln λ` over eigenvalues of a Hermitian matrix, dropping `λ < 1e-12`.
pub fn entropy(rho: &DMatrix<Complex64>) -> f64 {
    let n = rho.nrows();
    // Real symmetric embedding [[Re, -Im], [Im, Re]] doubles every eigenvalue.
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = rho[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = big.symmetric_eigen().eigenvalues;
    -0.5 * eig.iter().filter(|&&l| l >= 1e-12).map(|l| l * l.ln()).sum::<f64>()
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
