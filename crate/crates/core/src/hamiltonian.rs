//! Sparse Fermi-Hubbard Hamiltonian with a site-dependent potential.

use std::io::Write;

use nalgebra::DMatrix;
use crate::Complex64;

use crate::basis::{FockBasis, Hop};
use crate::error::{Error, Result};
use crate::system::{Spin, SystemSpec};

/// Coupling constants in units of the hopping amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    pub hopping: f64,
    pub interaction: f64,
    /// Potential per site, index `j - 1` for site `j`.
    pub potentials: Vec<f64>,
}

impl Couplings {
    pub fn new(sites: usize, hopping: f64, interaction: f64) -> Self {
        Self {
            hopping,
            interaction,
            potentials: vec![0.0; sites],
        }
    }
}

impl From<&SystemSpec> for Couplings {
    fn from(spec: &SystemSpec) -> Self {
        Self {
            hopping: spec.hopping,
            interaction: spec.interaction,
            potentials: spec.potentials(),
        }
    }
}

/// Real symmetric matrix in coordinate form, entries sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dimension: usize,
    entries: Vec<(usize, usize, f64)>,
    symmetric: bool,
}

impl SparseHamiltonian {
    pub fn build(basis: &FockBasis, couplings: &Couplings) -> Result<Self> {
        let sites = basis.sites();
        if couplings.potentials.len() != sites {
            return Err(Error::InvalidInput(format!(
                "{} site potentials given for {sites} sites",
                couplings.potentials.len()
            )));
        }
        let mut entries = Vec::new();
        for (i, state) in basis.states().iter().enumerate() {
            let mut diag = couplings.interaction * f64::from(state.double_occupancy());
            for (j, v) in couplings.potentials.iter().enumerate() {
                if *v != 0.0 {
                    diag += v * f64::from(state.occupation(j + 1));
                }
            }
            if diag != 0.0 {
                entries.push((i, i, diag));
            }
            if couplings.hopping == 0.0 {
                continue;
            }
            for site in 1..sites {
                for spin in [Spin::Up, Spin::Down] {
                    for dir in [Hop::Right, Hop::Left] {
                        if let Some((to, sign)) = basis.hop_element(i, site, spin, dir) {
                            entries.push((to, i, -couplings.hopping * sign));
                        }
                    }
                }
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut h = Self {
            dimension: basis.dimension(),
            entries,
            symmetric: false,
        };
        h.symmetric = h.max_asymmetry() == 0.0;
        Ok(h)
    }

    pub fn for_system(basis: &FockBasis, spec: &SystemSpec) -> Result<Self> {
        Self::build(basis, &Couplings::from(spec))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dimension];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest `|H_rc - H_cr|`.
    pub fn max_asymmetry(&self) -> f64 {
        let dense = self.to_dense();
        let mut worst = 0.0f64;
        for r in 0..self.dimension {
            for c in 0..r {
                worst = worst.max((dense[(r, c)] - dense[(c, r)]).abs());
            }
        }
        worst
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension];
        for &(r, c, v) in &self.entries {
            out[r] += psi[c] * v;
        }
        out
    }

    /// `⟨ψ|H|ψ⟩`, real for symmetric `H`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        self.apply(psi)
            .iter()
            .zip(psi)
            .map(|(hp, p)| (p.conj() * hp).re)
            .sum()
    }

    /// Writes one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        for &(r, c, v) in &self.entries {
            writeln!(out, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Diagonal of `Σ_{j∈sites} n̂_j` in the given basis.
pub fn region_number_operator(basis: &FockBasis, sites: &[usize]) -> Result<Vec<f64>> {
    if let Some(&bad) = sites.iter().find(|&&j| j == 0 || j > basis.sites()) {
        return Err(Error::InvalidInput(format!(
            "site {bad} outside 1..={}",
            basis.sites()
        )));
    }
    Ok(basis
        .states()
        .iter()
        .map(|s| sites.iter().map(|&j| f64::from(s.occupation(j))).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FockState;
    use nalgebra::SymmetricEigen;

    fn sorted_eigenvalues(h: &SparseHamiltonian) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn free_dimer_spectrum() {
        let basis = FockBasis::new(2, 1, 1).unwrap();
        let h = SparseHamiltonian::build(&basis, &Couplings::new(2, 1.0, 0.0)).unwrap();
        let e = sorted_eigenvalues(&h);
        for (got, want) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn doublon_is_an_eigenstate_without_hopping() {
        let basis = FockBasis::new(4, 1, 1).unwrap();
        let h = SparseHamiltonian::build(&basis, &Couplings::new(4, 0.0, 3.0)).unwrap();
        let i = basis.index_of(FockState { up: 0b10, down: 0b10 }).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); basis.dimension()];
        psi[i] = Complex64::new(1.0, 0.0);
        let hp = h.apply(&psi);
        for (k, v) in hp.iter().enumerate() {
            let want = if k == i { 3.0 } else { 0.0 };
            assert_eq!(v.re, want);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn barrier_term_is_additive() {
        let spec = SystemSpec::new(4, 2.0, 5.0);
        let basis = FockBasis::for_system(&spec).unwrap();
        let with = SparseHamiltonian::for_system(&basis, &spec).unwrap().to_dense();
        let without = SparseHamiltonian::build(&basis, &Couplings::new(4, 1.0, 2.0))
            .unwrap()
            .to_dense();
        let barrier = region_number_operator(&basis, &[2]).unwrap();
        let barrier2 = region_number_operator(&basis, &[3]).unwrap();
        for r in 0..basis.dimension() {
            for c in 0..basis.dimension() {
                let extra = if r == c { 2.5 * barrier[r] + 5.0 * barrier2[r] } else { 0.0 };
                assert_eq!(with[(r, c)], without[(r, c)] + extra);
            }
        }
    }

    #[test]
    fn construction_is_exactly_symmetric() {
        for l in [4, 6, 8] {
            let spec = SystemSpec::new(l, 3.0, 6.0);
            let basis = FockBasis::for_system(&spec).unwrap();
            let h = SparseHamiltonian::for_system(&basis, &spec).unwrap();
            assert!(h.is_symmetric());
            assert_eq!(h.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn diagonal_matches_interaction_and_barrier() {
        let spec = SystemSpec::new(6, 4.0, 6.0);
        let basis = FockBasis::for_system(&spec).unwrap();
        let h = SparseHamiltonian::for_system(&basis, &spec).unwrap();
        let d = h.diagonal();
        for (i, s) in basis.states().iter().enumerate() {
            let want = 4.0 * f64::from(s.double_occupancy())
                + 3.0 * f64::from(s.occupation(3))
                + 6.0 * f64::from(s.occupation(4));
            assert_eq!(d[i], want);
        }
    }

    #[test]
    fn off_diagonals_per_row_bounded_by_hops() {
        let spec = SystemSpec::new(8, 2.0, 5.0);
        let basis = FockBasis::for_system(&spec).unwrap();
        let h = SparseHamiltonian::for_system(&basis, &spec).unwrap();
        let mut per_row = vec![0usize; basis.dimension()];
        for &(r, c, _) in h.entries() {
            if r != c {
                per_row[r] += 1;
            }
        }
        assert!(per_row.iter().all(|&n| n <= 2 * basis.particles()));
    }

    #[test]
    fn number_operators_commute_with_h() {
        let spec = SystemSpec::new(4, 2.0, 5.0);
        let basis = FockBasis::for_system(&spec).unwrap();
        let h = SparseHamiltonian::for_system(&basis, &spec).unwrap().to_dense();
        for spin_mask in [|s: &FockState| s.up, |s: &FockState| s.down] {
            let n = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                basis.dimension(),
                basis.states().iter().map(|s| f64::from(spin_mask(s).count_ones())),
            ));
            let comm = &h * &n - &n * &h;
            assert_eq!(comm.amax(), 0.0);
        }
    }

    #[test]
    fn region_operator_examples() {
        let basis = FockBasis::new(4, 1, 1).unwrap();
        let all = region_number_operator(&basis, &[1, 2, 3, 4]).unwrap();
        assert!(all.iter().all(|&n| n == 2.0));
        let none = region_number_operator(&basis, &[]).unwrap();
        assert!(none.iter().all(|&n| n == 0.0));
        let last = region_number_operator(&basis, &[4]).unwrap();
        let i = basis.index_of(FockState { up: 0b1000, down: 0b0001 }).unwrap();
        assert_eq!(last[i], 1.0);
        assert!(region_number_operator(&basis, &[5]).is_err());
    }

    #[test]
    fn coo_export_lists_every_entry() {
        let basis = FockBasis::new(2, 1, 1).unwrap();
        let h = SparseHamiltonian::build(&basis, &Couplings::new(2, 1.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        h.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), h.entries().len());
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first.len(), 3);
    }
}
