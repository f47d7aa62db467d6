//! Post-barrier density and bipartite von Neumann entropy.
//!
//! The reduced density matrix is assembled by scattering amplitudes into a
//! rectangular array whose rows are the occupation patterns of the traced-in
//! block A and whose columns are those of the complement B, then contracting
//! over B. Because A is a trailing block of modes no fermionic phase survives
//! the reshape. Only patterns that occur in the particle sector are stored;
//! every other entry of the full `4^|A|` matrix is exactly zero. The matrix is
//! block diagonal in the `(N↑_A, N↓_A)` sectors and is diagonalised blockwise.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::basis::{FockBasis, FockState};
use crate::error::{Error, Result};
use crate::evolution::QuantumState;
use crate::hamiltonian::region_number_operator;
use crate::Complex64;

/// Eigenvalues below this are treated as exact zeros.
pub const EIGENVALUE_CLAMP: f64 = 1e-12;

/// Split of the chain into a trailing block A and the leading rest B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    sites: usize,
    first_a: usize,
}

impl Bipartition {
    /// A = `{L/2 + 2, …, L}`, everything after the barrier.
    pub fn post_barrier(sites: usize) -> Result<Self> {
        if sites < 4 || !sites.is_multiple_of(2) {
            return Err(Error::Bipartition(format!(
                "post-barrier split needs an even chain of at least 4 sites, got {sites}"
            )));
        }
        Ok(Self {
            sites,
            first_a: sites / 2 + 2,
        })
    }

    /// Accepts only a non-empty, contiguous block ending at site `L`.
    pub fn new(sites: usize, a_sites: &[usize]) -> Result<Self> {
        let mut a = a_sites.to_vec();
        a.sort_unstable();
        a.dedup();
        let Some(&first) = a.first() else {
            return Err(Error::Bipartition("subsystem A is empty".into()));
        };
        let expected: Vec<usize> = (first..=sites).collect();
        if first == 0 || a != expected {
            return Err(Error::Bipartition(format!(
                "A = {a_sites:?} is not a contiguous block ending at site {sites}"
            )));
        }
        Ok(Self { sites, first_a: first })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn a_sites(&self) -> Vec<usize> {
        (self.first_a..=self.sites).collect()
    }

    pub fn b_sites(&self) -> Vec<usize> {
        (1..self.first_a).collect()
    }

    pub fn a_len(&self) -> usize {
        self.sites + 1 - self.first_a
    }

    /// Splits a basis state into its (A, B) local patterns. Bit `k` of an A
    /// pattern is the `k`-th site of A.
    fn split(&self, s: FockState) -> (FockState, FockState) {
        let shift = self.first_a - 1;
        let low = (1u32 << shift) - 1;
        (
            FockState { up: s.up >> shift, down: s.down >> shift },
            FockState { up: s.up & low, down: s.down & low },
        )
    }
}

/// Row/column placement of every basis state in the A × B amplitude array.
#[derive(Debug, Clone)]
struct Layout {
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_patterns: Vec<FockState>,
    col_patterns: Vec<FockState>,
}

impl Layout {
    fn new(basis: &FockBasis, part: &Bipartition) -> Self {
        let mut row_map = BTreeMap::new();
        let mut col_map = BTreeMap::new();
        for s in basis.states() {
            let (a, b) = part.split(*s);
            row_map.insert(sector_key(a), ());
            col_map.insert(sector_key(b), ());
        }
        let row_patterns: Vec<FockState> = row_map.keys().map(|k| k.2).collect();
        let col_patterns: Vec<FockState> = col_map.keys().map(|k| k.2).collect();
        let row_index: BTreeMap<FockState, usize> =
            row_patterns.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let col_index: BTreeMap<FockState, usize> =
            col_patterns.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let (rows, cols) = basis
            .states()
            .iter()
            .map(|s| {
                let (a, b) = part.split(*s);
                (row_index[&a], col_index[&b])
            })
            .unzip();
        Self { rows, cols, row_patterns, col_patterns }
    }

    fn amplitude_matrix(&self, psi: &QuantumState) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.row_patterns.len(), self.col_patterns.len());
        for ((&r, &c), a) in self.rows.iter().zip(&self.cols).zip(psi.amplitudes()) {
            m[(r, c)] = *a;
        }
        m
    }
}

/// Patterns sorted by particle sector so sector blocks are contiguous.
fn sector_key(p: FockState) -> (u32, u32, FockState) {
    (p.up.count_ones(), p.down.count_ones(), p)
}

/// Reduced density matrix over the occupation patterns present in the sector.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    block_sites: usize,
    patterns: Vec<FockState>,
    matrix: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
}

impl ReducedDensityMatrix {
    fn from_gram(block_sites: usize, patterns: Vec<FockState>, matrix: DMatrix<Complex64>) -> Self {
        let mut eigenvalues = Vec::with_capacity(patterns.len());
        let mut start = 0;
        while start < patterns.len() {
            let key = (patterns[start].up.count_ones(), patterns[start].down.count_ones());
            let end = start
                + patterns[start..]
                    .iter()
                    .take_while(|p| (p.up.count_ones(), p.down.count_ones()) == key)
                    .count();
            let n = end - start;
            if n == 1 {
                eigenvalues.push(matrix[(start, start)].re);
            } else {
                let block = matrix.view((start, start), (n, n)).into_owned();
                eigenvalues.extend(SymmetricEigen::new(block).eigenvalues.iter().copied());
            }
            start = end;
        }
        Self { block_sites, patterns, matrix, eigenvalues }
    }

    /// Number of sites in the kept block.
    pub fn block_sites(&self) -> usize {
        self.block_sites
    }

    /// Dimension of the full local space, `4^sites`.
    pub fn dimension(&self) -> usize {
        1usize << (2 * self.block_sites)
    }

    /// Local occupation patterns labelling the stored rows and columns.
    pub fn patterns(&self) -> &[FockState] {
        &self.patterns
    }

    /// Stored (compressed) matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Index of a local pattern in the full `4^sites` space, in site-major
    /// mode order (bit `2k` = `k↑`, bit `2k+1` = `k↓`).
    pub fn full_index(pattern: FockState) -> usize {
        pattern.modes() as usize
    }

    /// Embeds the stored matrix into the full `4^sites` space.
    pub fn to_full(&self) -> Result<DMatrix<Complex64>> {
        if self.block_sites > 6 {
            return Err(Error::InvalidInput(format!(
                "refusing to densify a 4^{} matrix",
                self.block_sites
            )));
        }
        let d = self.dimension();
        let mut full = DMatrix::zeros(d, d);
        for (i, pi) in self.patterns.iter().enumerate() {
            for (j, pj) in self.patterns.iter().enumerate() {
                full[(Self::full_index(*pi), Self::full_index(*pj))] = self.matrix[(i, j)];
            }
        }
        Ok(full)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Raw eigenvalues of the stored blocks (the omitted patterns contribute zeros).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `-Σ λ ln λ` in nats, eigenvalues below [`EIGENVALUE_CLAMP`] dropped.
    pub fn von_neumann_entropy(&self) -> f64 {
        entropy_from_eigenvalues(&self.eigenvalues)
    }
}

/// `-Σ λ ln λ` with `0 ln 0 = 0`.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&l| l >= EIGENVALUE_CLAMP)
        .map(|&l| -l * l.ln())
        .sum();
    // Avoid emitting -0.
    s.max(0.0) + 0.0
}

pub fn von_neumann_entropy(rho: &ReducedDensityMatrix) -> f64 {
    rho.von_neumann_entropy()
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|`.
pub fn reduced_density_matrix(
    basis: &FockBasis,
    psi: &QuantumState,
    part: &Bipartition,
) -> Result<ReducedDensityMatrix> {
    Observer::new(basis, part.clone())?.reduced_density_matrix(psi)
}

/// `ρ_B = Tr_A |ψ⟩⟨ψ|`.
pub fn complement_density_matrix(
    basis: &FockBasis,
    psi: &QuantumState,
    part: &Bipartition,
) -> Result<ReducedDensityMatrix> {
    Observer::new(basis, part.clone())?.complement_density_matrix(psi)
}

/// `⟨ψ| Σ_{j∈sites} n̂_j |ψ⟩`.
pub fn region_density(basis: &FockBasis, psi: &QuantumState, sites: &[usize]) -> Result<f64> {
    let diag = region_number_operator(basis, sites)?;
    check_dimension(basis, psi)?;
    Ok(expect_diagonal(&diag, psi))
}

fn expect_diagonal(diag: &[f64], psi: &QuantumState) -> f64 {
    diag.iter()
        .zip(psi.amplitudes())
        .map(|(n, a)| n * a.norm_sqr())
        .sum()
}

fn check_dimension(basis: &FockBasis, psi: &QuantumState) -> Result<()> {
    if psi.dimension() != basis.dimension() {
        return Err(Error::InvalidInput(format!(
            "state dimension {} does not match basis dimension {}",
            psi.dimension(),
            basis.dimension()
        )));
    }
    Ok(())
}

/// Precomputed layout for repeatedly measuring `(n_A, S_A)` on one basis.
#[derive(Debug, Clone)]
pub struct Observer {
    part: Bipartition,
    layout: Layout,
    density: Vec<f64>,
    dimension: usize,
}

impl Observer {
    pub fn new(basis: &FockBasis, part: Bipartition) -> Result<Self> {
        if part.sites() != basis.sites() {
            return Err(Error::Bipartition(format!(
                "partition of {} sites applied to a {}-site basis",
                part.sites(),
                basis.sites()
            )));
        }
        Ok(Self {
            layout: Layout::new(basis, &part),
            density: region_number_operator(basis, &part.a_sites())?,
            dimension: basis.dimension(),
            part,
        })
    }

    pub fn partition(&self) -> &Bipartition {
        &self.part
    }

    fn check(&self, psi: &QuantumState) -> Result<()> {
        if psi.dimension() != self.dimension {
            return Err(Error::InvalidInput(format!(
                "state dimension {} does not match basis dimension {}",
                psi.dimension(),
                self.dimension
            )));
        }
        Ok(())
    }

    pub fn density(&self, psi: &QuantumState) -> Result<f64> {
        self.check(psi)?;
        Ok(expect_diagonal(&self.density, psi))
    }

    pub fn reduced_density_matrix(&self, psi: &QuantumState) -> Result<ReducedDensityMatrix> {
        self.check(psi)?;
        let m = self.layout.amplitude_matrix(psi);
        let gram = &m * m.adjoint();
        Ok(ReducedDensityMatrix::from_gram(
            self.part.a_len(),
            self.layout.row_patterns.clone(),
            gram,
        ))
    }

    pub fn complement_density_matrix(&self, psi: &QuantumState) -> Result<ReducedDensityMatrix> {
        self.check(psi)?;
        let m = self.layout.amplitude_matrix(psi);
        let gram = (m.adjoint() * &m).transpose();
        Ok(ReducedDensityMatrix::from_gram(
            self.part.sites() - self.part.a_len(),
            self.layout.col_patterns.clone(),
            gram,
        ))
    }

    /// `(n_A, S_A)` for one state.
    pub fn measure(&self, psi: &QuantumState) -> Result<(f64, f64)> {
        let n = self.density(psi)?;
        let s = self.reduced_density_matrix(psi)?.von_neumann_entropy();
        Ok((n + 0.0, s))
    }
}
