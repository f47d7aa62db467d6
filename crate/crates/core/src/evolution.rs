//! Exact propagation `|ψ(t)⟩ = V e^{-iEt} V^T |ψ(0)⟩` through a full
//! eigendecomposition of the (real symmetric) Hamiltonian. `ħ = 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::{FockBasis, FockState};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::system::{Spin, SystemSpec};
use crate::Complex64;

/// Largest Hamiltonian handled by the dense eigensolver.
pub const MAX_DENSE_DIMENSION: usize = 10_000;

/// Amplitudes over the basis of a fixed particle sector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Unit amplitude on a single basis vector.
    pub fn basis_vector(dimension: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Product state given by `spec.initial_placement`.
    pub fn initial(basis: &FockBasis, spec: &SystemSpec) -> Result<Self> {
        let mut state = FockState { up: 0, down: 0 };
        for p in &spec.initial_placement {
            if p.site == 0 || p.site > basis.sites() {
                return Err(Error::InvalidSystem(format!("placement site {} out of range", p.site)));
            }
            let bit = 1u32 << (p.site - 1);
            let mask = match p.spin {
                Spin::Up => &mut state.up,
                Spin::Down => &mut state.down,
            };
            if *mask & bit != 0 {
                return Err(Error::PauliExclusion {
                    site: p.site,
                    spin: p.spin.label(),
                });
            }
            *mask |= bit;
        }
        let index = basis.index_of(state).ok_or_else(|| {
            Error::InvalidSystem("initial placement does not match the particle sector".into())
        })?;
        Ok(Self::basis_vector(basis.dimension(), index))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// `max |H - V E V^T|` against a dense reference.
    pub fn reconstruction_error(&self, dense: &DMatrix<f64>) -> f64 {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.energies);
        (scaled * self.vectors.transpose() - dense).amax()
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dimension();
        (self.vectors.transpose() * &self.vectors - DMatrix::identity(n, n)).amax()
    }
}

pub fn eigendecompose(h: &SparseHamiltonian) -> Result<EigenSystem> {
    let n = h.dimension();
    if n > MAX_DENSE_DIMENSION {
        return Err(Error::Eigen(format!(
            "dimension {n} exceeds dense limit {MAX_DENSE_DIMENSION}"
        )));
    }
    if n == 0 {
        return Err(Error::Eigen("empty Hamiltonian".into()));
    }
    let eig = SymmetricEigen::try_new(h.to_dense(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { energies, vectors })
}

/// Precomputed eigenbasis expansion of one initial state.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    eig: &'a EigenSystem,
    initial: QuantumState,
    coeff_re: DVector<f64>,
    coeff_im: DVector<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(eig: &'a EigenSystem, initial: &QuantumState) -> Result<Self> {
        if initial.dimension() != eig.dimension() {
            return Err(Error::InvalidInput(format!(
                "state dimension {} does not match Hamiltonian dimension {}",
                initial.dimension(),
                eig.dimension()
            )));
        }
        let n = eig.dimension();
        let re = DVector::from_iterator(n, initial.amplitudes().iter().map(|a| a.re));
        let im = DVector::from_iterator(n, initial.amplitudes().iter().map(|a| a.im));
        let vt = eig.vectors.transpose();
        Ok(Self {
            eig,
            initial: initial.clone(),
            coeff_re: &vt * re,
            coeff_im: &vt * im,
        })
    }

    /// `ψ(t)`; `t = 0` returns the initial state unchanged.
    pub fn state_at(&self, t: f64) -> QuantumState {
        if t == 0.0 {
            return self.initial.clone();
        }
        let n = self.eig.dimension();
        let mut rot_re = DVector::zeros(n);
        let mut rot_im = DVector::zeros(n);
        for k in 0..n {
            let (s, c) = (self.eig.energies[k] * t).sin_cos();
            let (a, b) = (self.coeff_re[k], self.coeff_im[k]);
            // (a + ib)(cos - i sin)
            rot_re[k] = a * c + b * s;
            rot_im[k] = b * c - a * s;
        }
        let re = &self.eig.vectors * rot_re;
        let im = &self.eig.vectors * rot_im;
        QuantumState::from_amplitudes(
            re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect(),
        )
    }
}

/// Evolves `initial` to each time in `times` (non-negative, ascending).
pub fn evolve(initial: &QuantumState, eig: &EigenSystem, times: &[f64]) -> Result<Vec<QuantumState>> {
    validate_times(times)?;
    let prop = Propagator::new(eig, initial)?;
    Ok(times.iter().map(|&t| prop.state_at(t)).collect())
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidInput(format!("time {t} is not finite and non-negative")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("times must be ascending".into()));
    }
    Ok(())
}
