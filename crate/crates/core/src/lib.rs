//! Exact dynamics of two fermions tunnelling through a barrier in a
//! one-dimensional Hubbard chain, the entanglement generated on the far side
//! of the barrier, and surrogate models relating that entanglement to the
//! transmitted density.

pub mod basis;
pub mod bspline;
pub mod curvefit;
pub mod dataset;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod kan;
pub mod observables;
pub mod presets;
pub mod system;

pub type Complex64 = nalgebra::Complex<f64>;

pub use basis::{FockBasis, FockState};
pub use dataset::{sweep, SweepGrid, TrajectoryDataset};
pub use error::{Error, Result};
pub use evolution::{eigendecompose, evolve, Propagator, QuantumState};
pub use hamiltonian::SparseHamiltonian;
pub use observables::{Bipartition, Observer};
pub use system::{Placement, Spin, SystemSpec};
