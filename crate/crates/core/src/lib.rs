//! Sample-based quantum-selected configuration interaction (QSCI) at desk scale.
//!
//! The crate covers the whole classical side of a QSCI experiment:
//!
//! - [`integrals`]: FCIDUMP ingestion, orbital energies and MP2 doubles amplitudes.
//! - [`detspace`]: bit-packed determinants, excitations and Slater–Condon rules.
//! - [`eig`]: sparse subspace Hamiltonians, Davidson and dense eigensolvers, occupations.
//! - [`lucj`]: local unitary cluster Jastrow states built exactly in the determinant basis.
//! - [`sampler`]: multinomial shots, the parent/descendant bit-flip noise model,
//!   uniform Fock-space selection and sample-set files.
//! - [`recovery`]: configuration recovery driven by batch-averaged occupations.
//! - [`subspace`]: batched α/β string pooling, recombination and batch-minimum energies.
//! - [`scan`]: dissociation-scan orchestration and CSV reports.

pub mod detspace;
pub mod eig;
pub mod error;
pub mod integrals;
pub mod lucj;
pub mod recovery;
pub mod rng;
pub mod sampler;
pub mod scan;
pub mod subspace;

pub use detspace::{Determinant, RawBitstring, SpinString};
pub use eig::{CIVector, OccupationVector, SparseHamiltonian};
pub use error::{QsciError, Result};
pub use integrals::{MolecularHamiltonian, T2Tensor};
pub use lucj::{AnsatzMode, LucjLayer, LucjParams};
pub use recovery::RecoveryConfig;
pub use sampler::{BitOrder, NoiseConfig, SampleSet};
pub use subspace::{BatchConfig, BatchMode, BatchResult};

/// Complex amplitude type used for all state vectors.
pub type Complex = num_complex::Complex64;
