use super::{CIVector, SparseHamiltonian};
use crate::error::{QsciError, Result};
use crate::Complex;

/// Largest dimension accepted by [`dense_ground_state`].
pub const DENSE_LIMIT: usize = 2000;

/// Lowest eigenpair by full diagonalization. Reference path for small spaces.
pub fn dense_ground_state(hs: &SparseHamiltonian) -> Result<(f64, CIVector)> {
    let n = hs.dim();
    if n == 0 {
        return Err(QsciError::EmptySubspace("zero-dimensional Hamiltonian".into()));
    }
    if n > DENSE_LIMIT {
        return Err(QsciError::Capacity {
            what: "dense diagonalization dimension",
            requested: n as u128,
            limit: DENSE_LIMIT as u128,
        });
    }
    let eig = nalgebra::SymmetricEigen::new(hs.to_dense());
    let (imin, energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &e)| (i, e))
        .unwrap();
    let col = eig.eigenvectors.column(imin);
    let big = col.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
    let sign = if big < 0.0 { -1.0 } else { 1.0 };
    let pairs = hs
        .space()
        .iter()
        .copied()
        .zip(col.iter().map(|&c| Complex::new(sign * c, 0.0)))
        .collect();
    Ok((energy, CIVector::from_pairs(hs.n_orbitals(), pairs)?))
}
