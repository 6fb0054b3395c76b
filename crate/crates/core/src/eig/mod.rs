//! Subspace Hamiltonians, lowest eigenpairs and orbital occupations.

mod davidson;
mod dense;
mod sparse;

pub use davidson::{ground_state, ground_state_with, DavidsonOptions};
pub use dense::{dense_ground_state, DENSE_LIMIT};
pub use sparse::{build_hamiltonian, build_hamiltonian_with, ConnectionSearch, SparseHamiltonian, GROUPED_THRESHOLD};

use crate::detspace::Determinant;
use crate::error::{QsciError, Result};
use crate::Complex;

/// A state expanded over a sorted, duplicate-free determinant subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct CIVector {
    n_orbitals: usize,
    space: Vec<Determinant>,
    amplitudes: Vec<Complex>,
}

impl CIVector {
    pub fn new(n_orbitals: usize, space: Vec<Determinant>, amplitudes: Vec<Complex>) -> Result<Self> {
        if space.len() != amplitudes.len() {
            return Err(QsciError::InvalidInput(format!(
                "{} determinants but {} amplitudes",
                space.len(),
                amplitudes.len()
            )));
        }
        if space.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QsciError::InvalidInput(
                "determinant space must be sorted and duplicate-free".into(),
            ));
        }
        if space
            .iter()
            .any(|d| !d.alpha.fits(n_orbitals) || !d.beta.fits(n_orbitals))
        {
            return Err(QsciError::InvalidInput(format!(
                "determinant outside {n_orbitals} orbitals"
            )));
        }
        Ok(CIVector {
            n_orbitals,
            space,
            amplitudes,
        })
    }

    /// Build from unordered pairs; repeated determinants are summed.
    pub fn from_pairs(n_orbitals: usize, mut pairs: Vec<(Determinant, Complex)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut space: Vec<Determinant> = Vec::with_capacity(pairs.len());
        let mut amplitudes: Vec<Complex> = Vec::with_capacity(pairs.len());
        for (d, c) in pairs {
            if space.last() == Some(&d) {
                *amplitudes.last_mut().unwrap() += c;
            } else {
                space.push(d);
                amplitudes.push(c);
            }
        }
        CIVector::new(n_orbitals, space, amplitudes)
    }

    pub fn single(n_orbitals: usize, det: Determinant) -> Self {
        CIVector {
            n_orbitals,
            space: vec![det],
            amplitudes: vec![Complex::new(1.0, 0.0)],
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn space(&self) -> &[Determinant] {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Determinant, Complex)> + '_ {
        self.space.iter().copied().zip(self.amplitudes.iter().copied())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|c| *c /= n);
        }
    }

    pub fn amplitude(&self, det: Determinant) -> Complex {
        self.space
            .binary_search(&det)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &CIVector) -> Complex {
        let (mut i, mut j) = (0, 0);
        let mut acc = Complex::default();
        while i < self.len() && j < other.len() {
            match self.space[i].cmp(&other.space[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.amplitudes[i].conj() * other.amplitudes[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Number of determinants with `|c|² > threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.amplitudes.iter().filter(|c| c.norm_sqr() > threshold).count()
    }

    /// Electron counts shared by all determinants, if any.
    pub fn electrons(&self) -> Option<(u32, u32)> {
        let first = self.space.first()?.electrons();
        self.space
            .iter()
            .all(|d| d.electrons() == first)
            .then_some(first)
    }
}

/// Average spin-orbital occupations `n[p][σ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl OccupationVector {
    pub fn n_orbitals(&self) -> usize {
        self.alpha.len()
    }

    /// Occupations of a single determinant.
    pub fn of_determinant(n_orbitals: usize, det: Determinant) -> Self {
        OccupationVector {
            alpha: (0..n_orbitals).map(|p| det.alpha.is_occupied(p) as u8 as f64).collect(),
            beta: (0..n_orbitals).map(|p| det.beta.is_occupied(p) as u8 as f64).collect(),
        }
    }
}

/// `n[p][σ] = (1/N_b) Σ_k Σ_i |c_i^(k)|² bit_pσ(det_i^(k))` over batch ground states.
pub fn occupations(states: &[CIVector]) -> Result<OccupationVector> {
    let first = states
        .first()
        .ok_or_else(|| QsciError::InvalidInput("no states to average".into()))?;
    let n = first.n_orbitals();
    let counts = first.electrons();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for state in states {
        if state.n_orbitals() != n || state.electrons() != counts {
            return Err(QsciError::ElectronCount(
                "states differ in orbital or electron counts".into(),
            ));
        }
        for (det, c) in state.iter() {
            let w = c.norm_sqr();
            for p in det.alpha.occupied() {
                alpha[p] += w;
            }
            for p in det.beta.occupied() {
                beta[p] += w;
            }
        }
    }
    let nb = states.len() as f64;
    alpha.iter_mut().chain(beta.iter_mut()).for_each(|x| *x /= nb);
    Ok(OccupationVector { alpha, beta })
}
