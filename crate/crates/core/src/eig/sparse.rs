use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::detspace::{matrix_element, Determinant};
use crate::error::{QsciError, Result};
use crate::integrals::MolecularHamiltonian;
use crate::Complex;

/// Spaces at least this large use the α-string grouped connection search.
pub const GROUPED_THRESHOLD: usize = 64;

/// Elements smaller than this are not stored off the diagonal.
const DROP_TOLERANCE: f64 = 1e-14;

/// How connected determinant pairs are found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionSearch {
    /// Test every pair.
    AllPairs,
    /// Group determinants by α string; only α strings within a double
    /// excitation of each other are paired.
    Grouped,
    /// `Grouped` from [`GROUPED_THRESHOLD`] determinants upward.
    Auto,
}

/// Symmetric CI Hamiltonian in compressed-row form (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHamiltonian {
    n_orbitals: usize,
    space: Vec<Determinant>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    diagonal: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    /// Determinant basis, in the order rows are stored.
    pub fn space(&self) -> &[Determinant] {
        &self.space
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `out = H x`.
    pub fn matvec(&self, x: &[Complex], out: &mut [Complex]) {
        let kernel = |(i, o): (usize, &mut Complex)| {
            *o = self.row(i).fold(Complex::default(), |acc, (j, v)| acc + x[j] * v);
        };
        if self.dim() >= 4096 {
            out.par_iter_mut().enumerate().for_each(kernel);
        } else {
            out.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

fn validate(space: &[Determinant], h: &MolecularHamiltonian) -> Result<()> {
    let want = (h.n_alpha as u32, h.n_beta as u32);
    if let Some(bad) = space.iter().find(|d| d.electrons() != want) {
        return Err(QsciError::ElectronCount(format!(
            "{bad} has {:?} electrons, Hamiltonian expects {want:?}",
            bad.electrons()
        )));
    }
    if let Some(bad) = space
        .iter()
        .find(|d| !d.alpha.fits(h.n_orbitals) || !d.beta.fits(h.n_orbitals))
    {
        return Err(QsciError::InvalidInput(format!(
            "{bad} uses orbitals beyond {}",
            h.n_orbitals
        )));
    }
    Ok(())
}

pub fn build_hamiltonian(space: &[Determinant], h: &MolecularHamiltonian) -> Result<SparseHamiltonian> {
    build_hamiltonian_with(space, h, ConnectionSearch::Auto)
}

pub fn build_hamiltonian_with(
    space: &[Determinant],
    h: &MolecularHamiltonian,
    search: ConnectionSearch,
) -> Result<SparseHamiltonian> {
    validate(space, h)?;
    let index: HashMap<Determinant, usize> = space.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    if index.len() != space.len() {
        return Err(QsciError::InvalidInput("duplicate determinants in space".into()));
    }
    let grouped = match search {
        ConnectionSearch::AllPairs => false,
        ConnectionSearch::Grouped => true,
        ConnectionSearch::Auto => space.len() >= GROUPED_THRESHOLD,
    };
    // Upper-triangle neighbours of each row, sorted by column.
    let upper: Vec<Vec<usize>> = if grouped {
        grouped_neighbours(space, &index)
    } else {
        all_pairs_neighbours(space)
    };
    let upper_vals: Vec<Vec<(usize, f64)>> = upper
        .into_par_iter()
        .enumerate()
        .map(|(i, js)| {
            js.into_iter()
                .filter_map(|j| {
                    let v = matrix_element(h, space[i], space[j]);
                    (v.abs() > DROP_TOLERANCE).then_some((j, v))
                })
                .collect()
        })
        .collect();
    let diagonal: Vec<f64> = space.par_iter().map(|&d| matrix_element(h, d, d)).collect();
    Ok(assemble(h.n_orbitals, space.to_vec(), diagonal, upper_vals))
}

fn excitation_degree(a: Determinant, b: Determinant) -> u32 {
    ((a.alpha.0 ^ b.alpha.0).count_ones() + (a.beta.0 ^ b.beta.0).count_ones()) / 2
}

fn all_pairs_neighbours(space: &[Determinant]) -> Vec<Vec<usize>> {
    (0..space.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..space.len())
                .filter(|&j| excitation_degree(space[i], space[j]) <= 2)
                .collect()
        })
        .collect()
}

fn grouped_neighbours(space: &[Determinant], index: &HashMap<Determinant, usize>) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in space.iter().enumerate() {
        groups.entry(d.alpha.0).or_default().push(i);
    }
    let alphas: Vec<u32> = groups.keys().copied().collect();
    let alpha_pos: HashMap<u32, usize> = alphas.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    // α strings within a single (1) or double (2) excitation of each α string.
    let alpha_neighbours: Vec<Vec<(u32, u32)>> = alphas
        .par_iter()
        .map(|&a| {
            alphas
                .iter()
                .filter_map(|&b| {
                    let d = (a ^ b).count_ones() / 2;
                    (d == 1 || d == 2).then_some((b, d))
                })
                .collect()
        })
        .collect();

    (0..space.len())
        .into_par_iter()
        .map(|i| {
            let di = space[i];
            let mut out = Vec::new();
            for &j in &groups[&di.alpha.0] {
                if j > i && (di.beta.0 ^ space[j].beta.0).count_ones() <= 4 {
                    out.push(j);
                }
            }
            for &(b, deg) in &alpha_neighbours[alpha_pos[&di.alpha.0]] {
                if deg == 2 {
                    let partner = Determinant::new(crate::detspace::SpinString(b), di.beta);
                    if let Some(&j) = index.get(&partner) {
                        if j > i {
                            out.push(j);
                        }
                    }
                } else {
                    for &j in &groups[&b] {
                        if j > i && (di.beta.0 ^ space[j].beta.0).count_ones() <= 2 {
                            out.push(j);
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

fn assemble(
    n_orbitals: usize,
    space: Vec<Determinant>,
    diagonal: Vec<f64>,
    upper: Vec<Vec<(usize, f64)>>,
) -> SparseHamiltonian {
    let n = space.len();
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, diagonal[i])]).collect();
    for (i, entries) in upper.into_iter().enumerate() {
        for (j, v) in entries {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for mut r in rows {
        r.sort_unstable_by_key(|&(j, _)| j);
        for (j, v) in r {
            cols.push(j);
            values.push(v);
        }
        row_ptr.push(cols.len());
    }
    SparseHamiltonian {
        n_orbitals,
        space,
        row_ptr,
        cols,
        values,
        diagonal,
    }
}
