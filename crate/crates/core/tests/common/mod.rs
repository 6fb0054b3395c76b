//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use qsci_core::detspace::{enumerate_strings, join, split_raw};
use qsci_core::integrals::{canonical_key, read_fcidump};
use qsci_core::{CIVector, Complex, Determinant, MolecularHamiltonian, RawBitstring, SpinString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load(name: &str) -> MolecularHamiltonian {
    read_fcidump(data(name)).unwrap()
}

/// Random real integrals with the full 8-fold symmetry.
pub fn random_hamiltonian(n: usize, n_alpha: usize, n_beta: usize, seed: u64) -> MolecularHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..=p {
            let v = rng.random_range(-1.0..1.0);
            one[p * n + q] = v;
            one[q * n + p] = v;
        }
    }
    let mut two = Vec::new();
    for p in 0..n as u8 {
        for q in 0..n as u8 {
            for r in 0..n as u8 {
                for s in 0..n as u8 {
                    if canonical_key([p, q, r, s]) == [p, q, r, s] {
                        two.push(([p, q, r, s], rng.random_range(-0.5..0.5)));
                    }
                }
            }
        }
    }
    MolecularHamiltonian::new(n, n_alpha, n_beta, rng.random_range(-1.0..1.0), one, two).unwrap()
}

/// Every determinant with the Hamiltonian's electron counts, sorted.
pub fn full_space(n: usize, n_alpha: usize, n_beta: usize) -> Vec<Determinant> {
    let a = enumerate_strings(n, n_alpha).unwrap();
    let b = enumerate_strings(n, n_beta).unwrap();
    a.iter().flat_map(|&x| b.iter().map(move |&y| Determinant::new(x, y))).collect()
}

// ---------------------------------------------------------------------------
// second quantization on 2N spin orbitals: mode p < N is α p, mode N + p is β p

/// `a†_m` or `a_m` on an occupation word; `None` when the result vanishes.
fn ladder(state: u64, mode: usize, create: bool) -> Option<(u64, f64)> {
    let occupied = state >> mode & 1 == 1;
    if occupied == create {
        return None;
    }
    let below = (state & ((1u64 << mode) - 1)).count_ones();
    let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((state ^ (1u64 << mode), sign))
}

/// Apply `a†_{ops[0]} a†/a ... ` right to left; each entry is (mode, create).
fn apply_string(state: u64, ops: &[(usize, bool)]) -> Option<(u64, f64)> {
    let mut s = state;
    let mut sign = 1.0;
    for &(m, c) in ops.iter().rev() {
        let (t, f) = ladder(s, m, c)?;
        s = t;
        sign *= f;
    }
    Some((s, sign))
}

/// `Ĥ |ket⟩` as a list of (word, coefficient).
pub fn apply_hamiltonian(h: &MolecularHamiltonian, ket: u64) -> Vec<(u64, f64)> {
    let n = h.n_orbitals;
    let mut out = vec![(ket, h.e_core)];
    for sigma in 0..2 {
        for p in 0..n {
            for q in 0..n {
                let v = h.h(p, q);
                if v == 0.0 {
                    continue;
                }
                if let Some((s, f)) = apply_string(ket, &[(p + sigma * n, true), (q + sigma * n, false)]) {
                    out.push((s, f * v));
                }
            }
        }
    }
    for sigma in 0..2 {
        for tau in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let v = h.eri(p, q, r, s);
                            if v == 0.0 {
                                continue;
                            }
                            let ops = [
                                (p + sigma * n, true),
                                (r + tau * n, true),
                                (s + tau * n, false),
                                (q + sigma * n, false),
                            ];
                            if let Some((w, f)) = apply_string(ket, &ops) {
                                out.push((w, 0.5 * f * v));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `⟨bra|Ĥ|ket⟩` by explicit operator algebra.
pub fn operator_element(h: &MolecularHamiltonian, bra: Determinant, ket: Determinant) -> f64 {
    let n = h.n_orbitals;
    let (b, k) = (bra.to_raw(n).0, ket.to_raw(n).0);
    apply_hamiltonian(h, k).into_iter().filter(|&(w, _)| w == b).map(|(_, v)| v).sum()
}

pub fn operator_matrix(h: &MolecularHamiltonian, space: &[Determinant]) -> DMatrix<f64> {
    let n = h.n_orbitals;
    let index: std::collections::HashMap<u64, usize> =
        space.iter().enumerate().map(|(i, d)| (d.to_raw(n).0, i)).collect();
    let mut m = DMatrix::zeros(space.len(), space.len());
    for (j, d) in space.iter().enumerate() {
        for (w, v) in apply_hamiltonian(h, d.to_raw(n).0) {
            if let Some(&i) = index.get(&w) {
                m[(i, j)] += v;
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// orbital rotations via determinant minors

fn minor(u: &DMatrix<Complex>, rows: &[usize], cols: &[usize]) -> Complex {
    let k = rows.len();
    if k == 0 {
        return Complex::new(1.0, 0.0);
    }
    DMatrix::from_fn(k, k, |i, j| u[(rows[i], cols[j])]).determinant()
}

fn occupied(s: SpinString) -> Vec<usize> {
    (0..32).filter(|&p| s.0 >> p & 1 == 1).collect()
}

/// `Û|state⟩` where `Û a†_p Û† = Σ_q U_qp a†_q`: amplitude of output
/// determinant J is `Σ_I c_I det U[Jα, Iα] det U[Jβ, Iβ]`.
pub fn rotate_by_minors(state: &CIVector, u: &DMatrix<Complex>) -> CIVector {
    let n = state.n_orbitals();
    let (na, nb) = state.electrons().unwrap();
    let mut pairs = Vec::new();
    for out in full_space(n, na as usize, nb as usize) {
        let (ja, jb) = (occupied(out.alpha), occupied(out.beta));
        let mut c = Complex::default();
        for (det, amp) in state.iter() {
            c += amp * minor(u, &ja, &occupied(det.alpha)) * minor(u, &jb, &occupied(det.beta));
        }
        pairs.push((out, c));
    }
    CIVector::from_pairs(n, pairs).unwrap()
}

/// Dense `exp(A)` by scaling and squaring a Taylor series.
pub fn expm_taylor(a: &DMatrix<Complex>) -> DMatrix<Complex> {
    let n = a.nrows();
    let norm = a.iter().map(|c| c.norm()).sum::<f64>();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scaled = a / Complex::new(2f64.powi(squarings), 0.0);
    let mut term = DMatrix::<Complex>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / Complex::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn random_anti_hermitian(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<Complex> {
    let mut k = DMatrix::<Complex>::zeros(n, n);
    for p in 0..n {
        k[(p, p)] = Complex::new(0.0, scale * rng.random_range(-1.0..1.0));
        for q in p + 1..n {
            let c = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            k[(p, q)] = c;
            k[(q, p)] = -c.conj();
        }
    }
    k
}

/// Normalized random state over a random subset of the full space.
pub fn random_state(n: usize, na: usize, nb: usize, keep: f64, rng: &mut impl Rng) -> CIVector {
    let mut pairs: Vec<(Determinant, Complex)> = Vec::new();
    for d in full_space(n, na, nb) {
        if rng.random::<f64>() < keep {
            pairs.push((d, Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        }
    }
    if pairs.is_empty() {
        pairs.push((Determinant::hartree_fock(na, nb), Complex::new(1.0, 0.0)));
    }
    let mut v = CIVector::from_pairs(n, pairs).unwrap();
    v.normalize();
    v
}

pub fn max_amplitude_diff(a: &CIVector, b: &CIVector) -> f64 {
    let mut keys: Vec<Determinant> = a.space().iter().chain(b.space()).copied().collect();
    keys.sort();
    keys.dedup();
    keys.iter().map(|&d| (a.amplitude(d) - b.amplitude(d)).norm()).fold(0.0, f64::max)
}

/// Occupation of orbital `p` of spin `beta` computed directly from raw words.
pub fn raw_occupation(key: RawBitstring, n: usize, p: usize, beta: bool) -> bool {
    let (a, b) = split_raw(key, n);
    if beta { b.0 >> p & 1 == 1 } else { a.0 >> p & 1 == 1 }
}

pub fn raw(a: u32, b: u32, n: usize) -> RawBitstring {
    join(SpinString(a), SpinString(b), n)
}
