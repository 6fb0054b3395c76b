//! Davidson iteration for the lowest eigenpair of a real symmetric matrix,
//! carried out in complex arithmetic.

use nalgebra::DMatrix;

use super::{CIVector, SparseHamiltonian};
use crate::error::{QsciError, Result};
use crate::rng::splitmix64;
use crate::Complex;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DavidsonOptions {
    /// Convergence threshold on `‖Hv − Ev‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Basis size that triggers a restart.
    pub max_subspace: usize,
    /// Floor on `|H_ii − θ|` in the diagonal preconditioner.
    pub level_shift: f64,
    /// Weight of the deterministic spread added to the unit start vector.
    /// Keeps the Krylov space from being confined to one symmetry sector.
    pub guess_spread: f64,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        DavidsonOptions {
            tol: 1e-8,
            max_iter: 1000,
            max_subspace: 20,
            level_shift: 1e-6,
            guess_spread: 1e-2,
        }
    }
}

/// Lowest eigenpair with default options except `tol` and `max_iter`.
pub fn ground_state(hs: &SparseHamiltonian, tol: f64, max_iter: usize) -> Result<(f64, CIVector)> {
    ground_state_with(
        hs,
        &DavidsonOptions {
            tol,
            max_iter,
            ..DavidsonOptions::default()
        },
    )
}

fn dot(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(t: &mut [Complex], basis: &[Vec<Complex>]) {
    // two passes of modified Gram–Schmidt
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, t);
            t.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn start_vector(diag: &[f64], spread: f64) -> Vec<Complex> {
    let n = diag.len();
    let lowest = diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut v: Vec<Complex> = (0..n)
        .map(|i| {
            let u = (splitmix64(i as u64) >> 11) as f64 / (1u64 << 53) as f64;
            Complex::new(spread * (2.0 * u - 1.0) / (n as f64).sqrt(), 0.0)
        })
        .collect();
    v[lowest] += 1.0;
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

pub fn ground_state_with(hs: &SparseHamiltonian, opts: &DavidsonOptions) -> Result<(f64, CIVector)> {
    let n = hs.dim();
    if n == 0 {
        return Err(QsciError::EmptySubspace("zero-dimensional Hamiltonian".into()));
    }
    let diag = hs.diagonal();
    if n == 1 {
        return finish(hs, diag[0], vec![Complex::new(1.0, 0.0)]);
    }

    let mut basis: Vec<Vec<Complex>> = Vec::with_capacity(opts.max_subspace);
    let mut images: Vec<Vec<Complex>> = Vec::with_capacity(opts.max_subspace);
    let mut pending = start_vector(diag, opts.guess_spread);
    let mut best = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let mut image = vec![Complex::default(); n];
        hs.matvec(&pending, &mut image);
        basis.push(pending);
        images.push(image);

        let k = basis.len();
        let mut proj = DMatrix::<Complex>::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = dot(&basis[a], &images[b]);
                proj[(a, b)] = v;
                proj[(b, a)] = v.conj();
            }
        }
        let eig = nalgebra::SymmetricEigen::new(proj);
        let (imin, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &t)| (i, t))
            .unwrap();
        let y = eig.eigenvectors.column(imin);

        let mut x = vec![Complex::default(); n];
        let mut ax = vec![Complex::default(); n];
        for (c, (v, av)) in y.iter().zip(basis.iter().zip(&images)) {
            for i in 0..n {
                x[i] += c * v[i];
                ax[i] += c * av[i];
            }
        }
        let residual: Vec<Complex> = ax.iter().zip(&x).map(|(a, v)| a - v * theta).collect();
        let rnorm = norm(&residual);
        best = best.min(rnorm);
        if rnorm <= opts.tol || k >= n {
            return finish(hs, theta, x);
        }

        let mut t: Vec<Complex> = residual
            .iter()
            .zip(diag)
            .map(|(r, &d)| {
                let mut denom = d - theta;
                if denom.abs() < opts.level_shift {
                    denom = opts.level_shift.copysign(denom);
                }
                r / denom
            })
            .collect();

        if k >= opts.max_subspace {
            let nx = norm(&x);
            let ax_n: Vec<Complex> = ax.iter().map(|v| v / nx).collect();
            basis.clear();
            images.clear();
            basis.push(x.iter().map(|v| v / nx).collect());
            images.push(ax_n);
        }

        orthogonalize(&mut t, &basis);
        let mut tn = norm(&t);
        if tn < 1e-10 {
            t = residual;
            orthogonalize(&mut t, &basis);
            tn = norm(&t);
            if tn < 1e-14 {
                return finish(hs, theta, x);
            }
        }
        t.iter_mut().for_each(|v| *v /= tn);
        pending = t;
    }
    Err(QsciError::NotConverged {
        iterations: opts.max_iter,
        residual: best,
    })
}

fn finish(hs: &SparseHamiltonian, energy: f64, mut x: Vec<Complex>) -> Result<(f64, CIVector)> {
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    // Fix the global phase: largest component real and positive.
    if let Some(big) = x.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())) {
        if big.norm() > 0.0 {
            let phase = big.conj() / big.norm();
            x.iter_mut().for_each(|v| *v *= phase);
        }
    }
    let pairs = hs.space().iter().copied().zip(x).collect();
    Ok((energy, CIVector::from_pairs(hs.n_orbitals(), pairs)?))
}
