//! Local unitary cluster Jastrow (LUCJ) states.
//!
//! A state is built exactly over the full fixed-particle-number determinant
//! space by applying orbital rotations (as adjacent Givens rotations plus
//! phases) and diagonal Jastrow phases to the Hartree–Fock determinant.

use std::fmt::{self, Write as _};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::detspace::{binomial, enumerate_strings, Determinant, SpinString};
use crate::eig::CIVector;
use crate::error::{QsciError, Result};
use crate::integrals::{MolecularHamiltonian, T2Tensor};
use crate::Complex;

/// Tolerance on `K + K†` and on J asymmetry when validating inputs.
pub const GENERATOR_TOLERANCE: f64 = 1e-10;

/// Largest full-space dimension a state may occupy (`C(14,7)²` fits).
pub const MAX_FULL_DIMENSION: u128 = 12_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnsatzMode {
    /// `e^{K1} e^{iJ1} e^{-K1}`.
    OneLayer,
    /// Two full layers.
    TwoLayer,
    /// One full layer followed by the bare rotation `e^{K2}`.
    TruncatedTwoLayer,
}

impl AnsatzMode {
    /// Number of double factors the mode consumes.
    pub fn factors(self) -> usize {
        match self {
            AnsatzMode::OneLayer => 1,
            AnsatzMode::TwoLayer | AnsatzMode::TruncatedTwoLayer => 2,
        }
    }
}

impl std::str::FromStr for AnsatzMode {
    type Err = QsciError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1L" => Ok(AnsatzMode::OneLayer),
            "2L" => Ok(AnsatzMode::TwoLayer),
            "2L'" | "2LP" | "2L-TRUNC" => Ok(AnsatzMode::TruncatedTwoLayer),
            other => Err(QsciError::InvalidInput(format!("unknown ansatz mode '{other}'"))),
        }
    }
}

impl fmt::Display for AnsatzMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzMode::OneLayer => "1L",
            AnsatzMode::TwoLayer => "2L",
            AnsatzMode::TruncatedTwoLayer => "2L'",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LucjLayer {
    /// Anti-Hermitian rotation generator, shared by both spins.
    pub k: DMatrix<Complex>,
    pub j_ss: DMatrix<f64>,
    pub j_os: DMatrix<f64>,
}

impl LucjLayer {
    pub fn zeros(n: usize) -> Self {
        LucjLayer {
            k: DMatrix::zeros(n, n),
            j_ss: DMatrix::zeros(n, n),
            j_os: DMatrix::zeros(n, n),
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.k.nrows()
    }

    /// Zero Jastrow entries outside the hardware-local pattern: same-spin
    /// couplings only between neighbouring orbitals, opposite-spin only on
    /// the same orbital.
    pub fn restrict_local(&mut self) {
        let n = self.n_orbitals();
        for p in 0..n {
            for q in 0..n {
                if p.abs_diff(q) != 1 {
                    self.j_ss[(p, q)] = 0.0;
                }
                if p != q {
                    self.j_os[(p, q)] = 0.0;
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_orbitals();
        for (what, m) in [("J_ss", &self.j_ss), ("J_os", &self.j_os)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(QsciError::InvalidInput(format!("{what} is not {n}x{n}")));
            }
        }
        check_anti_hermitian(&self.k)?;
        for (kind, m) in [("J_ss symmetry", &self.j_ss), ("J_os symmetry", &self.j_os)] {
            let deviation = (m - m.transpose()).amax();
            if deviation > GENERATOR_TOLERANCE {
                return Err(QsciError::Symmetry { kind, deviation });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LucjParams {
    pub layers: Vec<LucjLayer>,
    /// `K2` of the truncated two-layer form.
    pub final_rotation: Option<DMatrix<Complex>>,
}

impl LucjParams {
    pub fn n_orbitals(&self) -> Option<usize> {
        self.layers.first().map(LucjLayer::n_orbitals)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self
            .n_orbitals()
            .ok_or_else(|| QsciError::InvalidInput("no LUCJ layers".into()))?;
        for layer in &self.layers {
            if layer.n_orbitals() != n {
                return Err(QsciError::InvalidInput("layers differ in orbital count".into()));
            }
            layer.validate()?;
        }
        if let Some(k) = &self.final_rotation {
            if k.nrows() != n || k.ncols() != n {
                return Err(QsciError::InvalidInput(format!("final rotation is not {n}x{n}")));
            }
            check_anti_hermitian(k)?;
        }
        Ok(())
    }
}

fn check_anti_hermitian(k: &DMatrix<Complex>) -> Result<()> {
    if !k.is_square() {
        return Err(QsciError::InvalidInput("rotation generator is not square".into()));
    }
    let deviation = (k + k.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if deviation > GENERATOR_TOLERANCE {
        return Err(QsciError::Symmetry {
            kind: "K anti-Hermiticity",
            deviation,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// t2 → parameters

/// One term `η g gᵀ` of the doubles-matrix eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleFactor {
    pub eta: f64,
    /// Occupied–virtual vector, index `i * n_virt + a`.
    pub g: DVector<f64>,
}

/// Doubles matrix `M[(i,a)][(j,b)] = t[i][j][a][b]`.
pub fn doubles_matrix(t2: &T2Tensor) -> DMatrix<f64> {
    let (no, nv) = (t2.n_occ, t2.n_virt);
    DMatrix::from_fn(no * nv, no * nv, |r, c| t2.get(r / nv, c / nv, r % nv, c % nv))
}

/// Eigenpairs of the doubles matrix ordered by `|η|` descending.
pub fn double_factorize(t2: &T2Tensor) -> Result<Vec<DoubleFactor>> {
    let asym = t2.exchange_asymmetry();
    if asym > GENERATOR_TOLERANCE {
        return Err(QsciError::Symmetry {
            kind: "t2 exchange symmetry",
            deviation: asym,
        });
    }
    let m = doubles_matrix(t2);
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut factors: Vec<DoubleFactor> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&eta, g)| DoubleFactor {
            eta,
            g: g.into_owned(),
        })
        .collect();
    factors.sort_by(|a, b| b.eta.abs().total_cmp(&a.eta.abs()));
    Ok(factors)
}

/// One layer from a double factor.
///
/// The Hermitian one-body matrix has `G[a][i] = (1 − i) g_ia` and
/// `G[i][a] = (1 + i) g_ia`; with `G = V D V†`, `K = log V` and
/// `J_pq = (η/4) D_p D_q` in both spin blocks, the layer equals
/// `exp(i (η/4) Ĝ²)` whose first-order doubles are `½ Σ η g g E E`.
pub fn layer_from_factor(factor: &DoubleFactor, n_occ: usize, n_virt: usize) -> Result<LucjLayer> {
    let n = n_occ + n_virt;
    if factor.eta == 0.0 || factor.g.iter().all(|&x| x == 0.0) {
        return Ok(LucjLayer::zeros(n));
    }
    let mut g = DMatrix::<Complex>::zeros(n, n);
    for i in 0..n_occ {
        for a in 0..n_virt {
            let x = factor.g[i * n_virt + a];
            g[(n_occ + a, i)] = Complex::new(x, -x);
            g[(i, n_occ + a)] = Complex::new(x, x);
        }
    }
    let eig = nalgebra::SymmetricEigen::new(g);
    let mut v = eig.eigenvectors;
    for mut col in v.column_iter_mut() {
        let big = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap();
        let phase = big.conj() / big.norm();
        col.iter_mut().for_each(|c| *c *= phase);
    }
    let k = unitary_log(&v)?;
    let d = eig.eigenvalues;
    let j = DMatrix::from_fn(n, n, |p, q| 0.25 * factor.eta * d[p] * d[q]);
    Ok(LucjLayer {
        k,
        j_ss: j.clone(),
        j_os: j,
    })
}

/// Parameters for `n_layers` full layers.
pub fn params_from_t2(t2: &T2Tensor, n_layers: usize, locality: bool) -> Result<LucjParams> {
    if n_layers == 0 {
        return Err(QsciError::InvalidInput("at least one LUCJ layer is required".into()));
    }
    let factors = double_factorize(t2)?;
    if n_layers > factors.len() {
        return Err(QsciError::InvalidInput(format!(
            "{n_layers} layers requested but the doubles matrix has dimension {}",
            factors.len()
        )));
    }
    let mut layers = factors[..n_layers]
        .iter()
        .map(|f| layer_from_factor(f, t2.n_occ, t2.n_virt))
        .collect::<Result<Vec<_>>>()?;
    if locality {
        layers.iter_mut().for_each(LucjLayer::restrict_local);
    }
    Ok(LucjParams {
        layers,
        final_rotation: None,
    })
}

/// Parameters shaped for `mode`: the truncated form keeps one full layer and
/// the rotation of the second factor.
pub fn params_for_mode(t2: &T2Tensor, mode: AnsatzMode, locality: bool) -> Result<LucjParams> {
    let mut params = params_from_t2(t2, mode.factors(), locality)?;
    if mode == AnsatzMode::TruncatedTwoLayer {
        let second = params.layers.pop().unwrap();
        params.final_rotation = Some(second.k);
    }
    Ok(params)
}

// ---------------------------------------------------------------------------
// matrix functions

/// `exp(K)` for anti-Hermitian `K`, via the Hermitian eigendecomposition of `iK`.
pub fn expm_anti_hermitian(k: &DMatrix<Complex>) -> DMatrix<Complex> {
    let i = Complex::i();
    let mut h = k * i;
    // enforce exact Hermiticity before the eigensolver
    h = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let w = eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-i * l).exp()));
    &w * phases * w.adjoint()
}

/// Principal logarithm of a unitary matrix, returned exactly anti-Hermitian.
pub fn unitary_log(u: &DMatrix<Complex>) -> Result<DMatrix<Complex>> {
    let n = u.nrows();
    let unitarity = (u.adjoint() * u - DMatrix::<Complex>::identity(n, n))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if unitarity > 1e-8 {
        return Err(QsciError::Symmetry {
            kind: "unitarity",
            deviation: unitarity,
        });
    }
    let (q, t) = nalgebra::Schur::new(u.clone()).unpack();
    let logs = DMatrix::from_diagonal(&t.diagonal().map(|l| Complex::i() * l.arg()));
    let k = &q * logs * q.adjoint();
    Ok((&k - k.adjoint()) * Complex::new(0.5, 0.0))
}

// ---------------------------------------------------------------------------
// Givens decomposition

/// `[[a, b], [c, d]]` acting on adjacent orbitals `(p, p+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Givens {
    pub p: usize,
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

/// `U = G_1 … G_m · diag(phases)` with every `G_k` acting on adjacent orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensDecomposition {
    pub rotations: Vec<Givens>,
    pub phases: Vec<Complex>,
}

pub fn givens_decompose(u: &DMatrix<Complex>) -> GivensDecomposition {
    let n = u.nrows();
    let mut m = u.clone();
    let mut rotations = Vec::new();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let (x, y) = (m[(i - 1, j)], m[(i, j)]);
            if y.norm() == 0.0 {
                continue;
            }
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            // R = [[x̄/r, ȳ/r], [−y/r, x/r]] zeroes m[i][j]
            let (ra, rb, rc, rd) = (x.conj() / r, y.conj() / r, -y / r, x / r);
            for col in 0..n {
                let (top, bot) = (m[(i - 1, col)], m[(i, col)]);
                m[(i - 1, col)] = ra * top + rb * bot;
                m[(i, col)] = rc * top + rd * bot;
            }
            // store R†
            rotations.push(Givens {
                p: i - 1,
                a: ra.conj(),
                b: rc.conj(),
                c: rb.conj(),
                d: rd.conj(),
            });
        }
    }
    GivensDecomposition {
        rotations,
        phases: (0..n).map(|p| m[(p, p)]).collect(),
    }
}

// ---------------------------------------------------------------------------
// full-space state

/// Amplitudes over all `(α string, β string)` pairs, row-major in α. The row
/// and column orders are ascending string values, so the flat order equals
/// the sorted determinant order.
struct FullState {
    n: usize,
    alpha: Vec<SpinString>,
    beta: Vec<SpinString>,
    amps: Vec<Complex>,
}

/// Pairs of strings related by moving one electron between `p` and `p+1`,
/// plus strings with both occupied, for every `p`.
struct SectorMoves {
    movable: Vec<Vec<(usize, usize)>>,
    both: Vec<Vec<usize>>,
}

impl SectorMoves {
    fn new(strings: &[SpinString], n: usize) -> Self {
        let index = |s: SpinString| strings.binary_search(&s).unwrap();
        let mut movable = vec![Vec::new(); n.saturating_sub(1)];
        let mut both = vec![Vec::new(); n.saturating_sub(1)];
        for (k, &s) in strings.iter().enumerate() {
            for p in 0..n.saturating_sub(1) {
                match (s.is_occupied(p), s.is_occupied(p + 1)) {
                    (true, false) => movable[p].push((k, index(s.flip(p).flip(p + 1)))),
                    (true, true) => both[p].push(k),
                    _ => {}
                }
            }
        }
        SectorMoves { movable, both }
    }
}

fn check_capacity(n: usize, n_alpha: usize, n_beta: usize) -> Result<()> {
    let dim = binomial(n, n_alpha) * binomial(n, n_beta);
    if dim > MAX_FULL_DIMENSION {
        return Err(QsciError::Capacity {
            what: "full determinant space",
            requested: dim,
            limit: MAX_FULL_DIMENSION,
        });
    }
    Ok(())
}

impl FullState {
    fn zero(n: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        check_capacity(n, n_alpha, n_beta)?;
        let alpha = enumerate_strings(n, n_alpha)?;
        let beta = enumerate_strings(n, n_beta)?;
        let amps = vec![Complex::default(); alpha.len() * beta.len()];
        Ok(FullState { n, alpha, beta, amps })
    }

    fn hartree_fock(n: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        let mut s = FullState::zero(n, n_alpha, n_beta)?;
        // the lowest strings come first
        s.amps[0] = Complex::new(1.0, 0.0);
        Ok(s)
    }

    fn from_civector(v: &CIVector) -> Result<Self> {
        let (na, nb) = v
            .electrons()
            .ok_or_else(|| QsciError::ElectronCount("state is empty or mixes electron counts".into()))?;
        let mut s = FullState::zero(v.n_orbitals(), na as usize, nb as usize)?;
        let nbeta = s.beta.len();
        for (det, c) in v.iter() {
            let ia = s.alpha.binary_search(&det.alpha).unwrap();
            let ib = s.beta.binary_search(&det.beta).unwrap();
            s.amps[ia * nbeta + ib] = c;
        }
        Ok(s)
    }

    fn into_civector(self) -> Result<CIVector> {
        let mut space = Vec::with_capacity(self.amps.len());
        for &a in &self.alpha {
            for &b in &self.beta {
                space.push(Determinant::new(a, b));
            }
        }
        CIVector::new(self.n, space, self.amps)
    }

    fn rotate(&mut self, u: &DMatrix<Complex>) {
        let dec = givens_decompose(u);
        let nb = self.beta.len();
        let am = SectorMoves::new(&self.alpha, self.n);
        let bm = SectorMoves::new(&self.beta, self.n);

        // diagonal phases first
        let pa: Vec<Complex> = self.alpha.iter().map(|s| s.occupied().map(|p| dec.phases[p]).product()).collect();
        let pb: Vec<Complex> = self.beta.iter().map(|s| s.occupied().map(|p| dec.phases[p]).product()).collect();
        for (ia, row) in self.amps.chunks_mut(nb).enumerate() {
            for (ib, x) in row.iter_mut().enumerate() {
                *x *= pa[ia] * pb[ib];
            }
        }

        for g in dec.rotations.iter().rev() {
            let det = g.a * g.d - g.b * g.c;
            // α sector: mix rows
            for &(s, t) in &am.movable[g.p] {
                for ib in 0..nb {
                    let (xs, xt) = (self.amps[s * nb + ib], self.amps[t * nb + ib]);
                    self.amps[s * nb + ib] = g.a * xs + g.b * xt;
                    self.amps[t * nb + ib] = g.c * xs + g.d * xt;
                }
            }
            for &s in &am.both[g.p] {
                self.amps[s * nb..(s + 1) * nb].iter_mut().for_each(|x| *x *= det);
            }
            // β sector: mix columns
            for row in self.amps.chunks_mut(nb) {
                for &(s, t) in &bm.movable[g.p] {
                    let (xs, xt) = (row[s], row[t]);
                    row[s] = g.a * xs + g.b * xt;
                    row[t] = g.c * xs + g.d * xt;
                }
                for &s in &bm.both[g.p] {
                    row[s] *= det;
                }
            }
        }
    }

    fn jastrow(&mut self, j_ss: &DMatrix<f64>, j_os: &DMatrix<f64>) {
        let nb = self.beta.len();
        let alpha = self.alpha.clone();
        let beta = self.beta.clone();
        for (ia, row) in self.amps.chunks_mut(nb).enumerate() {
            for (ib, x) in row.iter_mut().enumerate() {
                let theta = jastrow_phase(j_ss, j_os, alpha[ia], beta[ib]);
                *x *= Complex::from_polar(1.0, theta);
            }
        }
    }
}

/// `θ = Σ_pq J_ss[p][q](n_pα n_qα + n_pβ n_qβ) + J_os[p][q](n_pα n_qβ + n_pβ n_qα)`.
pub fn jastrow_phase(j_ss: &DMatrix<f64>, j_os: &DMatrix<f64>, alpha: SpinString, beta: SpinString) -> f64 {
    let mut theta = 0.0;
    for p in alpha.occupied() {
        for q in alpha.occupied() {
            theta += j_ss[(p, q)];
        }
        for q in beta.occupied() {
            theta += j_os[(p, q)] + j_os[(q, p)];
        }
    }
    for p in beta.occupied() {
        for q in beta.occupied() {
            theta += j_ss[(p, q)];
        }
    }
    theta
}

/// `e^{±K̂}|state⟩` over the full fixed-number space of the state.
pub fn apply_orbital_rotation(state: &CIVector, k: &DMatrix<Complex>, direction: i8) -> Result<CIVector> {
    check_anti_hermitian(k)?;
    if k.nrows() != state.n_orbitals() {
        return Err(QsciError::InvalidInput(format!(
            "generator is {}x{} but the state has {} orbitals",
            k.nrows(),
            k.ncols(),
            state.n_orbitals()
        )));
    }
    let sign = if direction < 0 { -1.0 } else { 1.0 };
    let mut s = FullState::from_civector(state)?;
    s.rotate(&expm_anti_hermitian(&(k * Complex::new(sign, 0.0))));
    s.into_civector()
}

/// `e^{iĴ}|state⟩`; only phases change.
pub fn apply_jastrow(state: &CIVector, j_ss: &DMatrix<f64>, j_os: &DMatrix<f64>) -> CIVector {
    let pairs = state
        .iter()
        .map(|(d, c)| (d, c * Complex::from_polar(1.0, jastrow_phase(j_ss, j_os, d.alpha, d.beta))))
        .collect();
    CIVector::from_pairs(state.n_orbitals(), pairs).expect("input state is already valid")
}

/// Apply the layers to the HF determinant, first layer first.
pub fn build_state(h: &MolecularHamiltonian, params: &LucjParams, mode: AnsatzMode) -> Result<CIVector> {
    params.validate()?;
    let n = h.n_orbitals;
    if params.n_orbitals() != Some(n) {
        return Err(QsciError::InvalidInput(format!(
            "parameters are for {:?} orbitals, Hamiltonian has {n}",
            params.n_orbitals()
        )));
    }
    let (full, tail): (&[LucjLayer], Option<&DMatrix<Complex>>) = match mode {
        AnsatzMode::OneLayer => (&params.layers[..1], None),
        AnsatzMode::TwoLayer => {
            if params.layers.len() < 2 {
                return Err(QsciError::InvalidInput("2L mode needs two layers".into()));
            }
            (&params.layers[..2], None)
        }
        AnsatzMode::TruncatedTwoLayer => {
            let k2 = params
                .final_rotation
                .as_ref()
                .or_else(|| params.layers.get(1).map(|l| &l.k))
                .ok_or_else(|| QsciError::InvalidInput("2L' mode needs a second rotation".into()))?;
            (&params.layers[..1], Some(k2))
        }
    };
    let mut s = FullState::hartree_fock(n, h.n_alpha, h.n_beta)?;
    for layer in full {
        s.rotate(&expm_anti_hermitian(&-&layer.k));
        s.jastrow(&layer.j_ss, &layer.j_os);
        s.rotate(&expm_anti_hermitian(&layer.k));
    }
    if let Some(k2) = tail {
        s.rotate(&expm_anti_hermitian(k2));
    }
    let mut v = s.into_civector()?;
    v.normalize();
    Ok(v)
}

// ---------------------------------------------------------------------------
// parameter files
//
//   NORB = 4
//   [layer]
//   K
//   0 1 0.1 0.0        p q re im
//   J_SS
//   0 1 0.3            p q value
//   J_OS
//   0 0 0.2
//   [final]
//   K
//   ...

#[derive(Clone, Copy)]
enum Block {
    None,
    K,
    Jss,
    Jos,
}

pub fn parse_params(text: &str) -> Result<LucjParams> {
    let mut n: Option<usize> = None;
    let mut layers: Vec<LucjLayer> = Vec::new();
    let mut final_rotation: Option<DMatrix<Complex>> = None;
    let mut in_final = false;
    let mut block = Block::None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let t = raw.split('#').next().unwrap().trim();
        if t.is_empty() {
            continue;
        }
        let upper = t.to_ascii_uppercase();
        if let Some(rest) = upper.strip_prefix("NORB") {
            let v = rest.trim_start().trim_start_matches('=').trim();
            n = Some(v.parse().map_err(|_| QsciError::parse(line, format!("bad NORB '{v}'")))?);
            continue;
        }
        let norb = n.ok_or_else(|| QsciError::parse(line, "NORB must come first"))?;
        match upper.as_str() {
            "[LAYER]" => {
                if in_final {
                    return Err(QsciError::parse(line, "[layer] after [final]"));
                }
                layers.push(LucjLayer::zeros(norb));
                block = Block::None;
                continue;
            }
            "[FINAL]" => {
                if final_rotation.is_some() {
                    return Err(QsciError::parse(line, "duplicate [final] section"));
                }
                final_rotation = Some(DMatrix::zeros(norb, norb));
                in_final = true;
                block = Block::None;
                continue;
            }
            "K" => {
                block = Block::K;
                continue;
            }
            "J_SS" | "JSS" => {
                block = Block::Jss;
                continue;
            }
            "J_OS" | "JOS" => {
                block = Block::Jos;
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let index = |s: &str| -> Result<usize> {
            let p: usize = s.parse().map_err(|_| QsciError::parse(line, format!("bad index '{s}'")))?;
            if p >= norb {
                return Err(QsciError::parse(line, format!("index {p} out of range for NORB={norb}")));
            }
            Ok(p)
        };
        let value = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| QsciError::parse(line, format!("bad value '{s}'")))
        };
        match block {
            Block::None => return Err(QsciError::parse(line, format!("unexpected line '{t}'"))),
            Block::K => {
                if fields.len() != 4 {
                    return Err(QsciError::parse(line, "K entries are 'p q re im'"));
                }
                let (p, q) = (index(fields[0])?, index(fields[1])?);
                let c = Complex::new(value(fields[2])?, value(fields[3])?);
                let target = if in_final {
                    final_rotation.as_mut().unwrap()
                } else {
                    &mut layers
                        .last_mut()
                        .ok_or_else(|| QsciError::parse(line, "entry before any [layer]"))?
                        .k
                };
                target[(p, q)] = c;
            }
            Block::Jss | Block::Jos => {
                if in_final {
                    return Err(QsciError::parse(line, "the [final] section holds only K"));
                }
                if fields.len() != 3 {
                    return Err(QsciError::parse(line, "J entries are 'p q value'"));
                }
                let (p, q, v) = (index(fields[0])?, index(fields[1])?, value(fields[2])?);
                let layer = layers
                    .last_mut()
                    .ok_or_else(|| QsciError::parse(line, "entry before any [layer]"))?;
                let m = if matches!(block, Block::Jss) { &mut layer.j_ss } else { &mut layer.j_os };
                m[(p, q)] = v;
            }
        }
    }
    let params = LucjParams {
        layers,
        final_rotation,
    };
    params.validate()?;
    Ok(params)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<LucjParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| QsciError::io(path, e))?;
    parse_params(&text)
}

pub fn write_params(params: &LucjParams) -> String {
    let n = params.n_orbitals().unwrap_or(0);
    let mut out = format!("NORB = {n}\n");
    let write_k = |out: &mut String, k: &DMatrix<Complex>| {
        out.push_str("K\n");
        for p in 0..n {
            for q in 0..n {
                let c = k[(p, q)];
                if c != Complex::default() {
                    writeln!(out, "{p} {q} {:.17e} {:.17e}", c.re, c.im).unwrap();
                }
            }
        }
    };
    let write_j = |out: &mut String, name: &str, j: &DMatrix<f64>| {
        writeln!(out, "{name}").unwrap();
        for p in 0..n {
            for q in 0..n {
                if j[(p, q)] != 0.0 {
                    writeln!(out, "{p} {q} {:.17e}", j[(p, q)]).unwrap();
                }
            }
        }
    };
    for layer in &params.layers {
        out.push_str("[layer]\n");
        write_k(&mut out, &layer.k);
        write_j(&mut out, "J_SS", &layer.j_ss);
        write_j(&mut out, "J_OS", &layer.j_os);
    }
    if let Some(k) = &params.final_rotation {
        out.push_str("[final]\n");
        write_k(&mut out, k);
    }
    out
}
