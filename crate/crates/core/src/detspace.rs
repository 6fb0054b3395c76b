//! Bit-packed Slater determinants.
//!
//! Conventions used everywhere in the crate:
//!
//! - bit `p` of a [`SpinString`] is set iff spatial orbital `p` holds an
//!   electron of that spin;
//! - a [`RawBitstring`] packs the α string in the low `N` bits and the β string
//!   in the high `N` bits;
//! - a determinant is `a†(p1) a†(p2) ... |vac⟩` with spin orbitals in ascending
//!   order, every α orbital before every β orbital. All fermionic signs follow
//!   from this ordering.

use std::fmt;

use crate::error::{QsciError, Result};
use crate::integrals::MolecularHamiltonian;

/// Largest supported number of spatial orbitals (raw strings fit in a `u64`).
pub const MAX_ORBITALS: usize = 32;

/// Occupation string of one spin sector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinString(pub u32);

impl SpinString {
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_occupied(self, p: usize) -> bool {
        self.0 >> p & 1 == 1
    }

    pub fn flip(self, p: usize) -> Self {
        SpinString(self.0 ^ (1 << p))
    }

    /// True when no bit at or above `n_orbitals` is set.
    pub fn fits(self, n_orbitals: usize) -> bool {
        n_orbitals >= 32 || self.0 >> n_orbitals == 0
    }

    /// Occupied orbitals in ascending order.
    pub fn occupied(self) -> Bits {
        Bits(self.0 as u64)
    }

    /// Lowest `k` orbitals occupied.
    pub fn lowest(k: usize) -> Self {
        debug_assert!(k <= 32);
        if k == 32 {
            SpinString(u32::MAX)
        } else {
            SpinString((1u32 << k) - 1)
        }
    }
}

/// Iterator over set bit positions, lowest first.
#[derive(Clone, Copy, Debug)]
pub struct Bits(u64);

impl Bits {
    pub fn new(bits: u64) -> Self {
        Bits(bits)
    }
}

impl Iterator for Bits {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let p = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(p)
    }
}

/// A Slater determinant as an (α, β) pair of occupation strings.
///
/// Ordering is lexicographic in `(alpha, beta)`, which is the canonical
/// ordering of every determinant subspace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    pub alpha: SpinString,
    pub beta: SpinString,
}

impl Determinant {
    pub fn new(alpha: SpinString, beta: SpinString) -> Self {
        Determinant { alpha, beta }
    }

    /// Closed-shell reference with the lowest orbitals of each spin occupied.
    pub fn hartree_fock(n_alpha: usize, n_beta: usize) -> Self {
        Determinant::new(SpinString::lowest(n_alpha), SpinString::lowest(n_beta))
    }

    pub fn electrons(self) -> (u32, u32) {
        (self.alpha.count(), self.beta.count())
    }

    pub fn to_raw(self, n_orbitals: usize) -> RawBitstring {
        join(self.alpha, self.beta, n_orbitals)
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:b}, {:b})", self.alpha.0, self.beta.0)
    }
}

/// A measured 2N-bit string. May carry any number of electrons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawBitstring(pub u64);

impl RawBitstring {
    pub fn fits(self, n_qubits: usize) -> bool {
        n_qubits >= 64 || self.0 >> n_qubits == 0
    }
}

/// Split a raw string into its (α, β) halves.
pub fn split_raw(x: RawBitstring, n_orbitals: usize) -> (SpinString, SpinString) {
    let mask = low_mask(n_orbitals);
    (
        SpinString((x.0 & mask) as u32),
        SpinString(((x.0 >> n_orbitals) & mask) as u32),
    )
}

/// Inverse of [`split_raw`].
pub fn join(alpha: SpinString, beta: SpinString, n_orbitals: usize) -> RawBitstring {
    RawBitstring(alpha.0 as u64 | (beta.0 as u64) << n_orbitals)
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// All `C(n, k)` strings with `k` electrons in `n` orbitals, in increasing order.
pub fn enumerate_strings(n_orbitals: usize, n_electrons: usize) -> Result<Vec<SpinString>> {
    if n_orbitals > MAX_ORBITALS {
        return Err(QsciError::Capacity {
            what: "spatial orbitals",
            requested: n_orbitals as u128,
            limit: MAX_ORBITALS as u128,
        });
    }
    if n_electrons > n_orbitals {
        return Err(QsciError::InvalidInput(format!(
            "{n_electrons} electrons do not fit in {n_orbitals} orbitals"
        )));
    }
    let count = binomial(n_orbitals, n_electrons);
    let mut out = Vec::with_capacity(count as usize);
    if n_electrons == 0 {
        out.push(SpinString(0));
        return Ok(out);
    }
    // Gosper's hack walks same-weight integers in increasing order.
    let limit = 1u64 << n_orbitals;
    let mut x: u64 = (1u64 << n_electrons) - 1;
    while x < limit {
        out.push(SpinString(x as u32));
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    Ok(out)
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Holes and particles of one spin sector, ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SectorExcitation {
    pub holes: Vec<usize>,
    pub particles: Vec<usize>,
}

/// Excitation connecting two determinants. `sign` is the fermionic phase of
/// `⟨J| E |I⟩` where `E` applies the listed hole→particle moves in order.
/// For degree above two only `degree` is meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    pub degree: usize,
    pub alpha: SectorExcitation,
    pub beta: SectorExcitation,
    pub sign: f64,
}

fn check_counts(det_i: Determinant, det_j: Determinant) -> Result<()> {
    if det_i.electrons() != det_j.electrons() {
        return Err(QsciError::ElectronCount(format!(
            "{det_i} has {:?} electrons, {det_j} has {:?}",
            det_i.electrons(),
            det_j.electrons()
        )));
    }
    Ok(())
}

/// Sign of `a†(p) a(h)` acting on `s` (h occupied, p empty).
#[inline]
fn single_sign(s: u32, h: usize, p: usize) -> f64 {
    let (lo, hi) = if h < p { (h, p) } else { (p, h) };
    let between = if hi - lo <= 1 {
        0
    } else {
        let mask = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
        (s as u64 & mask).count_ones()
    };
    if between % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply the hole/particle pairs of one sector in ascending pairing and return
/// the accumulated sign.
fn sector_sign(mut s: u32, holes: &[usize], particles: &[usize]) -> f64 {
    let mut sign = 1.0;
    for (&h, &p) in holes.iter().zip(particles) {
        sign *= single_sign(s, h, p);
        s = (s & !(1 << h)) | (1 << p);
    }
    sign
}

fn sector_excitation(from: SpinString, to: SpinString) -> SectorExcitation {
    let diff = from.0 ^ to.0;
    SectorExcitation {
        holes: Bits((diff & from.0) as u64).collect(),
        particles: Bits((diff & to.0) as u64).collect(),
    }
}

/// Excitation degree, hole/particle lists and sign taking `det_i` to `det_j`.
pub fn excitation(det_i: Determinant, det_j: Determinant) -> Result<Excitation> {
    check_counts(det_i, det_j)?;
    let da = (det_i.alpha.0 ^ det_j.alpha.0).count_ones() as usize / 2;
    let db = (det_i.beta.0 ^ det_j.beta.0).count_ones() as usize / 2;
    let degree = da + db;
    if degree > 2 {
        return Ok(Excitation {
            degree,
            alpha: SectorExcitation::default(),
            beta: SectorExcitation::default(),
            sign: 1.0,
        });
    }
    let alpha = sector_excitation(det_i.alpha, det_j.alpha);
    let beta = sector_excitation(det_i.beta, det_j.beta);
    let sign = sector_sign(det_i.alpha.0, &alpha.holes, &alpha.particles)
        * sector_sign(det_i.beta.0, &beta.holes, &beta.particles);
    Ok(Excitation {
        degree,
        alpha,
        beta,
        sign,
    })
}

/// `⟨det_i| H |det_j⟩` by the Slater–Condon rules (chemists' notation).
pub fn slater_condon(h: &MolecularHamiltonian, det_i: Determinant, det_j: Determinant) -> Result<f64> {
    check_counts(det_i, det_j)?;
    Ok(matrix_element(h, det_i, det_j))
}

/// Slater–Condon element without the electron-count check.
pub(crate) fn matrix_element(h: &MolecularHamiltonian, det_i: Determinant, det_j: Determinant) -> f64 {
    let xa = det_i.alpha.0 ^ det_j.alpha.0;
    let xb = det_i.beta.0 ^ det_j.beta.0;
    let na = xa.count_ones();
    let nb = xb.count_ones();
    match (na, nb) {
        (0, 0) => diagonal_element(h, det_i),
        (2, 0) => single_element(h, det_i.alpha, det_j.alpha, det_i.beta),
        (0, 2) => single_element(h, det_i.beta, det_j.beta, det_i.alpha),
        (4, 0) => same_spin_double(h, det_j.alpha, det_i.alpha),
        (0, 4) => same_spin_double(h, det_j.beta, det_i.beta),
        (2, 2) => {
            // ⟨I|H|J⟩: holes/particles relative to J.
            let ha = (xa & det_j.alpha.0).trailing_zeros() as usize;
            let pa = (xa & det_i.alpha.0).trailing_zeros() as usize;
            let hb = (xb & det_j.beta.0).trailing_zeros() as usize;
            let pb = (xb & det_i.beta.0).trailing_zeros() as usize;
            let sign = single_sign(det_j.alpha.0, ha, pa) * single_sign(det_j.beta.0, hb, pb);
            sign * h.eri(pa, ha, pb, hb)
        }
        _ => 0.0,
    }
}

fn diagonal_element(h: &MolecularHamiltonian, det: Determinant) -> f64 {
    let mut e = h.e_core;
    let occ_a: Vec<usize> = det.alpha.occupied().collect();
    let occ_b: Vec<usize> = det.beta.occupied().collect();
    for &p in occ_a.iter().chain(&occ_b) {
        e += h.h(p, p);
    }
    for (i, &p) in occ_a.iter().enumerate() {
        for &q in &occ_a[..i] {
            e += h.eri(p, p, q, q) - h.eri(p, q, q, p);
        }
    }
    for (i, &p) in occ_b.iter().enumerate() {
        for &q in &occ_b[..i] {
            e += h.eri(p, p, q, q) - h.eri(p, q, q, p);
        }
    }
    for &p in &occ_a {
        for &q in &occ_b {
            e += h.eri(p, p, q, q);
        }
    }
    e
}

/// Single excitation in one sector; `other` is the spectator sector.
fn single_element(h: &MolecularHamiltonian, bra: SpinString, ket: SpinString, other: SpinString) -> f64 {
    let x = bra.0 ^ ket.0;
    let hole = (x & ket.0).trailing_zeros() as usize;
    let part = (x & bra.0).trailing_zeros() as usize;
    let sign = single_sign(ket.0, hole, part);
    let mut v = h.h(part, hole);
    for j in ket.occupied() {
        v += h.eri(part, hole, j, j) - h.eri(part, j, j, hole);
    }
    for j in other.occupied() {
        v += h.eri(part, hole, j, j);
    }
    sign * v
}

fn same_spin_double(h: &MolecularHamiltonian, ket: SpinString, bra: SpinString) -> f64 {
    let x = bra.0 ^ ket.0;
    let mut holes = Bits((x & ket.0) as u64);
    let mut parts = Bits((x & bra.0) as u64);
    let (h1, h2) = (holes.next().unwrap(), holes.next().unwrap());
    let (p1, p2) = (parts.next().unwrap(), parts.next().unwrap());
    let sign = sector_sign(ket.0, &[h1, h2], &[p1, p2]);
    sign * (h.eri(p1, h1, p2, h2) - h.eri(p1, h2, p2, h1))
}

/// Ordering of qubits in rendered and stored sample bitstrings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BitOrder {
    /// Qubit `p` is α orbital `p`, qubit `N + p` is β orbital `p`
    /// (the in-memory [`RawBitstring`] layout).
    #[default]
    SectorBlocks,
    /// Qubit `2p` is α orbital `p`, qubit `2p + 1` is β orbital `p`.
    Interleaved,
}

impl std::str::FromStr for BitOrder {
    type Err = QsciError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocks" | "sector-blocks" | "sector" | "default" => Ok(BitOrder::SectorBlocks),
            "interleaved" => Ok(BitOrder::Interleaved),
            other => Err(QsciError::InvalidInput(format!("unknown bit order '{other}'"))),
        }
    }
}

impl fmt::Display for BitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitOrder::SectorBlocks => "blocks",
            BitOrder::Interleaved => "interleaved",
        })
    }
}

fn to_qubits(x: RawBitstring, n_orbitals: usize, order: BitOrder) -> u64 {
    match order {
        BitOrder::SectorBlocks => x.0,
        BitOrder::Interleaved => {
            let (a, b) = split_raw(x, n_orbitals);
            (0..n_orbitals).fold(0u64, |acc, p| {
                acc | ((a.0 as u64 >> p) & 1) << (2 * p) | ((b.0 as u64 >> p) & 1) << (2 * p + 1)
            })
        }
    }
}

fn from_qubits(q: u64, n_orbitals: usize, order: BitOrder) -> RawBitstring {
    match order {
        BitOrder::SectorBlocks => RawBitstring(q),
        BitOrder::Interleaved => {
            let (mut a, mut b) = (0u32, 0u32);
            for p in 0..n_orbitals {
                a |= ((q >> (2 * p)) & 1) as u32 * (1 << p);
                b |= ((q >> (2 * p + 1)) & 1) as u32 * (1 << p);
            }
            join(SpinString(a), SpinString(b), n_orbitals)
        }
    }
}

/// Render as `2N` characters of `0`/`1`, highest qubit leftmost. With the
/// default order the leftmost character is the highest β orbital.
pub fn render(x: RawBitstring, n_orbitals: usize, order: BitOrder) -> String {
    let q = to_qubits(x, n_orbitals, order);
    let width = 2 * n_orbitals;
    (0..width)
        .rev()
        .map(|i| if (q >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parse a rendered bitstring. The length fixes `N`.
pub fn parse_rendered(s: &str, order: BitOrder) -> Result<(RawBitstring, usize)> {
    let len = s.len();
    if len == 0 || !len.is_multiple_of(2) || len > 2 * MAX_ORBITALS {
        return Err(QsciError::InvalidInput(format!(
            "bitstring length {len} is not an even number in 2..={}",
            2 * MAX_ORBITALS
        )));
    }
    let mut q = 0u64;
    for c in s.chars() {
        q <<= 1;
        match c {
            '0' => {}
            '1' => q |= 1,
            other => {
                return Err(QsciError::InvalidInput(format!(
                    "invalid character '{other}' in bitstring"
                )))
            }
        }
    }
    let n = len / 2;
    Ok((from_qubits(q, n, order), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(bits: u32) -> SpinString {
        SpinString(bits)
    }

    #[test]
    fn enumerate_small() {
        assert_eq!(enumerate_strings(2, 1).unwrap(), vec![s(0b01), s(0b10)]);
        let four = enumerate_strings(4, 2).unwrap();
        assert_eq!(four.len(), 6);
        assert_eq!(four[0], s(0b0011));
        assert_eq!(four[5], s(0b1100));
        assert!(four.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_strings(3, 0).unwrap(), vec![s(0)]);
        assert_eq!(enumerate_strings(3, 3).unwrap(), vec![s(0b111)]);
        assert!(enumerate_strings(2, 3).is_err());
    }

    #[test]
    fn enumerate_26_5_matches_binomial() {
        let strings = enumerate_strings(26, 5).unwrap();
        // C(26,5) = 26·25·24·23·22 / 120
        assert_eq!(strings.len() as u128, 26 * 25 * 24 * 23 * 22 / 120);
        assert_eq!(strings.len(), 65780);
        assert!(strings.iter().all(|x| x.count() == 5 && x.fits(26)));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(26, 5), 65780);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(52, 26), 495918532948104);
    }

    #[test]
    fn identity_excitation() {
        let d = Determinant::new(s(0b0011), s(0b0101));
        let e = excitation(d, d).unwrap();
        assert_eq!(e.degree, 0);
        assert_eq!(e.sign, 1.0);
    }

    #[test]
    fn adjacent_single_excitation() {
        let i = Determinant::new(s(0b0011), s(0b0011));
        let j = Determinant::new(s(0b0101), s(0b0011));
        let e = excitation(i, j).unwrap();
        assert_eq!(e.degree, 1);
        assert_eq!(e.alpha.holes, vec![1]);
        assert_eq!(e.alpha.particles, vec![2]);
        assert_eq!(e.sign, 1.0);
    }

    #[test]
    fn sign_counts_intervening_electrons() {
        // 0110 -> 0011? use hole 2, particle 0 with orbital 1 occupied in between.
        let i = Determinant::new(s(0b0110), s(0));
        let j = Determinant::new(s(0b0011), s(0));
        let e = excitation(i, j).unwrap();
        assert_eq!(e.alpha.holes, vec![2]);
        assert_eq!(e.alpha.particles, vec![0]);
        assert_eq!(e.sign, -1.0);
    }

    #[test]
    fn high_degree_has_no_detail() {
        let i = Determinant::new(s(0b000111), s(0));
        let j = Determinant::new(s(0b111000), s(0));
        let e = excitation(i, j).unwrap();
        assert_eq!(e.degree, 3);
        assert!(e.alpha.holes.is_empty());
    }

    #[test]
    fn mismatched_counts_rejected() {
        let i = Determinant::new(s(0b01), s(0b01));
        let j = Determinant::new(s(0b11), s(0b01));
        assert!(matches!(excitation(i, j), Err(QsciError::ElectronCount(_))));
    }

    #[test]
    fn split_join_examples() {
        assert_eq!(split_raw(RawBitstring(0), 3), (s(0), s(0)));
        assert_eq!(split_raw(RawBitstring(0b101_011), 3), (s(0b011), s(0b101)));
        assert_eq!(join(s(0b011), s(0b101), 3), RawBitstring(0b101_011));
    }

    #[test]
    fn render_default_order() {
        let x = join(s(0b011), s(0b100), 3);
        assert_eq!(render(x, 3, BitOrder::SectorBlocks), "100011");
        // interleaved: qubits a0 b0 a1 b1 a2 b2 = 1 0 1 0 0 1
        assert_eq!(render(x, 3, BitOrder::Interleaved), "100101");
    }

    #[test]
    fn parse_rendered_rejects_garbage() {
        assert!(parse_rendered("012", BitOrder::SectorBlocks).is_err());
        assert!(parse_rendered("0x", BitOrder::SectorBlocks).is_err());
        assert!(parse_rendered("", BitOrder::SectorBlocks).is_err());
    }

    proptest! {
        #[test]
        fn split_join_roundtrip(n in 1usize..=32, raw in any::<u64>()) {
            let x = RawBitstring(raw & low_mask(2 * n));
            let (a, b) = split_raw(x, n);
            prop_assert_eq!(join(a, b, n), x);
            prop_assert_eq!(split_raw(join(a, b, n), n), (a, b));
        }

        #[test]
        fn render_parse_roundtrip(n in 1usize..=32, raw in any::<u64>(), interleaved in any::<bool>()) {
            let order = if interleaved { BitOrder::Interleaved } else { BitOrder::SectorBlocks };
            let x = RawBitstring(raw & low_mask(2 * n));
            let text = render(x, n, order);
            prop_assert_eq!(text.len(), 2 * n);
            prop_assert_eq!(parse_rendered(&text, order).unwrap(), (x, n));
        }
    }
}
