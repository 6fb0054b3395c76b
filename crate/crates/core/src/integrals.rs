//! Molecular Hamiltonians from FCIDUMP files, orbital energies and MP2 doubles.
//!
//! Orbital indices are 1-based on disk and 0-based in memory. The integrals
//! are spin-restricted: one set of spatial orbitals serves both spins.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::detspace::MAX_ORBITALS;
use crate::error::{QsciError, Result};

/// Tolerance below which duplicate entries are considered consistent.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Index quadruple of a two-electron integral `(pq|rs)`.
pub type EriKey = [u8; 4];

/// The eight index permutations sharing the value of `(pq|rs)`.
pub fn eri_permutations([p, q, r, s]: EriKey) -> [EriKey; 8] {
    [
        [p, q, r, s],
        [q, p, r, s],
        [p, q, s, r],
        [q, p, s, r],
        [r, s, p, q],
        [s, r, p, q],
        [r, s, q, p],
        [s, r, q, p],
    ]
}

/// Lexicographically smallest permutation.
pub fn canonical_key(key: EriKey) -> EriKey {
    eri_permutations(key).into_iter().min().unwrap()
}

#[derive(Clone, Debug)]
pub struct MolecularHamiltonian {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub e_core: f64,
    one_body: Vec<f64>,
    two_body: BTreeMap<EriKey, f64>,
    // Dense (pq|rs) expansion of `two_body`, rebuilt on construction.
    eri_dense: Vec<f64>,
}

impl PartialEq for MolecularHamiltonian {
    fn eq(&self, other: &Self) -> bool {
        self.n_orbitals == other.n_orbitals
            && self.n_alpha == other.n_alpha
            && self.n_beta == other.n_beta
            && self.e_core == other.e_core
            && self.one_body == other.one_body
            && self.two_body == other.two_body
    }
}

impl MolecularHamiltonian {
    /// Build from a full `N×N` one-body matrix and a map of two-electron
    /// integrals keyed by any permutation (duplicates must agree).
    pub fn new(
        n_orbitals: usize,
        n_alpha: usize,
        n_beta: usize,
        e_core: f64,
        one_body: Vec<f64>,
        two_body: impl IntoIterator<Item = (EriKey, f64)>,
    ) -> Result<Self> {
        if n_orbitals == 0 || n_orbitals > MAX_ORBITALS {
            return Err(QsciError::InvalidInput(format!(
                "number of orbitals {n_orbitals} outside 1..={MAX_ORBITALS}"
            )));
        }
        if n_alpha == 0 || n_alpha > n_orbitals || n_beta == 0 || n_beta > n_orbitals {
            return Err(QsciError::ElectronCount(format!(
                "({n_alpha}, {n_beta}) electrons in {n_orbitals} orbitals"
            )));
        }
        if one_body.len() != n_orbitals * n_orbitals {
            return Err(QsciError::InvalidInput("one-body matrix has wrong size".into()));
        }
        let mut dev = 0.0f64;
        for p in 0..n_orbitals {
            for q in 0..p {
                dev = dev.max((one_body[p * n_orbitals + q] - one_body[q * n_orbitals + p]).abs());
            }
        }
        if dev > DUPLICATE_TOLERANCE {
            return Err(QsciError::Symmetry {
                kind: "symmetric",
                deviation: dev,
            });
        }
        let mut map = BTreeMap::new();
        for (key, value) in two_body {
            if key.iter().any(|&i| i as usize >= n_orbitals) {
                return Err(QsciError::InvalidInput(format!("index {key:?} out of range")));
            }
            insert_checked(&mut map, canonical_key(key), value).map_err(|(old, new)| {
                QsciError::InvalidInput(format!("conflicting values {old} and {new} for {key:?}"))
            })?;
        }
        Ok(Self::from_parts(n_orbitals, n_alpha, n_beta, e_core, one_body, map))
    }

    fn from_parts(
        n_orbitals: usize,
        n_alpha: usize,
        n_beta: usize,
        e_core: f64,
        one_body: Vec<f64>,
        two_body: BTreeMap<EriKey, f64>,
    ) -> Self {
        let n = n_orbitals;
        let mut eri_dense = vec![0.0; n * n * n * n];
        for (&key, &v) in &two_body {
            for [p, q, r, s] in eri_permutations(key) {
                let idx = ((p as usize * n + q as usize) * n + r as usize) * n + s as usize;
                eri_dense[idx] = v;
            }
        }
        MolecularHamiltonian {
            n_orbitals,
            n_alpha,
            n_beta,
            e_core,
            one_body,
            two_body,
            eri_dense,
        }
    }

    /// One-electron integral `h_pq`.
    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_orbitals + q]
    }

    /// Two-electron integral `(pq|rs)` in chemists' notation.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orbitals;
        self.eri_dense[((p * n + q) * n + r) * n + s]
    }

    /// Canonical symmetry-reduced two-electron entries.
    pub fn two_body(&self) -> &BTreeMap<EriKey, f64> {
        &self.two_body
    }

    pub fn one_body(&self) -> &[f64] {
        &self.one_body
    }
}

fn insert_checked<K: Ord>(map: &mut BTreeMap<K, f64>, key: K, value: f64) -> std::result::Result<(), (f64, f64)> {
    match map.get(&key) {
        Some(&old) if (old - value).abs() > DUPLICATE_TOLERANCE => Err((old, value)),
        Some(_) => Ok(()),
        None => {
            map.insert(key, value);
            Ok(())
        }
    }
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i64,
}

fn parse_header(text: &str, first_line: usize) -> Result<Header> {
    let body = text.trim();
    let body = body
        .strip_prefix("&FCI")
        .or_else(|| body.strip_prefix("&fci"))
        .ok_or_else(|| QsciError::parse(first_line, "header must start with &FCI"))?;
    // glue "KEY =  value" into "KEY=value"
    let mut glued = String::with_capacity(body.len());
    let mut after_eq = false;
    for c in body.chars() {
        if c == '=' {
            glued.truncate(glued.trim_end().len());
            glued.push(c);
            after_eq = true;
        } else if !(after_eq && c.is_whitespace()) {
            glued.push(c);
            after_eq = false;
        }
    }
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = None;
    for token in glued.split(|c: char| c == ',' || c.is_whitespace()) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let Some((key, value)) = token.split_once('=') else {
            // continuation of a list-valued key such as ORBSYM
            continue;
        };
        let value = value.trim();
        let parse_num = |v: &str| -> Result<i64> {
            v.parse::<i64>()
                .map_err(|_| QsciError::parse(first_line, format!("bad value '{v}' for {key}")))
        };
        match key.trim().to_ascii_uppercase().as_str() {
            "NORB" => norb = Some(parse_num(value)?),
            "NELEC" => nelec = Some(parse_num(value)?),
            "MS2" => ms2 = Some(parse_num(value)?),
            _ => {}
        }
    }
    let norb = norb.ok_or_else(|| QsciError::parse(first_line, "header lacks NORB"))?;
    let nelec = nelec.ok_or_else(|| QsciError::parse(first_line, "header lacks NELEC"))?;
    let ms2 = ms2.unwrap_or(0);
    if norb <= 0 || norb as usize > MAX_ORBITALS {
        return Err(QsciError::parse(first_line, format!("NORB={norb} outside 1..={MAX_ORBITALS}")));
    }
    if nelec < 0 || (nelec + ms2) % 2 != 0 || ms2.abs() > nelec {
        return Err(QsciError::parse(
            first_line,
            format!("inconsistent NELEC={nelec}, MS2={ms2}"),
        ));
    }
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
    })
}

/// Parse FCIDUMP text.
pub fn parse_fcidump(text: &str) -> Result<MolecularHamiltonian> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = String::new();
    let mut first_line = 0;
    let mut closed = false;
    for (no, line) in lines.by_ref() {
        let t = line.trim();
        if header.is_empty() && t.is_empty() {
            continue;
        }
        if first_line == 0 {
            first_line = no;
        }
        let upper = t.to_ascii_uppercase();
        let end = upper.find("&END").or_else(|| t.strip_suffix('/').map(str::len));
        if let Some(pos) = end {
            header.push_str(&t[..pos]);
            closed = true;
            break;
        }
        header.push_str(t);
        header.push(' ');
    }
    if !closed {
        return Err(QsciError::parse(first_line.max(1), "unterminated &FCI header"));
    }
    let hdr = parse_header(&header, first_line)?;
    let n = hdr.norb;
    let n_alpha = ((hdr.nelec as i64 + hdr.ms2) / 2) as usize;
    let n_beta = ((hdr.nelec as i64 - hdr.ms2) / 2) as usize;
    if n_alpha == 0 || n_beta == 0 || n_alpha > n || n_beta > n {
        return Err(QsciError::parse(
            first_line,
            format!("({n_alpha}, {n_beta}) electrons do not fit in {n} orbitals"),
        ));
    }

    let mut one_body = vec![0.0; n * n];
    let mut one_seen = vec![false; n * n];
    let mut two_body: BTreeMap<EriKey, f64> = BTreeMap::new();
    let mut e_core: Option<f64> = None;
    for (no, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(QsciError::parse(no, format!("expected 5 fields, found {}", fields.len())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| QsciError::parse(no, format!("bad value '{}'", fields[0])))?;
        let mut idx = [0usize; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            let i: i64 = f
                .parse()
                .map_err(|_| QsciError::parse(no, format!("bad index '{f}'")))?;
            if i < 0 || i as usize > n {
                return Err(QsciError::parse(no, format!("index {i} outside [0, {n}]")));
            }
            idx[k] = i as usize;
        }
        let conflict = |old: f64| {
            QsciError::parse(no, format!("conflicting duplicate: {value} vs earlier {old}"))
        };
        match idx {
            [0, 0, 0, 0] => match e_core {
                Some(old) if (old - value).abs() > DUPLICATE_TOLERANCE => return Err(conflict(old)),
                Some(_) => {}
                None => e_core = Some(value),
            },
            [p, q, 0, 0] if p > 0 && q > 0 => {
                let (p, q) = (p - 1, q - 1);
                for (a, b) in [(p, q), (q, p)] {
                    let k = a * n + b;
                    if one_seen[k] {
                        if (one_body[k] - value).abs() > DUPLICATE_TOLERANCE {
                            return Err(conflict(one_body[k]));
                        }
                    } else {
                        one_seen[k] = true;
                        one_body[k] = value;
                    }
                }
            }
            // orbital-energy records carry nothing the Hamiltonian needs
            [p, 0, 0, 0] if p > 0 => {}
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                let key = canonical_key([(p - 1) as u8, (q - 1) as u8, (r - 1) as u8, (s - 1) as u8]);
                insert_checked(&mut two_body, key, value).map_err(|(old, _)| conflict(old))?;
            }
            other => {
                return Err(QsciError::parse(no, format!("unsupported index pattern {other:?}")));
            }
        }
    }
    Ok(MolecularHamiltonian::from_parts(
        n,
        n_alpha,
        n_beta,
        e_core.unwrap_or(0.0),
        one_body,
        two_body,
    ))
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<MolecularHamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| QsciError::io(path, e))?;
    parse_fcidump(&text)
}

/// Serialise in canonical form: each symmetry-distinct integral once.
pub fn write_fcidump(h: &MolecularHamiltonian) -> String {
    let n = h.n_orbitals;
    let mut out = String::new();
    let nelec = h.n_alpha + h.n_beta;
    let ms2 = h.n_alpha as i64 - h.n_beta as i64;
    writeln!(out, " &FCI NORB={n},NELEC={nelec},MS2={ms2},").unwrap();
    writeln!(out, "  ORBSYM={}", vec!["1"; n].join(",")).unwrap();
    writeln!(out, "  ISYM=1,").unwrap();
    writeln!(out, " &END").unwrap();
    for (&[p, q, r, s], &v) in h.two_body() {
        if v != 0.0 {
            writeln!(out, "{v:24.16e} {:4} {:4} {:4} {:4}", p + 1, q + 1, r + 1, s + 1).unwrap();
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = h.h(p, q);
            if v != 0.0 {
                writeln!(out, "{v:24.16e} {:4} {:4} {:4} {:4}", p + 1, q + 1, 0, 0).unwrap();
            }
        }
    }
    writeln!(out, "{:24.16e} {:4} {:4} {:4} {:4}", h.e_core, 0, 0, 0, 0).unwrap();
    out
}

/// Diagonal of the closed-shell Fock matrix built from the stored integrals.
///
/// Only meaningful when the orbitals are canonical RHF orbitals, in which
/// case these are the orbital energies.
pub fn fock_diagonal(h: &MolecularHamiltonian) -> Vec<f64> {
    (0..h.n_orbitals)
        .map(|p| {
            h.h(p, p)
                + (0..h.n_alpha)
                    .map(|i| 2.0 * h.eri(p, p, i, i) - h.eri(p, i, i, p))
                    .sum::<f64>()
        })
        .collect()
}

/// Restricted doubles amplitudes `t[i][j][a][b]`, virtual indices counted
/// from the first virtual orbital.
#[derive(Clone, Debug, PartialEq)]
pub struct T2Tensor {
    pub n_occ: usize,
    pub n_virt: usize,
    data: Vec<f64>,
}

impl T2Tensor {
    pub fn zeros(n_occ: usize, n_virt: usize) -> Self {
        T2Tensor {
            n_occ,
            n_virt,
            data: vec![0.0; n_occ * n_occ * n_virt * n_virt],
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        ((i * self.n_occ + j) * self.n_virt + a) * self.n_virt + b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.data[self.index(i, j, a, b)]
    }

    /// Set `t[i][j][a][b]` and its exchange partner `t[j][i][b][a]`.
    pub fn set_pair(&mut self, i: usize, j: usize, a: usize, b: usize, value: f64) {
        let k = self.index(i, j, a, b);
        self.data[k] = value;
        let k = self.index(j, i, b, a);
        self.data[k] = value;
    }

    /// Largest violation of `t[i][j][a][b] == t[j][i][b][a]`.
    pub fn exchange_asymmetry(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.n_occ {
            for j in 0..self.n_occ {
                for a in 0..self.n_virt {
                    for b in 0..self.n_virt {
                        dev = dev.max((self.get(i, j, a, b) - self.get(j, i, b, a)).abs());
                    }
                }
            }
        }
        dev
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// First-order (MP2) doubles: `t = (ia|jb) / (ε_i + ε_j − ε_a − ε_b)`.
pub fn mp2_t2(h: &MolecularHamiltonian, eps: &[f64], threshold: f64) -> Result<T2Tensor> {
    if eps.len() != h.n_orbitals {
        return Err(QsciError::InvalidInput(format!(
            "{} orbital energies for {} orbitals",
            eps.len(),
            h.n_orbitals
        )));
    }
    let n_occ = h.n_alpha;
    let n_virt = h.n_orbitals - n_occ;
    let mut t2 = T2Tensor::zeros(n_occ, n_virt);
    for i in 0..n_occ {
        for j in 0..n_occ {
            for a in 0..n_virt {
                for b in 0..n_virt {
                    let (va, vb) = (n_occ + a, n_occ + b);
                    let denominator = eps[i] + eps[j] - eps[va] - eps[vb];
                    if denominator.abs() <= threshold {
                        return Err(QsciError::DegenerateOrbitals {
                            i,
                            j,
                            a,
                            b,
                            denominator,
                        });
                    }
                    let k = t2.index(i, j, a, b);
                    t2.data[k] = h.eri(i, va, j, vb) / denominator;
                }
            }
        }
    }
    Ok(t2)
}

/// Parse the amplitude text format: a `NOCC=<n> NVIRT=<m>` header followed by
/// `i j a b value` lines (0-based). `#` starts a comment.
pub fn parse_t2(text: &str) -> Result<T2Tensor> {
    let mut t2: Option<T2Tensor> = None;
    let mut seen: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some(t) = t2.as_mut() else {
            let (mut nocc, mut nvirt) = (None, None);
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| QsciError::parse(no, format!("expected KEY=VALUE, found '{tok}'")))?;
                let v: usize = v.parse().map_err(|_| QsciError::parse(no, format!("bad value '{v}'")))?;
                match k.to_ascii_uppercase().as_str() {
                    "NOCC" => nocc = Some(v),
                    "NVIRT" => nvirt = Some(v),
                    other => return Err(QsciError::parse(no, format!("unknown header key '{other}'"))),
                }
            }
            match (nocc, nvirt) {
                (Some(o), Some(v)) => t2 = Some(T2Tensor::zeros(o, v)),
                _ => return Err(QsciError::parse(no, "header must name NOCC and NVIRT")),
            }
            continue;
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(QsciError::parse(no, format!("expected 5 fields, found {}", fields.len())));
        }
        let mut idx = [0usize; 4];
        for k in 0..4 {
            idx[k] = fields[k]
                .parse()
                .map_err(|_| QsciError::parse(no, format!("bad index '{}'", fields[k])))?;
        }
        let value: f64 = fields[4]
            .parse()
            .map_err(|_| QsciError::parse(no, format!("bad value '{}'", fields[4])))?;
        let [i, j, a, b] = idx;
        if i >= t.n_occ || j >= t.n_occ || a >= t.n_virt || b >= t.n_virt {
            return Err(QsciError::parse(no, format!("index {idx:?} outside declared range")));
        }
        for key in [[i, j, a, b], [j, i, b, a]] {
            if let Some(&old) = seen.get(&key) {
                if (old - value).abs() > DUPLICATE_TOLERANCE {
                    return Err(QsciError::parse(
                        no,
                        format!("symmetry conflict: {value} vs {old} for {key:?}"),
                    ));
                }
            }
        }
        seen.insert([i, j, a, b], value);
        seen.insert([j, i, b, a], value);
        t.set_pair(i, j, a, b, value);
    }
    t2.ok_or_else(|| QsciError::parse(1, "missing NOCC/NVIRT header"))
}

pub fn read_t2(path: impl AsRef<Path>) -> Result<T2Tensor> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| QsciError::io(path, e))?;
    parse_t2(&text)
}

/// Write every nonzero amplitude once per exchange pair.
pub fn write_t2(t2: &T2Tensor) -> String {
    let mut out = format!("NOCC={} NVIRT={}\n", t2.n_occ, t2.n_virt);
    for i in 0..t2.n_occ {
        for j in 0..t2.n_occ {
            for a in 0..t2.n_virt {
                for b in 0..t2.n_virt {
                    if (i, j, a, b) > (j, i, b, a) {
                        continue;
                    }
                    let v = t2.get(i, j, a, b);
                    if v != 0.0 {
                        writeln!(out, "{i} {j} {a} {b} {v:.17e}").unwrap();
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(norb: usize, nelec: usize, ms2: i64) -> String {
        format!("&FCI NORB={norb},NELEC={nelec},MS2={ms2},\n ORBSYM={},\n ISYM=1,\n&END\n", vec!["1"; norb].join(","))
    }

    #[test]
    fn core_energy_only() {
        let h = parse_fcidump(&(header(1, 2, 0) + "0.5 0 0 0 0\n")).unwrap();
        assert_eq!(h.e_core, 0.5);
        assert_eq!(h.h(0, 0), 0.0);
        assert_eq!(h.eri(0, 0, 0, 0), 0.0);
        assert_eq!((h.n_alpha, h.n_beta), (1, 1));
    }

    #[test]
    fn eightfold_expansion() {
        let h = parse_fcidump(&(header(2, 2, 0) + "0.25 1 2 1 2\n")).unwrap();
        for [p, q, r, s] in eri_permutations([0, 1, 0, 1]) {
            assert_eq!(h.eri(p as usize, q as usize, r as usize, s as usize), 0.25);
        }
        assert_eq!(h.eri(0, 0, 1, 1), 0.0);
        assert_eq!(h.two_body().len(), 1);
    }

    #[test]
    fn open_shell_counts() {
        let h = parse_fcidump(&(header(3, 3, 1) + "1.0 1 1 0 0\n")).unwrap();
        assert_eq!((h.n_alpha, h.n_beta), (2, 1));
    }

    #[test]
    fn slash_terminated_header() {
        let text = "&FCI NORB=2, NELEC=2, MS2=0,\n ORBSYM=1,1,\n /\n -1.0 1 1 0 0\n";
        let h = parse_fcidump(text).unwrap();
        assert_eq!(h.h(0, 0), -1.0);
    }

    #[test]
    fn errors_name_the_line() {
        let bad_index = header(2, 2, 0) + "0.1 1 1 0 0\n0.2 3 1 1 1\n";
        match parse_fcidump(&bad_index) {
            Err(QsciError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        let conflict = header(2, 2, 0) + "0.1 1 2 1 2\n0.3 2 1 2 1\n";
        match parse_fcidump(&conflict) {
            Err(QsciError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("conflict"));
            }
            other => panic!("expected conflict, got {other:?}"),
        }
        // equal within tolerance is accepted
        let near = header(2, 2, 0) + "0.1 1 2 1 2\n0.1000000000000001 2 1 2 1\n";
        assert!(parse_fcidump(&near).is_ok());
        assert!(matches!(parse_fcidump("NORB=2\n"), Err(QsciError::Parse { .. })));
        assert!(matches!(
            parse_fcidump("&FCI NELEC=2,\n&END\n"),
            Err(QsciError::Parse { .. })
        ));
        assert!(matches!(
            parse_fcidump(&(header(2, 2, 0) + "0.1 1 2\n")),
            Err(QsciError::Parse { .. })
        ));
    }

    #[test]
    fn fock_diagonal_without_two_body() {
        let h = MolecularHamiltonian::new(2, 1, 1, 0.0, vec![-1.25, 0.0, 0.0, -0.47], []).unwrap();
        assert_eq!(fock_diagonal(&h), vec![-1.25, -0.47]);
        let z = MolecularHamiltonian::new(3, 1, 1, 0.0, vec![0.0; 9], []).unwrap();
        assert_eq!(fock_diagonal(&z), vec![0.0; 3]);
    }

    #[test]
    fn mp2_single_entry_and_zero() {
        let h = MolecularHamiltonian::new(2, 1, 1, 0.0, vec![0.0; 4], [([0, 1, 0, 1], 0.1)]).unwrap();
        let t2 = mp2_t2(&h, &[-0.5, 0.0], 1e-8).unwrap();
        assert!((t2.get(0, 0, 0, 0) + 0.1).abs() < 1e-15);
        let z = MolecularHamiltonian::new(2, 1, 1, 0.0, vec![0.0; 4], []).unwrap();
        let t0 = mp2_t2(&z, &[-0.5, 0.0], 1e-8).unwrap();
        assert!(t0.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mp2_degenerate_denominator() {
        let h = MolecularHamiltonian::new(2, 1, 1, 0.0, vec![0.0; 4], []).unwrap();
        match mp2_t2(&h, &[0.1, 0.1], 1e-8) {
            Err(QsciError::DegenerateOrbitals { i, j, a, b, .. }) => assert_eq!((i, j, a, b), (0, 0, 0, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn t2_text_format() {
        let empty = parse_t2("NOCC=2 NVIRT=3\n").unwrap();
        assert!(empty.as_slice().iter().all(|&v| v == 0.0));
        let one = parse_t2("NOCC=2 NVIRT=3\n0 1 2 0 0.05\n").unwrap();
        assert_eq!(one.get(0, 1, 2, 0), 0.05);
        assert_eq!(one.get(1, 0, 0, 2), 0.05);
        assert!(parse_t2("NOCC=2 NVIRT=3\n2 0 0 0 0.1\n").is_err());
        assert!(parse_t2("NOCC=2 NVIRT=3\n0 1 2 0 0.05\n1 0 0 2 0.06\n").is_err());
        assert!(parse_t2("0 1 2 0 0.05\n").is_err());
    }

    #[test]
    fn mismatched_one_body_rejected() {
        let err = MolecularHamiltonian::new(2, 1, 1, 0.0, vec![0.0, 0.1, 0.2, 0.0], []);
        assert!(matches!(err, Err(QsciError::Symmetry { .. })));
    }
}
