//! Sample sets and the generators that fill them.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::detspace::BitOrder;
use crate::detspace::{parse_rendered, render, Determinant, RawBitstring};
use crate::eig::CIVector;
use crate::error::{QsciError, Result};
use crate::rng::{seeded, stream};

/// Norm tolerance for states handed to [`sample_exact`].
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Shot budget emulated by [`support_set`].
pub const SUPPORT_SHOTS: f64 = 1e8;

/// Measured bitstrings with positive counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleSet {
    entries: BTreeMap<RawBitstring, u64>,
    n_qubits: usize,
    total: u64,
}

impl SampleSet {
    pub fn new(n_qubits: usize) -> Self {
        SampleSet {
            entries: BTreeMap::new(),
            n_qubits,
            total: 0,
        }
    }

    pub fn from_counts(n_qubits: usize, counts: impl IntoIterator<Item = (RawBitstring, u64)>) -> Result<Self> {
        let mut s = SampleSet::new(n_qubits);
        for (k, c) in counts {
            s.add(k, c)?;
        }
        Ok(s)
    }

    /// Add `count` observations of `key`.
    pub fn add(&mut self, key: RawBitstring, count: u64) -> Result<()> {
        if count == 0 {
            return Err(QsciError::InvalidInput("sample counts must be positive".into()));
        }
        if !key.fits(self.n_qubits) {
            return Err(QsciError::InvalidInput(format!(
                "bitstring {:#x} does not fit in {} qubits",
                key.0, self.n_qubits
            )));
        }
        *self.entries.entry(key).or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_qubits / 2
    }

    pub fn total_counts(&self) -> u64 {
        self.total
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, key: RawBitstring) -> u64 {
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn contains(&self, key: RawBitstring) -> bool {
        self.entries.contains_key(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RawBitstring, u64)> + '_ {
        self.entries.iter().map(|(&k, &c)| (k, c))
    }

    pub fn keys(&self) -> impl Iterator<Item = RawBitstring> + '_ {
        self.entries.keys().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Probability of continuing the flip chain.
    pub p: f64,
    /// Hard cap on flips per descendant.
    pub max_flips: usize,
    pub seed: u64,
}

impl NoiseConfig {
    /// Configuration with the default cap of `8 · n_qubits` flips.
    pub fn new(p: f64, n_qubits: usize, seed: u64) -> Self {
        NoiseConfig {
            p,
            max_flips: default_max_flips(n_qubits),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(QsciError::InvalidInput(format!("noise p = {} outside [0, 1]", self.p)));
        }
        if self.max_flips == 0 {
            return Err(QsciError::InvalidInput("max_flips must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn default_max_flips(n_qubits: usize) -> usize {
    8 * n_qubits.max(1)
}

/// Multinomial draw of `n_shots` outcomes with probabilities `|c_i|²`.
pub fn sample_exact(state: &CIVector, n_shots: u64, seed: u64) -> Result<SampleSet> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(QsciError::InvalidInput(format!("state norm² is {norm}, expected 1")));
    }
    let n = state.n_orbitals();
    let mut out = SampleSet::new(2 * n);
    let mut rng = seeded(seed);
    let mut remaining = n_shots;
    let mut mass = 1.0f64;
    for (det, c) in state.iter() {
        if remaining == 0 {
            break;
        }
        let prob = c.norm_sqr();
        if prob == 0.0 {
            continue;
        }
        let q = if mass > 0.0 { (prob / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = Binomial::new(remaining, q)
            .map_err(|e| QsciError::InvalidInput(e.to_string()))?
            .sample(&mut rng);
        if k > 0 {
            out.add(det.to_raw(n), k)?;
        }
        remaining -= k;
        mass -= prob;
    }
    Ok(out)
}

/// Every determinant with `|c|² > cutoff`, weighted by its expected count
/// under [`SUPPORT_SHOTS`] shots (at least 1).
pub fn support_set(state: &CIVector, cutoff: f64) -> Result<SampleSet> {
    let n = state.n_orbitals();
    SampleSet::from_counts(
        2 * n,
        state
            .iter()
            .filter(|(_, c)| c.norm_sqr() > cutoff)
            .map(|(d, c)| (d.to_raw(n), ((c.norm_sqr() * SUPPORT_SHOTS).round() as u64).max(1))),
    )
}

/// One descendant per parent from the bit-flip chain: while a fresh uniform
/// `r < p` (and the cap is not reached) flip a uniform bit. The descendant
/// joins the set with the parent's count, so totals double and parents stay.
pub fn apply_noise(samples: &SampleSet, cfg: &NoiseConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let n_qubits = samples.n_qubits();
    let parents: Vec<(RawBitstring, u64)> = samples.iter().collect();
    let descendants: Vec<(RawBitstring, u64)> = parents
        .par_iter()
        .map(|&(key, count)| {
            let mut rng = stream(cfg.seed, key.0);
            (flip_chain(key, n_qubits, cfg, &mut rng), count)
        })
        .collect();
    let mut out = samples.clone();
    for (d, c) in descendants {
        out.add(d, c)?;
    }
    Ok(out)
}

fn flip_chain(key: RawBitstring, n_qubits: usize, cfg: &NoiseConfig, rng: &mut impl rand::Rng) -> RawBitstring {
    let mut x = key.0;
    if n_qubits == 0 {
        return key;
    }
    let mut flips = 0;
    while flips < cfg.max_flips && rng.random::<f64>() < cfg.p {
        x ^= 1u64 << rng.random_range(0..n_qubits);
        flips += 1;
    }
    RawBitstring(x)
}

/// Uniform `n_qubits`-bit strings until `target_distinct` distinct keys are
/// present, then `include_hf` (if any) added with count 1.
pub fn random_uniform_set(
    n_qubits: usize,
    target_distinct: usize,
    include_hf: Option<Determinant>,
    seed: u64,
) -> Result<SampleSet> {
    if n_qubits == 0 || n_qubits > 64 {
        return Err(QsciError::InvalidInput(format!("{n_qubits} qubits is outside 1..=64")));
    }
    let space = 1u128 << n_qubits;
    if target_distinct as u128 > space {
        return Err(QsciError::Capacity {
            what: "distinct random bitstrings",
            requested: target_distinct as u128,
            limit: space,
        });
    }
    let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
    let mut rng = seeded(seed);
    let mut out = SampleSet::new(n_qubits);
    while out.len() < target_distinct {
        out.add(RawBitstring(rng.random::<u64>() & mask), 1)?;
    }
    if let Some(hf) = include_hf {
        out.add(hf.to_raw(n_qubits / 2), 1)?;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Record {
    bits: String,
    count: i64,
}

/// Parse line-delimited `{"bits": "...", "count": k}` records. An empty
/// input yields an empty set over `default_qubits` qubits.
pub fn parse_samples(text: &str, order: BitOrder, default_qubits: usize) -> Result<SampleSet> {
    let mut out: Option<SampleSet> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| QsciError::parse(line_no, e.to_string()))?;
        if rec.count <= 0 {
            return Err(QsciError::parse(line_no, format!("nonpositive count {}", rec.count)));
        }
        let (key, n) = parse_rendered(&rec.bits, order).map_err(|e| QsciError::parse(line_no, e.to_string()))?;
        let set = out.get_or_insert_with(|| SampleSet::new(2 * n));
        if 2 * n != set.n_qubits() {
            return Err(QsciError::parse(
                line_no,
                format!("bitstring length {} differs from {}", 2 * n, set.n_qubits()),
            ));
        }
        set.add(key, rec.count as u64)?;
    }
    Ok(out.unwrap_or_else(|| SampleSet::new(default_qubits)))
}

pub fn format_samples(set: &SampleSet, order: BitOrder) -> String {
    let n = set.n_orbitals();
    let mut out = String::new();
    for (k, c) in set.iter() {
        let rec = Record {
            bits: render(k, n, order),
            count: c as i64,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_samples(path: impl AsRef<Path>, order: BitOrder) -> Result<SampleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| QsciError::io(path, e))?;
    parse_samples(&text, order, 0)
}

pub fn write_samples(set: &SampleSet, path: impl AsRef<Path>, order: BitOrder) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| QsciError::io(path, e))?;
    f.write_all(format_samples(set, order).as_bytes())
        .map_err(|e| QsciError::io(path, e))
}
