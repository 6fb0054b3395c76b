//! Batched determinant subspaces built from sample sets.
//!
//! Each batch draws sample keys (count-weighted, with replacement), pools
//! their α and β halves into one string set and recombines every valid
//! (α, β) string pair into a determinant subspace.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use crate::detspace::{split_raw, Determinant, SpinString};
use crate::eig::{build_hamiltonian, ground_state_with, CIVector, DavidsonOptions};
use crate::error::{QsciError, Result};
use crate::integrals::MolecularHamiltonian;
use crate::rng::{derive_seed, seeded};
use crate::sampler::SampleSet;

/// Default per-batch dimension cap.
pub const DEFAULT_MAX_DIMENSION: u128 = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchMode {
    /// Draw until `√d` distinct strings are pooled.
    FixedSubspace { d: u64 },
    /// Exactly `n_draw` key draws.
    FixedDraw { n_draw: usize },
}

impl BatchMode {
    pub fn validate(self) -> Result<()> {
        match self {
            BatchMode::FixedSubspace { d } => {
                isqrt_exact(d)?;
            }
            BatchMode::FixedDraw { n_draw: 0 } => {
                return Err(QsciError::InvalidInput("n_draw must be at least 1".into()));
            }
            BatchMode::FixedDraw { .. } => {}
        }
        Ok(())
    }
}

fn isqrt_exact(d: u64) -> Result<usize> {
    let r = (d as f64).sqrt().round() as u64;
    if d == 0 || r * r != d {
        return Err(QsciError::InvalidInput(format!("d = {d} is not a positive perfect square")));
    }
    Ok(r as usize)
}

/// Which halves of a drawn key enter the string set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pooling {
    /// α and β halves share one string set.
    #[default]
    Pooled,
    /// Only α halves are collected; β strings reuse the α set.
    AlphaOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchConfig {
    pub n_batches: usize,
    pub mode: BatchMode,
    pub pooling: Pooling,
    pub seed: u64,
    pub max_dimension: u128,
    pub davidson: DavidsonOptions,
}

impl BatchConfig {
    pub fn new(n_batches: usize, mode: BatchMode, seed: u64) -> Self {
        BatchConfig {
            n_batches,
            mode,
            pooling: Pooling::Pooled,
            seed,
            max_dimension: DEFAULT_MAX_DIMENSION,
            davidson: DavidsonOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_batches == 0 {
            return Err(QsciError::InvalidInput("at least one batch is required".into()));
        }
        self.mode.validate()
    }
}

/// Strings collected by one batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringDraw {
    pub strings: BTreeSet<SpinString>,
    /// Keys drawn.
    pub draws: usize,
    /// String slots offered (one or two per draw).
    pub slots: usize,
}

fn halves(key: crate::RawBitstring, n: usize, pooling: Pooling) -> Vec<SpinString> {
    let (a, b) = split_raw(key, n);
    match pooling {
        Pooling::Pooled => vec![a, b],
        Pooling::AlphaOnly => vec![a],
    }
}

/// All distinct strings the sample set can contribute.
pub fn pooled_strings(samples: &SampleSet, pooling: Pooling) -> BTreeSet<SpinString> {
    let n = samples.n_orbitals();
    samples.keys().flat_map(|k| halves(k, n, pooling)).collect()
}

pub fn draw_strings(samples: &SampleSet, mode: BatchMode, pooling: Pooling, seed: u64) -> Result<StringDraw> {
    mode.validate()?;
    let n = samples.n_orbitals();
    let mut out = StringDraw {
        strings: BTreeSet::new(),
        draws: 0,
        slots: 0,
    };
    if samples.is_empty() {
        return Ok(out);
    }
    let keys: Vec<crate::RawBitstring> = samples.keys().collect();
    let cumulative: Vec<u64> = samples
        .iter()
        .scan(0u64, |acc, (_, c)| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let total = samples.total_counts();
    let mut rng = seeded(seed);
    let draw = |rng: &mut crate::rng::Rng| {
        let r = rng.random_range(0..total);
        keys[cumulative.partition_point(|&c| c <= r)]
    };
    match mode {
        BatchMode::FixedSubspace { d } => {
            let target = isqrt_exact(d)?.min(pooled_strings(samples, pooling).len());
            'outer: while out.strings.len() < target {
                let key = draw(&mut rng);
                out.draws += 1;
                for s in halves(key, n, pooling) {
                    out.slots += 1;
                    out.strings.insert(s);
                    if out.strings.len() == target {
                        break 'outer;
                    }
                }
            }
        }
        BatchMode::FixedDraw { n_draw } => {
            for _ in 0..n_draw {
                let key = draw(&mut rng);
                out.draws += 1;
                for s in halves(key, n, pooling) {
                    out.slots += 1;
                    out.strings.insert(s);
                }
            }
        }
    }
    Ok(out)
}

fn role_filter(strings: &BTreeSet<SpinString>, k: usize) -> Vec<SpinString> {
    strings.iter().copied().filter(|s| s.count() as usize == k).collect()
}

/// Sorted Cartesian product of the strings with the right weight for each role.
pub fn recombine(strings: &BTreeSet<SpinString>, n_alpha: usize, n_beta: usize) -> Vec<Determinant> {
    let a = role_filter(strings, n_alpha);
    let b = role_filter(strings, n_beta);
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in &a {
        for &y in &b {
            out.push(Determinant::new(x, y));
        }
    }
    out
}

/// `|S_α| · |S_β|` without building the product.
pub fn recombined_dimension(strings: &BTreeSet<SpinString>, n_alpha: usize, n_beta: usize) -> u128 {
    let count = |k: usize| strings.iter().filter(|s| s.count() as usize == k).count() as u128;
    count(n_alpha) * count(n_beta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub seed: u64,
    pub draws: usize,
    pub distinct_strings: usize,
    pub dimension: usize,
    /// `None` when recombination produced no determinant.
    pub energy: Option<f64>,
    pub state: Option<CIVector>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub batches: Vec<Batch>,
    pub min_energy: f64,
    pub argmin: usize,
}

impl BatchResult {
    /// Ground states of the non-empty batches.
    pub fn states(&self) -> Vec<CIVector> {
        self.batches.iter().filter_map(|b| b.state.clone()).collect()
    }

    pub fn energies(&self) -> Vec<Option<f64>> {
        self.batches.iter().map(|b| b.energy).collect()
    }

    pub fn best(&self) -> &Batch {
        &self.batches[self.argmin]
    }
}

fn check_samples(samples: &SampleSet, h: &MolecularHamiltonian) -> Result<()> {
    if samples.n_qubits() != 2 * h.n_orbitals {
        return Err(QsciError::InvalidInput(format!(
            "samples have {} qubits, Hamiltonian needs {}",
            samples.n_qubits(),
            2 * h.n_orbitals
        )));
    }
    if samples.is_empty() {
        return Err(QsciError::EmptySubspace("sample set is empty".into()));
    }
    Ok(())
}

fn solve(
    strings: &BTreeSet<SpinString>,
    h: &MolecularHamiltonian,
    max_dimension: u128,
    davidson: &DavidsonOptions,
) -> Result<Option<(f64, CIVector)>> {
    let dim = recombined_dimension(strings, h.n_alpha, h.n_beta);
    if dim > max_dimension {
        return Err(QsciError::Capacity {
            what: "subspace dimension",
            requested: dim,
            limit: max_dimension,
        });
    }
    if dim == 0 {
        return Ok(None);
    }
    let space = recombine(strings, h.n_alpha, h.n_beta);
    let hs = build_hamiltonian(&space, h)?;
    ground_state_with(&hs, davidson).map(Some)
}

/// `K` independent draw, recombine and diagonalize runs; seeds are
/// `derive_seed(cfg.seed, k)`.
pub fn run_batches(samples: &SampleSet, h: &MolecularHamiltonian, cfg: &BatchConfig) -> Result<BatchResult> {
    cfg.validate()?;
    check_samples(samples, h)?;
    let batches = (0..cfg.n_batches)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(cfg.seed, k as u64);
            let draw = draw_strings(samples, cfg.mode, cfg.pooling, seed)?;
            let solved = solve(&draw.strings, h, cfg.max_dimension, &cfg.davidson)?;
            let dimension = solved.as_ref().map_or(0, |(_, v)| v.len());
            let (energy, state) = match solved {
                Some((e, v)) => (Some(e), Some(v)),
                None => (None, None),
            };
            Ok(Batch {
                seed,
                draws: draw.draws,
                distinct_strings: draw.strings.len(),
                dimension,
                energy,
                state,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmin, min_energy) = batches
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.energy.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| QsciError::EmptySubspace("every batch recombined to an empty subspace".into()))?;
    Ok(BatchResult {
        batches,
        min_energy,
        argmin,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullSubspace {
    pub energy: f64,
    pub dimension: usize,
    pub state: CIVector,
}

/// One diagonalization over every pooled string.
pub fn full_subspace(samples: &SampleSet, h: &MolecularHamiltonian, max_dimension: u128) -> Result<FullSubspace> {
    check_samples(samples, h)?;
    let strings = pooled_strings(samples, Pooling::Pooled);
    let (energy, state) = solve(&strings, h, max_dimension, &DavidsonOptions::default())?
        .ok_or_else(|| QsciError::EmptySubspace("no string has the target electron count".into()))?;
    Ok(FullSubspace {
        energy,
        dimension: state.len(),
        state,
    })
}

/// `batch,draws,distinct_strings,dimension,energy` rows.
pub fn batch_csv(result: &BatchResult) -> String {
    let mut out = String::from("batch,draws,distinct_strings,dimension,energy\n");
    for (k, b) in result.batches.iter().enumerate() {
        let e = b.energy.map(|e| format!("{e:.12}")).unwrap_or_default();
        writeln!(out, "{k},{},{},{},{e}", b.draws, b.distinct_strings, b.dimension).unwrap();
    }
    out
}
