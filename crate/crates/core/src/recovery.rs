//! Configuration recovery.
//!
//! Samples with the wrong electron count in a spin sector are repaired by
//! flipping bits chosen with probability proportional to how far each bit
//! is from the batch-averaged occupation of its orbital. Every iteration
//! repairs the original raw set using the previous iteration's occupations.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::detspace::{join, split_raw, Determinant, SpinString};
use crate::eig::{occupations, OccupationVector};
use crate::error::{QsciError, Result};
use crate::integrals::MolecularHamiltonian;
use crate::rng::{derive_seed, stream};
use crate::sampler::SampleSet;
use crate::subspace::{run_batches, BatchConfig, BatchResult};

/// Floor added to every flip weight.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryConfig {
    pub iterations: usize,
    pub seed: u64,
    pub batch: BatchConfig,
    /// Insert the HF determinant when no raw sample is physical.
    pub hf_fallback: bool,
}

impl RecoveryConfig {
    pub fn new(batch: BatchConfig, seed: u64) -> Self {
        RecoveryConfig {
            iterations: 5,
            seed,
            batch,
            hf_fallback: false,
        }
    }
}

/// Keys whose α and β halves carry exactly `n_alpha` and `n_beta` electrons.
pub fn filter_physical(samples: &SampleSet, n_alpha: usize, n_beta: usize) -> SampleSet {
    let n = samples.n_orbitals();
    let kept = samples.iter().filter(|&(k, _)| {
        let (a, b) = split_raw(k, n);
        a.count() as usize == n_alpha && b.count() as usize == n_beta
    });
    SampleSet::from_counts(samples.n_qubits(), kept).expect("subset of a valid set")
}

/// Flip probabilities for one candidate bit.
pub trait FlipKernel: Sync {
    /// Weight of flipping orbital `p` whose current bit is `bit`, given its
    /// average occupation `n`.
    fn weight(&self, bit: bool, n: f64) -> f64;
}

/// `|x − n| + ε`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeviationKernel;

impl FlipKernel for DeviationKernel {
    fn weight(&self, bit: bool, n: f64) -> f64 {
        (bit as u8 as f64 - n).abs() + WEIGHT_FLOOR
    }
}

/// Bring `s` to `target` electrons by flipping occupied (too many) or empty
/// (too few) bits, sampled without replacement by kernel weight.
pub fn correct_sector(
    s: SpinString,
    occ: &[f64],
    target: usize,
    kernel: &dyn FlipKernel,
    rng: &mut impl rand::Rng,
) -> SpinString {
    let have = s.count() as usize;
    if have == target {
        return s;
    }
    let remove = have > target;
    let mut candidates: Vec<(usize, f64)> = (0..occ.len())
        .filter(|&p| s.is_occupied(p) == remove)
        .map(|p| (p, kernel.weight(remove, occ[p])))
        .collect();
    let mut out = s;
    for _ in 0..have.abs_diff(target) {
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        let mut r = rng.random::<f64>() * total;
        let mut pick = candidates.len() - 1;
        for (i, &(_, w)) in candidates.iter().enumerate() {
            if r < w {
                pick = i;
                break;
            }
            r -= w;
        }
        let (p, _) = candidates.swap_remove(pick);
        out = out.flip(p);
    }
    out
}

/// Repair every key of `raw`; key `x` uses random stream `x` of `seed`.
pub fn correct_configurations(
    raw: &SampleSet,
    occ: &OccupationVector,
    n_alpha: usize,
    n_beta: usize,
    seed: u64,
) -> Result<SampleSet> {
    correct_with(raw, occ, n_alpha, n_beta, seed, &DeviationKernel)
}

pub fn correct_with(
    raw: &SampleSet,
    occ: &OccupationVector,
    n_alpha: usize,
    n_beta: usize,
    seed: u64,
    kernel: &dyn FlipKernel,
) -> Result<SampleSet> {
    let n = raw.n_orbitals();
    if occ.alpha.len() != n || occ.beta.len() != n {
        return Err(QsciError::InvalidInput(format!(
            "occupations cover {}/{} orbitals, samples have {n}",
            occ.alpha.len(),
            occ.beta.len()
        )));
    }
    if n_alpha > n || n_beta > n {
        return Err(QsciError::ElectronCount(format!(
            "({n_alpha}, {n_beta}) electrons do not fit in {n} orbitals"
        )));
    }
    let fixed: Vec<_> = raw
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(key, count)| {
            let mut rng = stream(seed, key.0);
            let (a, b) = split_raw(key, n);
            let a = correct_sector(a, &occ.alpha, n_alpha, kernel, &mut rng);
            let b = correct_sector(b, &occ.beta, n_beta, kernel, &mut rng);
            (join(a, b, n), count)
        })
        .collect();
    SampleSet::from_counts(raw.n_qubits(), fixed)
}

/// One pass of the recovery loop.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryIteration {
    pub iteration: usize,
    /// Minimum over batches.
    pub energy: f64,
    pub batch_energies: Vec<Option<f64>>,
    /// Dimension of the minimizing batch.
    pub dimension: usize,
    pub occupations: OccupationVector,
    /// Physical set the batches were drawn from.
    pub corrected: SampleSet,
}

/// Iteration 0 uses the physical part of `raw`; iteration `i ≥ 1` corrects
/// `raw` with the occupations of iteration `i − 1`.
pub fn recover_loop(raw: &SampleSet, h: &MolecularHamiltonian, cfg: &RecoveryConfig) -> Result<Vec<RecoveryIteration>> {
    if raw.is_empty() {
        return Err(QsciError::InvalidInput("raw sample set is empty".into()));
    }
    let (na, nb) = (h.n_alpha, h.n_beta);
    let mut physical = filter_physical(raw, na, nb);
    if physical.is_empty() {
        if !cfg.hf_fallback {
            return Err(QsciError::Unrecoverable);
        }
        physical.add(Determinant::hartree_fock(na, nb).to_raw(h.n_orbitals), 1)?;
    }
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut set = physical;
    for it in 0..=cfg.iterations {
        if it > 0 {
            let occ = &trace.last().map(|r: &RecoveryIteration| r.occupations.clone()).unwrap();
            set = correct_configurations(raw, occ, na, nb, derive_seed(cfg.seed, it as u64))?;
        }
        let batch = BatchConfig {
            seed: derive_seed(cfg.batch.seed, it as u64),
            ..cfg.batch
        };
        let result = run_batches(&set, h, &batch)?;
        trace.push(record(it, &result, set.clone())?);
    }
    Ok(trace)
}

fn record(iteration: usize, result: &BatchResult, corrected: SampleSet) -> Result<RecoveryIteration> {
    Ok(RecoveryIteration {
        iteration,
        energy: result.min_energy,
        batch_energies: result.energies(),
        dimension: result.best().dimension,
        occupations: occupations(&result.states())?,
        corrected,
    })
}

/// `iteration,energy,batch_energies,dimension,distinct_keys` rows; batch
/// energies are `;`-separated with empty fields for empty batches.
pub fn trace_csv(trace: &[RecoveryIteration]) -> String {
    let mut out = String::from("iteration,energy,batch_energies,dimension,distinct_keys\n");
    for r in trace {
        let batches: Vec<String> = r
            .batch_energies
            .iter()
            .map(|e| e.map(|e| format!("{e:.12}")).unwrap_or_default())
            .collect();
        writeln!(
            out,
            "{},{:.12},{},{},{}",
            r.iteration,
            r.energy,
            batches.join(";"),
            r.dimension,
            r.corrected.len()
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RawBitstring;

    #[test]
    fn filter_keeps_matching_sectors() {
        let n = 4;
        let good = join(SpinString(0b0011), SpinString(0b0101), n);
        let bad = join(SpinString(0b0111), SpinString(0b0101), n);
        let s = SampleSet::from_counts(8, [(good, 3), (bad, 2)]).unwrap();
        let f = filter_physical(&s, 2, 2);
        assert_eq!(f.len(), 1);
        assert_eq!(f.count(good), 3);
        assert!(filter_physical(&SampleSet::from_counts(8, [(bad, 1)]).unwrap(), 2, 2).is_empty());
    }

    #[test]
    fn correction_reaches_target_weight() {
        let occ = OccupationVector {
            alpha: vec![0.9, 0.8, 0.1, 0.05, 0.0],
            beta: vec![0.9, 0.8, 0.1, 0.05, 0.0],
        };
        let n = 5;
        let keys = (0u64..1 << 10).map(|x| (RawBitstring(x), 1));
        let raw = SampleSet::from_counts(10, keys).unwrap();
        let fixed = correct_configurations(&raw, &occ, 2, 2, 11).unwrap();
        assert_eq!(fixed.total_counts(), raw.total_counts());
        for k in fixed.keys() {
            let (a, b) = split_raw(k, n);
            assert_eq!((a.count(), b.count()), (2, 2));
        }
    }

    #[test]
    fn occupation_dimension_checked() {
        let occ = OccupationVector {
            alpha: vec![0.5; 3],
            beta: vec![0.5; 3],
        };
        let raw = SampleSet::from_counts(8, [(RawBitstring(1), 1)]).unwrap();
        assert!(correct_configurations(&raw, &occ, 1, 1, 0).is_err());
    }
}
