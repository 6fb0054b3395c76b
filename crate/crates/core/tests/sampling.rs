mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use qsci_core::detspace::{binomial, enumerate_strings, split_raw};
use qsci_core::sampler::*;
use qsci_core::{CIVector, Complex, Determinant, RawBitstring, SpinString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_det_state() -> CIVector {
    let d0 = Determinant::hartree_fock(1, 1);
    let d1 = Determinant::new(SpinString(0b10), SpinString(0b10));
    CIVector::from_pairs(2, vec![(d0, Complex::new(0.6, 0.0)), (d1, Complex::new(0.0, -0.8))]).unwrap()
}

fn fifty_det_state() -> CIVector {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let space = full_space(5, 2, 2);
    let pairs = space[..50]
        .iter()
        .map(|&d| (d, Complex::new(rng.random_range(0.1..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let mut v = CIVector::from_pairs(5, pairs).unwrap();
    v.normalize();
    v
}

fn random_keys(n_qubits: usize, n_keys: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = (1u64 << n_qubits) - 1;
    let mut set = SampleSet::new(n_qubits);
    while set.len() < n_keys {
        set.add(RawBitstring(rng.random::<u64>() & mask), rng.random_range(1..50)).unwrap();
    }
    set
}

#[test]
fn single_determinant_gets_every_shot() {
    let d = Determinant::hartree_fock(2, 1);
    let s = sample_exact(&CIVector::single(4, d), 12345, 7).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s.count(d.to_raw(4)), 12345);
}

#[test]
fn two_determinant_frequencies_within_five_sigma() {
    let v = two_det_state();
    let shots = 1_000_000u64;
    let s = sample_exact(&v, shots, 3).unwrap();
    assert_eq!(s.total_counts(), shots);
    let k = s.count(Determinant::hartree_fock(1, 1).to_raw(2)) as f64;
    let (p, n) = (0.36, shots as f64);
    assert!((k - n * p).abs() < 5.0 * (n * p * (1.0 - p)).sqrt());
}

#[test]
fn fifty_determinant_total_variation() {
    let v = fifty_det_state();
    let shots = 1_000_000u64;
    let s = sample_exact(&v, shots, 11).unwrap();
    let tv: f64 = v
        .iter()
        .map(|(d, c)| (s.count(d.to_raw(5)) as f64 / shots as f64 - c.norm_sqr()).abs())
        .sum::<f64>()
        * 0.5;
    assert!(tv < 0.01, "TV {tv}");
    assert!(s.keys().all(|k| v.amplitude({
        let (a, b) = split_raw(k, 5);
        Determinant::new(a, b)
    }).norm() > 0.0));
}

#[test]
fn sampling_rejects_unnormalized_state() {
    let d = Determinant::hartree_fock(1, 1);
    let v = CIVector::from_pairs(2, vec![(d, Complex::new(0.5, 0.0))]).unwrap();
    assert!(sample_exact(&v, 10, 0).is_err());
}

#[test]
fn support_set_weights_by_probability() {
    let s = support_set(&two_det_state(), 1e-12).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s.count(Determinant::hartree_fock(1, 1).to_raw(2)), 36_000_000);
}

#[test]
fn sampling_is_reproducible() {
    let v = fifty_det_state();
    assert_eq!(sample_exact(&v, 100_000, 5).unwrap(), sample_exact(&v, 100_000, 5).unwrap());
    let set = random_keys(20, 500, 1);
    let cfg = NoiseConfig::new(0.6, 20, 9);
    assert_eq!(
        format_samples(&apply_noise(&set, &cfg).unwrap(), BitOrder::SectorBlocks),
        format_samples(&apply_noise(&set, &cfg).unwrap(), BitOrder::SectorBlocks)
    );
}

#[test]
fn noise_contracts_on_large_inputs() {
    let set = random_keys(24, 10_000, 2);
    for p in [0.0, 0.2, 0.6, 1.0] {
        let out = apply_noise(&set, &NoiseConfig::new(p, 24, 13)).unwrap();
        assert_eq!(out.total_counts(), 2 * set.total_counts());
        assert!(set.iter().all(|(k, c)| out.count(k) >= c));
        assert!(out.len() <= 2 * set.len());
        if p == 0.0 {
            let doubled: Vec<_> = set.iter().map(|(k, c)| (k, 2 * c)).collect();
            assert_eq!(out.iter().collect::<Vec<_>>(), doubled);
        }
    }
}

#[test]
fn full_noise_stops_at_the_cap() {
    let set = random_keys(10, 200, 3);
    let cfg = NoiseConfig { p: 1.0, max_flips: 3, seed: 4 };
    let out = apply_noise(&set, &cfg).unwrap();
    // three flips move a string by an odd distance of at most three
    for k in out.keys().filter(|k| !set.contains(*k)) {
        assert!(set.keys().any(|parent| matches!((parent.0 ^ k.0).count_ones(), 1 | 3)));
    }
}

/// Distribution of the Hamming distance to the parent: the number of flips is
/// geometric with continuation `p` (capped), each flip moves the distance by
/// ±1 on the hypercube.
fn distance_distribution(n: usize, p: f64, cap: usize) -> Vec<f64> {
    let mut walk = vec![0.0; n + 1];
    walk[0] = 1.0;
    let mut out = vec![0.0; n + 1];
    for k in 0..=cap {
        let pk = if k == cap { p.powi(k as i32) } else { p.powi(k as i32) * (1.0 - p) };
        for d in 0..=n {
            out[d] += pk * walk[d];
        }
        let mut next = vec![0.0; n + 1];
        for d in 0..=n {
            if d < n {
                next[d + 1] += walk[d] * (n - d) as f64 / n as f64;
            }
            if d > 0 {
                next[d - 1] += walk[d] * d as f64 / n as f64;
            }
        }
        walk = next;
    }
    out
}

#[test]
fn flip_chain_distance_matches_markov_oracle() {
    let n = 16;
    let mut dist = BTreeMap::new();
    let trials = 100_000;
    for t in 0..trials as u64 {
        // distinct parents each draw from their own stream
        let parent = RawBitstring(t % (1 << n));
        let seed = t >> n;
        let single = SampleSet::from_counts(n, [(parent, 1)]).unwrap();
        let out = apply_noise(&single, &NoiseConfig::new(0.5, n, seed)).unwrap();
        let d = out.keys().find(|k| *k != parent).map_or(0, |k| (k.0 ^ parent.0).count_ones());
        // a return to the parent merges with it
        *dist.entry(d as usize).or_insert(0u64) += 1;
    }
    let want = distance_distribution(n, 0.5, default_max_flips(n));
    for (d, &q) in want.iter().enumerate() {
        let k = *dist.get(&d).unwrap_or(&0) as f64;
        let sigma = (trials as f64 * q * (1.0 - q)).sqrt().max(1.0);
        assert!((k - trials as f64 * q).abs() < 5.0 * sigma, "distance {d}: {k} vs {}", trials as f64 * q);
    }
}

#[test]
fn random_sets_hit_the_physical_sector_at_the_combinatorial_rate() {
    let (n, na, nb) = (4, 2, 2);
    let ratio = (binomial(n, na) * binomial(n, nb)) as f64 / 256.0;
    let target = 128;
    let runs = 400;
    let mut hits = 0usize;
    for seed in 0..runs {
        let s = random_uniform_set(2 * n, target, None, seed).unwrap();
        assert_eq!(s.len(), target);
        hits += s
            .keys()
            .filter(|&k| {
                let (a, b) = split_raw(k, n);
                a.count() as usize == na && b.count() as usize == nb
            })
            .count();
    }
    // hypergeometric draw of `target` of 256 strings, 36 of them physical
    let mean = target as f64 * ratio;
    let var = mean * (1.0 - ratio) * (256 - target) as f64 / 255.0;
    let got = hits as f64 / runs as f64;
    assert!((got - mean).abs() < 5.0 * (var / runs as f64).sqrt(), "{got} vs {mean}");
    // at the (10e, 26o) scale almost nothing is physical
    assert_eq!(enumerate_strings(26, 5).unwrap().len(), 65780);
    let big = (binomial(26, 5) * binomial(26, 5)) as f64 / 2f64.powi(52);
    assert!(big < 1e-6);
}

#[test]
fn random_set_seeds_hartree_fock() {
    let hf = Determinant::hartree_fock(2, 2);
    let s = random_uniform_set(8, 10, Some(hf), 1).unwrap();
    assert!(s.contains(hf.to_raw(4)));
    assert!((10..=11).contains(&s.len()));
    assert!(random_uniform_set(4, 17, None, 0).is_err());
}

fn sample_set_strategy() -> impl Strategy<Value = SampleSet> {
    (1usize..=8).prop_flat_map(|n| {
        let mask = (1u64 << (2 * n)) - 1;
        proptest::collection::btree_map(0u64..=mask, 1u64..1_000_000, 0..40)
            .prop_map(move |m| SampleSet::from_counts(2 * n, m.into_iter().map(|(k, c)| (RawBitstring(k), c))).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_invariants(set in sample_set_strategy(), p in 0.0f64..=1.0, seed: u64) {
        let out = apply_noise(&set, &NoiseConfig::new(p, set.n_qubits(), seed)).unwrap();
        prop_assert_eq!(out.total_counts(), 2 * set.total_counts());
        prop_assert!(out.len() <= 2 * set.len());
        for (k, c) in set.iter() {
            prop_assert!(out.count(k) >= c);
        }
        prop_assert!(out.keys().all(|k| k.fits(set.n_qubits())));
    }

    #[test]
    fn sample_files_round_trip(set in sample_set_strategy(), interleaved: bool) {
        prop_assume!(!set.is_empty());
        let order = if interleaved { BitOrder::Interleaved } else { BitOrder::SectorBlocks };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        write_samples(&set, &path, order).unwrap();
        prop_assert_eq!(read_samples(&path, order).unwrap(), set);
    }
}

#[test]
fn malformed_sample_files_are_rejected() {
    for bad in [
        "{\"bits\": \"0101\", \"count\": 0}",
        "{\"bits\": \"012\", \"count\": 1}",
        "{\"bits\": \"01\", \"count\": 1}\n{\"bits\": \"0101\", \"count\": 1}",
        "not json",
    ] {
        assert!(parse_samples(bad, BitOrder::SectorBlocks, 0).is_err(), "{bad}");
    }
    let s = parse_samples("{\"bits\": \"0110\", \"count\": 3}", BitOrder::Interleaved, 0).unwrap();
    // qubits 1 and 2: β orbital 0 and α orbital 1
    assert_eq!(s.count(raw(0b10, 0b01, 2)), 3);
}
