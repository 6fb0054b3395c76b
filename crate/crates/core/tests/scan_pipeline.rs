mod common;

use std::path::Path;

use common::*;
use qsci_core::sampler::{write_samples, BitOrder};
use qsci_core::scan::*;
use qsci_core::{Determinant, SampleSet};

fn config(extra: &str, geometries: &[&str]) -> ScanConfig {
    let mut text = String::from(extra);
    for g in geometries {
        text.push_str(&format!("\n[geometry {g}]\nfcidump = {g}.fcidump\n"));
    }
    ScanConfig::parse(&text, &data("")).unwrap()
}

#[test]
fn exhaustive_h2_scan_reaches_fci() {
    let cfg = config("ansatz = 1L\nshots = 0\nd = 4\nbatches = 2\niterations = 1", &["h2_0.735"]);
    let rows = run_scan(&cfg);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.failure.is_none());
        assert!(r.energy_error().unwrap().abs() < 1e-9);
    }
}

#[test]
fn rows_cover_every_geometry_and_iteration() {
    let cfg = config("sampler = noisy\nshots = 2000\niterations = 3\nbatches = 3", &["h4_1.00", "h4_1.50", "h4_2.00"]);
    let rows = run_scan(&cfg);
    assert_eq!(rows.len(), 3 * 4);
    let csv = scan_csv(&cfg, &rows);
    assert!(csv.lines().any(|l| l == SCAN_COLUMNS));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",ok")).count(), 12);
    for r in &rows {
        assert!(r.energy_error().unwrap() >= -1e-9, "{r:?}");
    }
}

#[test]
fn scans_are_byte_reproducible() {
    for sampler in ["exact", "noisy", "random"] {
        let cfg = config(
            &format!("seed = 17\nsampler = {sampler}\nshots = 5000\nbatches = 4\niterations = 2"),
            &["h4_2.00", "h6_2.00"],
        );
        let a = scan_csv(&cfg, &run_scan(&cfg));
        let b = scan_csv(&cfg, &run_scan(&cfg));
        assert_eq!(a, b, "{sampler}");
        let other = config(
            &format!("seed = 18\nsampler = {sampler}\nshots = 5000\nbatches = 4\niterations = 2"),
            &["h4_2.00", "h6_2.00"],
        );
        assert_ne!(a, scan_csv(&other, &run_scan(&other)));
    }
}

#[test]
fn size_report_orders_truncated_above_full_two_layer() {
    let full = config("ansatz = 2L\nshots = 0", &["h4_2.00"]);
    let trunc = config("ansatz = 2L'\nshots = 0", &["h4_2.00"]);
    let (a, b) = (&report_sizes(&full)[0], &report_sizes(&trunc)[0]);
    assert!(b.support.unwrap() > a.support.unwrap());
    assert!(b.dimension.unwrap() >= a.dimension.unwrap());
    assert!(sizes_csv(&trunc, &report_sizes(&trunc)).contains(SIZE_COLUMNS));
}

#[test]
fn external_samples_feed_the_same_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let hf = Determinant::hartree_fock(2, 2);
    let set = SampleSet::from_counts(8, [(hf.to_raw(4), 10), (raw(0b0101, 0b0011, 4), 3), (raw(0b0111, 0b0011, 4), 2)]).unwrap();
    let path = dir.path().join("s.jsonl");
    write_samples(&set, &path, BitOrder::Interleaved).unwrap();
    let text = format!(
        "sampler = external\nbit_order = interleaved\nbatches = 2\niterations = 2\n[geometry ext]\nfcidump = {}\nsamples = {}\n",
        data("h4_1.00.fcidump").display(),
        path.display()
    );
    let cfg = ScanConfig::parse(&text, Path::new("/")).unwrap();
    let rows = run_scan(&cfg);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.failure.is_none() && r.mode == "external"));
}

#[test]
fn failures_become_rows_without_stopping_the_scan() {
    let cfg = config("shots = 1000\nbatches = 2\niterations = 1", &["h4_1.00", "missing"]);
    let rows = run_scan(&cfg);
    assert_eq!(rows.iter().filter(|r| r.failure.is_some()).count(), 1);
    assert_eq!(rows.iter().filter(|r| r.failure.is_none()).count(), 2);
    assert!(scan_csv(&cfg, &rows).contains("error: "));
}

#[test]
fn random_mode_matches_the_exact_distinct_count() {
    let exact = config("shots = 3000\nseed = 2", &["h4_1.00", "h6_2.00"]);
    let random = config("shots = 3000\nseed = 2\nsampler = random\nrandom_include_hf = false", &["h4_1.00", "h6_2.00"]);
    for (a, b) in report_sizes(&exact).iter().zip(report_sizes(&random)) {
        assert_eq!(a.distinct_sampled, b.distinct_sampled);
        assert!(b.distinct_physical <= a.distinct_physical);
    }
}
