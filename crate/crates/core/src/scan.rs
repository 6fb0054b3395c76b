//! Dissociation scans: one full pipeline per geometry, reported as CSV.
//!
//! A scan config is plain text. Global `key = value` lines come first, then
//! one `[geometry <label>]` section per geometry:
//!
//! ```text
//! seed = 7
//! ansatz = 2L'
//! sampler = noisy
//! noise_p = 0.6
//! iterations = 5
//! batch_mode = fixed-subspace
//! d = 16
//!
//! [geometry 2.00]
//! fcidump = h4_2.00.fcidump
//! ```
//!
//! Relative paths resolve against the config file's directory. Keys left out
//! take the values of [`ScanConfig::default`]; [`DEFAULTS_HELP`] lists them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::detspace::{binomial, enumerate_strings, Determinant};
use crate::eig::{build_hamiltonian, ground_state, CIVector};
use crate::error::{QsciError, Result};
use crate::integrals::{fock_diagonal, mp2_t2, read_fcidump, read_t2, MolecularHamiltonian};
use crate::lucj::{build_state, params_for_mode, AnsatzMode};
use crate::recovery::{filter_physical, recover_loop, RecoveryConfig};
use crate::rng::derive_seed;
use crate::sampler::{
    apply_noise, default_max_flips, random_uniform_set, read_samples, sample_exact, support_set, BitOrder,
    NoiseConfig, SampleSet,
};
use crate::subspace::{pooled_strings, recombined_dimension, BatchConfig, BatchMode, Pooling, DEFAULT_MAX_DIMENSION};

/// Threshold on the MP2 energy denominator.
const MP2_THRESHOLD: f64 = 1e-8;

/// `|c|²` above which a determinant counts as supported.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Text listing every config key and its default, for `--help`.
pub const DEFAULTS_HELP: &str = "\
global keys (default):
  seed = 0                  global seed; every stochastic step derives from it
  ansatz = 2L'              1L | 2L | 2L' | none (HF determinant)
  locality = false          restrict Jastrow couplings to the local pattern
  sampler = exact           exact | noisy | random | external
  shots = 100000            0 samples every determinant above support_cutoff
  support_cutoff = 1e-12
  noise_p = 0.6
  max_flips = 0             0 means 8 x (2N)
  random_include_hf = true
  iterations = 5            recovery iterations after iteration 0
  hf_fallback = true
  batches = 10
  batch_mode = fixed-subspace   fixed-subspace | fixed-draw
  d = 16                    perfect square, fixed-subspace mode
  n_draw = 8                fixed-draw mode
  pooling = pooled          pooled | alpha
  max_dimension = 4000000   per-batch determinant cap
  fci_max_dimension = 4000000
  bit_order = blocks        blocks | interleaved (external samples)
  output =                  CSV path (stdout when empty)
geometry section [geometry <label>]:
  fcidump = <path>          required
  t2 = <path>               amplitudes file; MP2 when absent
  samples = <path>          required for sampler = external";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMode {
    Exact,
    Noisy,
    Random,
    External,
}

impl FromStr for SamplerMode {
    type Err = QsciError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(SamplerMode::Exact),
            "noisy" => Ok(SamplerMode::Noisy),
            "random" => Ok(SamplerMode::Random),
            "external" => Ok(SamplerMode::External),
            other => Err(QsciError::InvalidInput(format!("unknown sampler '{other}'"))),
        }
    }
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerMode::Exact => "exact",
            SamplerMode::Noisy => "noisy",
            SamplerMode::Random => "random",
            SamplerMode::External => "external",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub label: String,
    pub fcidump: PathBuf,
    pub t2: Option<PathBuf>,
    pub samples: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub geometries: Vec<Geometry>,
    /// `None` samples the HF determinant.
    pub ansatz: Option<AnsatzMode>,
    pub locality: bool,
    pub sampler: SamplerMode,
    pub shots: u64,
    pub support_cutoff: f64,
    pub noise_p: f64,
    /// `None` uses [`default_max_flips`].
    pub max_flips: Option<usize>,
    pub random_include_hf: bool,
    pub iterations: usize,
    pub hf_fallback: bool,
    pub batches: usize,
    pub batch_mode: BatchMode,
    pub pooling: Pooling,
    pub max_dimension: u128,
    pub fci_max_dimension: u128,
    pub bit_order: BitOrder,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            geometries: Vec::new(),
            ansatz: Some(AnsatzMode::TruncatedTwoLayer),
            locality: false,
            sampler: SamplerMode::Exact,
            shots: 100_000,
            support_cutoff: SUPPORT_THRESHOLD,
            noise_p: 0.6,
            max_flips: None,
            random_include_hf: true,
            iterations: 5,
            hf_fallback: true,
            batches: 10,
            batch_mode: BatchMode::FixedSubspace { d: 16 },
            pooling: Pooling::Pooled,
            max_dimension: DEFAULT_MAX_DIMENSION,
            fci_max_dimension: DEFAULT_MAX_DIMENSION,
            bit_order: BitOrder::SectorBlocks,
            seed: 0,
            output: None,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl ScanConfig {
    /// Parse config text; relative paths are joined to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = ScanConfig::default();
        let mut d: u64 = 16;
        let mut n_draw: usize = 8;
        let mut mode = "fixed-subspace".to_string();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let t = raw.split('#').next().unwrap().trim();
            if t.is_empty() {
                continue;
            }
            if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let label = inner
                    .trim()
                    .strip_prefix("geometry")
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| QsciError::parse(line, format!("expected [geometry <label>], got [{inner}]")))?;
                cfg.geometries.push(Geometry {
                    label: label.to_string(),
                    fcidump: PathBuf::new(),
                    t2: None,
                    samples: None,
                });
                continue;
            }
            let (key, value) = t
                .split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim()))
                .ok_or_else(|| QsciError::parse(line, format!("expected key = value, got '{t}'")))?;
            let bad = |what: &str| QsciError::parse(line, format!("invalid {what} '{value}'"));

            if let Some(g) = cfg.geometries.last_mut() {
                match key.as_str() {
                    "fcidump" => g.fcidump = resolve(value),
                    "t2" => g.t2 = Some(resolve(value)),
                    "samples" => g.samples = Some(resolve(value)),
                    other => return Err(QsciError::parse(line, format!("unknown geometry key '{other}'"))),
                }
                continue;
            }
            match key.as_str() {
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "ansatz" => {
                    cfg.ansatz = if value.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad("ansatz"))?)
                    }
                }
                "locality" => cfg.locality = parse_bool(value).ok_or_else(|| bad("flag"))?,
                "sampler" => cfg.sampler = value.parse().map_err(|_| bad("sampler"))?,
                "shots" => cfg.shots = value.parse().map_err(|_| bad("shot count"))?,
                "support_cutoff" => cfg.support_cutoff = value.parse().map_err(|_| bad("cutoff"))?,
                "noise_p" => cfg.noise_p = value.parse().map_err(|_| bad("probability"))?,
                "max_flips" => {
                    let m: usize = value.parse().map_err(|_| bad("flip cap"))?;
                    cfg.max_flips = (m > 0).then_some(m);
                }
                "random_include_hf" => cfg.random_include_hf = parse_bool(value).ok_or_else(|| bad("flag"))?,
                "iterations" => cfg.iterations = value.parse().map_err(|_| bad("iteration count"))?,
                "hf_fallback" => cfg.hf_fallback = parse_bool(value).ok_or_else(|| bad("flag"))?,
                "batches" => cfg.batches = value.parse().map_err(|_| bad("batch count"))?,
                "batch_mode" => mode = value.to_ascii_lowercase(),
                "d" => d = value.parse().map_err(|_| bad("dimension"))?,
                "n_draw" => n_draw = value.parse().map_err(|_| bad("draw count"))?,
                "pooling" => {
                    cfg.pooling = match value.to_ascii_lowercase().as_str() {
                        "pooled" => Pooling::Pooled,
                        "alpha" => Pooling::AlphaOnly,
                        _ => return Err(bad("pooling")),
                    }
                }
                "max_dimension" => cfg.max_dimension = value.parse().map_err(|_| bad("dimension cap"))?,
                "fci_max_dimension" => cfg.fci_max_dimension = value.parse().map_err(|_| bad("dimension cap"))?,
                "bit_order" => cfg.bit_order = value.parse().map_err(|_| bad("bit order"))?,
                "output" => cfg.output = (!value.is_empty()).then(|| resolve(value)),
                other => return Err(QsciError::parse(line, format!("unknown key '{other}'"))),
            }
        }
        cfg.batch_mode = match mode.as_str() {
            "fixed-subspace" => BatchMode::FixedSubspace { d },
            "fixed-draw" => BatchMode::FixedDraw { n_draw },
            other => return Err(QsciError::InvalidInput(format!("unknown batch_mode '{other}'"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| QsciError::io(path, e))?;
        ScanConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        self.batch_mode.validate()?;
        if self.batches == 0 {
            return Err(QsciError::InvalidInput("batches must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(QsciError::InvalidInput(format!("noise_p = {} outside [0, 1]", self.noise_p)));
        }
        for g in &self.geometries {
            if g.fcidump.as_os_str().is_empty() {
                return Err(QsciError::InvalidInput(format!("geometry '{}' has no fcidump", g.label)));
            }
            if self.sampler == SamplerMode::External && g.samples.is_none() {
                return Err(QsciError::InvalidInput(format!(
                    "geometry '{}' needs samples for the external sampler",
                    g.label
                )));
            }
        }
        if self.sampler != SamplerMode::External && self.ansatz.is_none() && self.sampler == SamplerMode::Random {
            return Err(QsciError::InvalidInput(
                "the random sampler matches an ansatz state's distinct count and needs an ansatz".into(),
            ));
        }
        Ok(())
    }

    /// Short label such as `2L'/noisy(p=0.6)`.
    pub fn mode_label(&self) -> String {
        let ansatz = self.ansatz.map_or("none".to_string(), |m| m.to_string());
        match self.sampler {
            SamplerMode::Noisy => format!("{ansatz}/noisy(p={})", self.noise_p),
            SamplerMode::External => "external".to_string(),
            s => format!("{ansatz}/{s}"),
        }
    }

    /// `# key = value` lines with every resolved setting.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "# {k} = {v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("ansatz", self.ansatz.map_or("none".into(), |m| m.to_string()));
        kv("locality", self.locality.to_string());
        kv("sampler", self.sampler.to_string());
        kv("shots", self.shots.to_string());
        kv("support_cutoff", format!("{:e}", self.support_cutoff));
        kv("noise_p", self.noise_p.to_string());
        kv(
            "max_flips",
            self.max_flips.map_or("8 x (2N)".into(), |m| m.to_string()),
        );
        kv("random_include_hf", self.random_include_hf.to_string());
        kv("iterations", self.iterations.to_string());
        kv("hf_fallback", self.hf_fallback.to_string());
        kv("batches", self.batches.to_string());
        match self.batch_mode {
            BatchMode::FixedSubspace { d } => kv("batch_mode", format!("fixed-subspace (d = {d})")),
            BatchMode::FixedDraw { n_draw } => kv("batch_mode", format!("fixed-draw (n_draw = {n_draw})")),
        }
        kv(
            "pooling",
            match self.pooling {
                Pooling::Pooled => "pooled".into(),
                Pooling::AlphaOnly => "alpha".into(),
            },
        );
        kv("max_dimension", self.max_dimension.to_string());
        kv("fci_max_dimension", self.fci_max_dimension.to_string());
        kv("bit_order", self.bit_order.to_string());
        for g in &self.geometries {
            kv(&format!("geometry {}", g.label), g.fcidump.display().to_string());
        }
        out
    }
}

/// One CSV row of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub geometry: String,
    pub mode: String,
    pub iteration: Option<usize>,
    pub energy: Option<f64>,
    pub dimension: Option<usize>,
    pub distinct_physical: Option<usize>,
    pub fci_energy: Option<f64>,
    /// `None` on success.
    pub failure: Option<String>,
}

impl ScanRow {
    pub fn energy_error(&self) -> Option<f64> {
        Some(self.energy? - self.fci_energy?)
    }
}

pub const SCAN_COLUMNS: &str = "geometry,mode,iteration,energy,dimension,distinct_physical,fci_energy,energy_error,status";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_energy(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.12}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

pub fn scan_csv(cfg: &ScanConfig, rows: &[ScanRow]) -> String {
    let mut out = cfg.header();
    out.push_str(SCAN_COLUMNS);
    out.push('\n');
    for r in rows {
        let status = r.failure.as_deref().map_or("ok".to_string(), |m| format!("error: {}", csv_field(m)));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&r.geometry),
            csv_field(&r.mode),
            opt(r.iteration),
            opt_energy(r.energy),
            opt(r.dimension),
            opt(r.distinct_physical),
            opt_energy(r.fci_energy),
            r.energy_error().map(|e| format!("{e:.3e}")).unwrap_or_default(),
            status
        )
        .unwrap();
    }
    out
}

/// Per-geometry seeds.
struct Seeds {
    shots: u64,
    noise: u64,
    random: u64,
    recovery: u64,
    batches: u64,
}

impl Seeds {
    fn new(global: u64, geometry: usize) -> Self {
        let g = derive_seed(global, geometry as u64);
        Seeds {
            shots: derive_seed(g, 0),
            noise: derive_seed(g, 1),
            random: derive_seed(g, 2),
            recovery: derive_seed(g, 3),
            batches: derive_seed(g, 4),
        }
    }
}

/// FCI energy over the full determinant space, or `None` above `cap`.
pub fn fci_energy(h: &MolecularHamiltonian, cap: u128) -> Result<Option<f64>> {
    let dim = binomial(h.n_orbitals, h.n_alpha) * binomial(h.n_orbitals, h.n_beta);
    if dim > cap {
        return Ok(None);
    }
    let space = full_space(h)?;
    let hs = build_hamiltonian(&space, h)?;
    Ok(Some(ground_state(&hs, 1e-8, 2000)?.0))
}

/// Every determinant with the Hamiltonian's electron counts.
pub fn full_space(h: &MolecularHamiltonian) -> Result<Vec<Determinant>> {
    let a = enumerate_strings(h.n_orbitals, h.n_alpha)?;
    let b = enumerate_strings(h.n_orbitals, h.n_beta)?;
    Ok(a.iter().flat_map(|&x| b.iter().map(move |&y| Determinant::new(x, y))).collect())
}

/// The ansatz state for a geometry.
pub fn ansatz_state(h: &MolecularHamiltonian, geometry: &Geometry, mode: Option<AnsatzMode>, locality: bool) -> Result<CIVector> {
    let Some(mode) = mode else {
        return Ok(CIVector::single(h.n_orbitals, Determinant::hartree_fock(h.n_alpha, h.n_beta)));
    };
    let t2 = match &geometry.t2 {
        Some(path) => read_t2(path)?,
        None => mp2_t2(h, &fock_diagonal(h), MP2_THRESHOLD)?,
    };
    if t2.n_occ + t2.n_virt != h.n_orbitals {
        return Err(QsciError::InvalidInput(format!(
            "t2 covers {} orbitals, Hamiltonian has {}",
            t2.n_occ + t2.n_virt,
            h.n_orbitals
        )));
    }
    build_state(h, &params_for_mode(&t2, mode, locality)?, mode)
}

fn exact_samples(state: &CIVector, cfg: &ScanConfig, seed: u64) -> Result<SampleSet> {
    if cfg.shots == 0 {
        support_set(state, cfg.support_cutoff)
    } else {
        sample_exact(state, cfg.shots, seed)
    }
}

/// The sample set a geometry feeds into recovery, plus the state it came from.
pub fn geometry_samples(
    cfg: &ScanConfig,
    h: &MolecularHamiltonian,
    geometry: &Geometry,
    index: usize,
) -> Result<(SampleSet, Option<CIVector>)> {
    let seeds = Seeds::new(cfg.seed, index);
    if cfg.sampler == SamplerMode::External {
        let path = geometry.samples.as_ref().expect("validated");
        let s = read_samples(path, cfg.bit_order)?;
        if s.n_qubits() != 2 * h.n_orbitals {
            return Err(QsciError::InvalidInput(format!(
                "{} holds {}-qubit samples, expected {}",
                path.display(),
                s.n_qubits(),
                2 * h.n_orbitals
            )));
        }
        return Ok((s, None));
    }
    let state = ansatz_state(h, geometry, cfg.ansatz, cfg.locality)?;
    let exact = exact_samples(&state, cfg, seeds.shots)?;
    let samples = match cfg.sampler {
        SamplerMode::Exact => exact,
        SamplerMode::Noisy => {
            let noise = NoiseConfig {
                p: cfg.noise_p,
                max_flips: cfg.max_flips.unwrap_or(default_max_flips(2 * h.n_orbitals)),
                seed: seeds.noise,
            };
            apply_noise(&exact, &noise)?
        }
        SamplerMode::Random => {
            let hf = cfg
                .random_include_hf
                .then(|| Determinant::hartree_fock(h.n_alpha, h.n_beta));
            random_uniform_set(2 * h.n_orbitals, exact.len(), hf, seeds.random)?
        }
        SamplerMode::External => unreachable!(),
    };
    Ok((samples, Some(state)))
}

fn run_geometry(cfg: &ScanConfig, geometry: &Geometry, index: usize) -> Result<Vec<ScanRow>> {
    let h = read_fcidump(&geometry.fcidump)?;
    let fci = fci_energy(&h, cfg.fci_max_dimension)?;
    let (samples, _) = geometry_samples(cfg, &h, geometry, index)?;
    let seeds = Seeds::new(cfg.seed, index);
    let mut batch = BatchConfig::new(cfg.batches, cfg.batch_mode, seeds.batches);
    batch.pooling = cfg.pooling;
    batch.max_dimension = cfg.max_dimension;
    let rec = RecoveryConfig {
        iterations: cfg.iterations,
        seed: seeds.recovery,
        batch,
        hf_fallback: cfg.hf_fallback,
    };
    let trace = recover_loop(&samples, &h, &rec)?;
    Ok(trace
        .into_iter()
        .map(|it| ScanRow {
            geometry: geometry.label.clone(),
            mode: cfg.mode_label(),
            iteration: Some(it.iteration),
            energy: Some(it.energy),
            dimension: Some(it.dimension),
            distinct_physical: Some(it.corrected.len()),
            fci_energy: fci,
            failure: None,
        })
        .collect())
}

/// Run every geometry; failures become single error rows.
pub fn run_scan(cfg: &ScanConfig) -> Vec<ScanRow> {
    cfg.geometries
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            run_geometry(cfg, g, i).unwrap_or_else(|e| {
                vec![ScanRow {
                    geometry: g.label.clone(),
                    mode: cfg.mode_label(),
                    iteration: None,
                    energy: None,
                    dimension: None,
                    distinct_physical: None,
                    fci_energy: None,
                    failure: Some(e.to_string()),
                }]
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Configuration-count metrics for one geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeRow {
    pub geometry: String,
    pub mode: String,
    /// Determinants with `|c|² >` [`SUPPORT_THRESHOLD`] in the ansatz state.
    pub support: Option<usize>,
    pub distinct_sampled: Option<usize>,
    pub distinct_physical: Option<usize>,
    pub pooled_strings: Option<usize>,
    pub dimension: Option<u128>,
    pub failure: Option<String>,
}

pub const SIZE_COLUMNS: &str = "geometry,mode,support,distinct_sampled,distinct_physical,pooled_strings,dimension,status";

fn size_geometry(cfg: &ScanConfig, geometry: &Geometry, index: usize) -> Result<SizeRow> {
    let h = read_fcidump(&geometry.fcidump)?;
    let (samples, state) = geometry_samples(cfg, &h, geometry, index)?;
    let physical = filter_physical(&samples, h.n_alpha, h.n_beta);
    let strings = pooled_strings(&physical, cfg.pooling);
    Ok(SizeRow {
        geometry: geometry.label.clone(),
        mode: cfg.mode_label(),
        support: state.map(|s| s.support_size(SUPPORT_THRESHOLD)),
        distinct_sampled: Some(samples.len()),
        distinct_physical: Some(physical.len()),
        pooled_strings: Some(strings.len()),
        dimension: Some(recombined_dimension(&strings, h.n_alpha, h.n_beta)),
        failure: None,
    })
}

/// Sample and string counts without diagonalization.
pub fn report_sizes(cfg: &ScanConfig) -> Vec<SizeRow> {
    cfg.geometries
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            size_geometry(cfg, g, i).unwrap_or_else(|e| SizeRow {
                geometry: g.label.clone(),
                mode: cfg.mode_label(),
                support: None,
                distinct_sampled: None,
                distinct_physical: None,
                pooled_strings: None,
                dimension: None,
                failure: Some(e.to_string()),
            })
        })
        .collect()
}

pub fn sizes_csv(cfg: &ScanConfig, rows: &[SizeRow]) -> String {
    let mut out = cfg.header();
    out.push_str(SIZE_COLUMNS);
    out.push('\n');
    for r in rows {
        let status = r.failure.as_deref().map_or("ok".to_string(), |m| format!("error: {}", csv_field(m)));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.geometry),
            csv_field(&r.mode),
            opt(r.support),
            opt(r.distinct_sampled),
            opt(r.distinct_physical),
            opt(r.pooled_strings),
            opt(r.dimension),
            status
        )
        .unwrap();
    }
    out
}
