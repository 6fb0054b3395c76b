//! `qsci`: sample-based selected CI from the command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qsci_core::eig::OccupationVector;
use qsci_core::integrals::{fock_diagonal, mp2_t2, read_fcidump, read_t2};
use qsci_core::lucj::{build_state, params_for_mode, read_params, write_params, AnsatzMode};
use qsci_core::recovery::{recover_loop, trace_csv, RecoveryConfig};
use qsci_core::sampler::{
    apply_noise, default_max_flips, read_samples, sample_exact, support_set, write_samples, BitOrder, NoiseConfig,
};
use qsci_core::scan::{fci_energy, report_sizes, run_scan, scan_csv, sizes_csv, ScanConfig, DEFAULTS_HELP};
use qsci_core::subspace::{BatchConfig, BatchMode, Pooling, DEFAULT_MAX_DIMENSION};
use qsci_core::{CIVector, Determinant, MolecularHamiltonian};

#[derive(Parser)]
#[command(name = "qsci", version, about = "Sample-based selected configuration interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a dissociation scan described by a config file.
    #[command(after_help = DEFAULTS_HELP)]
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample and string counts per geometry, without diagonalization.
    #[command(after_help = DEFAULTS_HELP)]
    Sizes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact ground-state energy over the full determinant space.
    Fci {
        #[arg(long)]
        fcidump: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DIMENSION)]
        max_dimension: u128,
    },
    /// Sample an ansatz state and write a sample file.
    Sample(SampleArgs),
    /// Configuration recovery and batched diagonalization of a sample file.
    Recover(RecoverArgs),
    /// Write LUCJ parameters derived from MP2 (or given) amplitudes.
    Params {
        #[arg(long)]
        fcidump: PathBuf,
        #[arg(long)]
        t2: Option<PathBuf>,
        #[arg(long, default_value = "2L'")]
        ansatz: AnsatzMode,
        #[arg(long)]
        locality: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StateKind {
    #[value(name = "1L")]
    OneLayer,
    #[value(name = "2L")]
    TwoLayer,
    #[value(name = "2L'", alias = "2LP")]
    Truncated,
    #[value(name = "hf")]
    HartreeFock,
}

impl StateKind {
    fn ansatz(self) -> Option<AnsatzMode> {
        match self {
            StateKind::OneLayer => Some(AnsatzMode::OneLayer),
            StateKind::TwoLayer => Some(AnsatzMode::TwoLayer),
            StateKind::Truncated => Some(AnsatzMode::TruncatedTwoLayer),
            StateKind::HartreeFock => None,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    fcidump: PathBuf,
    #[arg(long, value_enum)]
    state: StateKind,
    /// Shots; 0 lists every determinant with `|c|²` above `--cutoff`.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 1e-12)]
    cutoff: f64,
    #[arg(long)]
    out: PathBuf,
    /// Amplitudes file; MP2 amplitudes are used when absent.
    #[arg(long, conflicts_with = "params")]
    t2: Option<PathBuf>,
    /// Explicit LUCJ parameter file.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    locality: bool,
    /// Bit-flip chain probability; omitted means no noise.
    #[arg(long)]
    noise_p: Option<f64>,
    /// Flip cap per descendant (default 8 x qubits).
    #[arg(long)]
    max_flips: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "blocks")]
    bit_order: BitOrder,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeKind {
    FixedSubspace,
    FixedDraw,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    fcidump: PathBuf,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    #[arg(long, value_enum, default_value = "fixed-subspace")]
    mode: ModeKind,
    /// Subspace dimension in fixed-subspace mode (a perfect square).
    #[arg(long, default_value_t = 16)]
    d: u64,
    /// Draws per batch in fixed-draw mode.
    #[arg(long, default_value_t = 8)]
    n_draw: usize,
    /// Use only the α half of each sample.
    #[arg(long)]
    alpha_only: bool,
    #[arg(long)]
    hf_fallback: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_DIMENSION)]
    max_dimension: u128,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "blocks")]
    bit_order: BitOrder,
    /// Trace CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print the final averaged occupations.
    #[arg(long)]
    occupations: bool,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_hamiltonian(path: &Path) -> Result<MolecularHamiltonian> {
    read_fcidump(path).with_context(|| format!("reading {}", path.display()))
}

fn state_for(args: &SampleArgs, h: &MolecularHamiltonian) -> Result<CIVector> {
    let Some(mode) = args.state.ansatz() else {
        return Ok(CIVector::single(h.n_orbitals, Determinant::hartree_fock(h.n_alpha, h.n_beta)));
    };
    let params = match (&args.params, &args.t2) {
        (Some(p), _) => read_params(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(t)) => params_for_mode(&read_t2(t)?, mode, args.locality)?,
        (None, None) => params_for_mode(&mp2_t2(h, &fock_diagonal(h), 1e-8)?, mode, args.locality)?,
    };
    Ok(build_state(h, &params, mode)?)
}

fn sample(args: &SampleArgs) -> Result<()> {
    let h = load_hamiltonian(&args.fcidump)?;
    let state = state_for(args, &h)?;
    let mut set = if args.shots == 0 {
        support_set(&state, args.cutoff)?
    } else {
        sample_exact(&state, args.shots, args.seed)?
    };
    if let Some(p) = args.noise_p {
        let n_qubits = 2 * h.n_orbitals;
        let noise = NoiseConfig {
            p,
            max_flips: args.max_flips.unwrap_or(default_max_flips(n_qubits)),
            seed: qsci_core::rng::derive_seed(args.seed, 1),
        };
        set = apply_noise(&set, &noise)?;
    }
    write_samples(&set, &args.out, args.bit_order)?;
    eprintln!(
        "{} distinct keys, {} counts -> {}",
        set.len(),
        set.total_counts(),
        args.out.display()
    );
    Ok(())
}

fn format_occupations(occ: &OccupationVector) -> String {
    let row = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
    format!("alpha {}\nbeta  {}\n", row(&occ.alpha), row(&occ.beta))
}

fn recover(args: &RecoverArgs) -> Result<()> {
    let h = load_hamiltonian(&args.fcidump)?;
    let raw = read_samples(&args.samples, args.bit_order)
        .with_context(|| format!("reading {}", args.samples.display()))?;
    if raw.n_qubits() != 2 * h.n_orbitals {
        bail!(
            "{} holds {}-qubit samples but the Hamiltonian has {} orbitals",
            args.samples.display(),
            raw.n_qubits(),
            h.n_orbitals
        );
    }
    let mode = match args.mode {
        ModeKind::FixedSubspace => BatchMode::FixedSubspace { d: args.d },
        ModeKind::FixedDraw => BatchMode::FixedDraw { n_draw: args.n_draw },
    };
    let mut batch = BatchConfig::new(args.batches, mode, qsci_core::rng::derive_seed(args.seed, 0));
    batch.max_dimension = args.max_dimension;
    if args.alpha_only {
        batch.pooling = Pooling::AlphaOnly;
    }
    let cfg = RecoveryConfig {
        iterations: args.iters,
        seed: qsci_core::rng::derive_seed(args.seed, 1),
        batch,
        hf_fallback: args.hf_fallback,
    };
    let trace = recover_loop(&raw, &h, &cfg)?;
    emit(&trace_csv(&trace), args.out.as_deref())?;
    if args.occupations {
        let last = trace.last().expect("trace holds iteration 0");
        eprint!("{}", format_occupations(&last.occupations));
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Scan { config, out, seed } => {
            let mut cfg = ScanConfig::read(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let rows = run_scan(&cfg);
            let out = out.or(cfg.output.clone());
            emit(&scan_csv(&cfg, &rows), out.as_deref())?;
            let failed = rows.iter().filter(|r| r.failure.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} geometries failed");
            }
        }
        Command::Sizes { config, out } => {
            let cfg = ScanConfig::read(&config).with_context(|| format!("reading {}", config.display()))?;
            emit(&sizes_csv(&cfg, &report_sizes(&cfg)), out.as_deref())?;
        }
        Command::Fci { fcidump, max_dimension } => {
            let h = load_hamiltonian(&fcidump)?;
            match fci_energy(&h, max_dimension)? {
                Some(e) => println!("{e:.12}"),
                None => bail!("full space exceeds {max_dimension} determinants"),
            }
        }
        Command::Sample(args) => sample(&args)?,
        Command::Recover(args) => recover(&args)?,
        Command::Params { fcidump, t2, ansatz, locality, out } => {
            let h = load_hamiltonian(&fcidump)?;
            let t2 = match t2 {
                Some(p) => read_t2(&p)?,
                None => mp2_t2(&h, &fock_diagonal(&h), 1e-8)?,
            };
            emit(&write_params(&params_for_mode(&t2, ansatz, locality)?), out.as_deref())?;
        }
    }
    Ok(())
}
