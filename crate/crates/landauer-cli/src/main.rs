//! `landauer` — command-line harness for the free-energy-bounded
//! cryptography simulator.
//!
//! Exit codes: 0 success, 1 configuration error, 2 invariant violation
//! (violations are the test signal of the verification subcommands).

mod config;
mod runners;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    parse_adversary, parse_eve, parse_variant, preset, CommonOpts, ConfigError, FileConfig,
    OutputFormat, RunConfig, PRESET_NAMES,
};
use landauer::games::MemoryGameConfig;
use landauer::protocol::{BobStrategy, NoiseModel, SkeParams};

#[derive(Parser)]
#[command(
    name = "landauer",
    version,
    about = "Simulator and verification toolkit for free-energy-bounded cryptography",
    long_about = "Runs the secret-key-establishment and oblivious-transfer protocols over \
                  simulated channels with per-agent free-energy ledgers, plus the exhaustive \
                  counting experiments (reversible-permutation bounds, memory games, \
                  2-universality, leftover-hash distances) that verify the model numerically.\n\
                  All runs are deterministic in --seed; identical configurations produce \
                  byte-identical outputs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed; every generator in the run derives from it in counter
    /// mode, so results are reproducible and independent of --jobs
    #[arg(long)]
    seed: Option<u64>,
    /// Independent runs (protocol batches, permutations, trials)
    #[arg(long)]
    trials: Option<u64>,
    /// Write detailed per-run records to this path
    #[arg(long)]
    output: Option<PathBuf>,
    /// Detail format: json or csv
    #[arg(long, default_value = "json")]
    format: String,
    /// Worker threads (default: all cores); never changes results
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file with parameter defaults; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset (see `landauer presets`)
    #[arg(long)]
    preset: Option<String>,
}

impl CommonArgs {
    fn resolve(&self, default_trials: u64, file: &FileConfig) -> Result<CommonOpts, ConfigError> {
        Ok(CommonOpts {
            seed: self.seed.or(file.seed).unwrap_or(1),
            trials: self.trials.or(file.trials).unwrap_or(default_trials),
            output: self.output.clone(),
            format: self.format.parse()?,
            jobs: self.jobs,
        })
    }

    fn file(&self) -> Result<FileConfig, ConfigError> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Secret-key establishment: Alice and Bob derive a shared key from a
    /// register Eve cannot afford to copy
    Ske(SkeArgs),
    /// 1-2 oblivious transfer: Bob learns exactly one of Alice's two
    /// messages, Alice learns nothing about which
    Ot(OtArgs),
    /// Memory game: how much can a 2^nu-bounded adversary remember about a
    /// k*2^nu-bit string it forwarded?
    MemoryGame(MemoryGameArgs),
    /// Exhaustive counting bound for random reversible permutations
    LandauerCount(LandauerCountArgs),
    /// Exact leftover-hash distances over randomized distributions
    LhlCheck(LhlCheckArgs),
    /// Exact 2-universality counts by full family enumeration
    UniversalityCheck(UniversalityCheckArgs),
    /// Monte-Carlo bench of the ball-expansion reconciliation decoder
    ReconcileBench(ReconcileBenchArgs),
    /// List the documented parameter presets
    Presets,
}

#[derive(Args)]
struct SkeArgs {
    /// Security parameter nu; Eve's free-energy bound is 2^nu
    #[arg(long)]
    nu: Option<u32>,
    /// Register multiplier k; the register is k * 2^nu bits and Eve can
    /// retain at most a 1/k fraction of it
    #[arg(long)]
    k: Option<u32>,
    /// Test positions t sacrificed to estimate the error rate
    #[arg(long)]
    t: Option<usize>,
    /// Raw-key positions s that become key material
    #[arg(long)]
    s: Option<usize>,
    /// Rate slack delta' in the reconciliation hash length and key formula
    #[arg(long)]
    delta_prime: Option<f64>,
    /// Reconciliation security parameter eta (hash surplus bits)
    #[arg(long)]
    eta: Option<usize>,
    /// Privacy-amplification allowance epsilon subtracted from the key
    #[arg(long)]
    epsilon_pa: Option<f64>,
    /// Abort when the measured test error rate exceeds this (default: the
    /// largest rate that still yields a key)
    #[arg(long)]
    abort_threshold: Option<f64>,
    /// Cap the final key at this many bits (testing hook)
    #[arg(long)]
    key_cap: Option<usize>,
    /// Binary-symmetric-channel flip probability on the transfer (0 = none)
    #[arg(long)]
    noise: Option<f64>,
    /// Eavesdropper: none|block|forward|store-fraction:N|substitute
    #[arg(long)]
    eve: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OtArgs {
    /// Security parameter nu; registers are 4 * 2^nu bits
    #[arg(long)]
    nu: Option<u32>,
    /// Message length n
    #[arg(long)]
    n: Option<usize>,
    /// Security surplus eta; n + eta raw positions are checked and hashed
    #[arg(long)]
    eta: Option<usize>,
    /// Bob's choice bit i
    #[arg(long)]
    bob_choice: Option<u8>,
    /// Malicious Bob: flip this many bits of the returned XOR register
    #[arg(long)]
    flip_bits: Option<usize>,
    /// XOR both registers onto fresh random pads before computing
    /// (classically invisible)
    #[arg(long)]
    classicize: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MemoryGameArgs {
    /// Security parameter nu; the adversary's ledger bound is exactly 2^nu
    #[arg(long)]
    nu: Option<u32>,
    /// Register multiplier k; the quizzed string is k * 2^nu bits
    #[arg(long)]
    k: Option<u32>,
    /// Quiz coverage: exhaustive or sampled:T (T sample positions)
    #[arg(long)]
    variant: Option<String>,
    /// Adversary: copy-prefix:N|copy-random:N|no-copy|perfect-copy
    #[arg(long)]
    adversary: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct LandauerCountArgs {
    /// Memory-part length |x| (proof-of-work cells erase at its head)
    #[arg(long)]
    len_x: Option<usize>,
    /// Energy-part length |y| (consumed cells randomize at its head)
    #[arg(long)]
    len_y: Option<usize>,
    /// Consumed-cell budget w_in for a single cell (with --w-out)
    #[arg(long)]
    w_in: Option<usize>,
    /// Erased-cell target w_out for a single cell (with --w-in)
    #[arg(long)]
    w_out: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct LhlCheckArgs {
    /// Randomized distributions to test (epsilon cycles over 1, 2, 3)
    #[arg(long)]
    distributions: Option<u32>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct UniversalityCheckArgs {
    /// Input length n (with --m; default checks (3,1), (4,2), (5,2))
    #[arg(long)]
    n: Option<usize>,
    /// Output length m
    #[arg(long)]
    m: Option<usize>,
    /// Random distinct input pairs per dimension
    #[arg(long)]
    pairs: Option<u32>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReconcileBenchArgs {
    /// String length s (<= 24: the bench runs the literal ball search)
    #[arg(long)]
    s: Option<usize>,
    /// Binary-symmetric-channel rate p between the two strings
    #[arg(long)]
    p: Option<f64>,
    /// Rate slack delta' in the hash length
    #[arg(long)]
    delta_prime: Option<f64>,
    /// Security parameter eta (hash surplus bits)
    #[arg(long)]
    eta: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

fn resolve_ske(args: &SkeArgs) -> Result<RunConfig, ConfigError> {
    let file = args.common.file()?;
    let name = args.common.preset.as_deref().unwrap_or("ske-desk");
    let base = preset(name, args.common.resolve(100, &file)?)?;
    let (mut params, mut eve, mut noise, common) = match base {
        RunConfig::Ske {
            params,
            eve,
            noise,
            common,
        } => (params, eve, noise, common),
        _ => {
            return Err(ConfigError::Invalid(format!(
                "preset {name:?} is not an ske preset"
            )))
        }
    };
    apply_ske(&mut params, &mut eve, &mut noise, &file)?;
    let flags = FileConfig {
        nu: args.nu,
        k: args.k,
        t: args.t,
        s: args.s,
        delta_prime: args.delta_prime,
        eta: args.eta,
        epsilon_pa: args.epsilon_pa,
        abort_threshold: args.abort_threshold,
        key_cap: args.key_cap,
        noise: args.noise,
        eve: args.eve.clone(),
        ..FileConfig::default()
    };
    apply_ske(&mut params, &mut eve, &mut noise, &flags)?;
    Ok(RunConfig::Ske {
        params,
        eve,
        noise,
        common,
    })
}

fn apply_ske(
    params: &mut SkeParams,
    eve: &mut Option<landauer::protocol::EveStrategy>,
    noise: &mut NoiseModel,
    src: &FileConfig,
) -> Result<(), ConfigError> {
    if let Some(v) = src.nu {
        params.nu = v;
    }
    if let Some(v) = src.k {
        params.k = v;
    }
    if let Some(v) = src.t {
        params.t = v;
    }
    if let Some(v) = src.s {
        params.s = v;
    }
    if let Some(v) = src.delta_prime {
        params.delta_prime = v;
    }
    if let Some(v) = src.eta {
        params.eta = v;
    }
    if let Some(v) = src.epsilon_pa {
        params.epsilon_pa = v;
    }
    if let Some(v) = src.abort_threshold {
        params.abort_threshold = Some(v);
    }
    if let Some(v) = src.key_cap {
        params.key_len_cap = Some(v);
    }
    if let Some(p) = src.noise {
        *noise = if p == 0.0 {
            NoiseModel::Noiseless
        } else {
            NoiseModel::Bsc { p }
        };
    }
    if let Some(s) = &src.eve {
        *eve = parse_eve(s)?;
    }
    Ok(())
}

fn resolve_ot(args: &OtArgs) -> Result<RunConfig, ConfigError> {
    let file = args.common.file()?;
    let name = args.common.preset.as_deref().unwrap_or("ot-desk");
    let base = preset(name, args.common.resolve(100, &file)?)?;
    let (mut params, mut bob, common) = match base {
        RunConfig::Ot {
            params,
            bob,
            common,
        } => (params, bob, common),
        _ => {
            return Err(ConfigError::Invalid(format!(
                "preset {name:?} is not an ot preset"
            )))
        }
    };
    if let Some(choice) = args.bob_choice.or(file.bob_choice) {
        if choice > 1 {
            return Err(ConfigError::Invalid(format!(
                "bob-choice must be 0 or 1, got {choice}"
            )));
        }
    }
    let mut apply = |src: &FileConfig| {
        if let Some(v) = src.nu {
            params.nu = v;
        }
        if let Some(v) = src.n {
            params.n = v;
        }
        if let Some(v) = src.eta {
            params.eta = v;
        }
        if let Some(v) = src.classicize {
            params.classicize = v;
        }
        let choice = src.bob_choice.unwrap_or(bob.choice());
        bob = match src.flip_bits {
            Some(flips) => BobStrategy::FlipBits { choice, flips },
            None => match bob {
                BobStrategy::FlipBits { flips, .. } => BobStrategy::FlipBits { choice, flips },
                BobStrategy::Honest { .. } => BobStrategy::Honest { choice },
            },
        };
    };
    apply(&file);
    apply(&FileConfig {
        nu: args.nu,
        n: args.n,
        eta: args.eta,
        classicize: if args.classicize { Some(true) } else { None },
        bob_choice: args.bob_choice,
        flip_bits: args.flip_bits,
        ..FileConfig::default()
    });
    Ok(RunConfig::Ot {
        params,
        bob,
        common,
    })
}

fn resolve_memory_game(args: &MemoryGameArgs) -> Result<RunConfig, ConfigError> {
    let file = args.common.file()?;
    let common = args.common.resolve(10_000, &file)?;
    let nu = args.nu.or(file.nu).unwrap_or(6);
    let k = args.k.or(file.k).unwrap_or(4);
    let variant = match args.variant.as_deref().or(file.variant.as_deref()) {
        Some(s) => parse_variant(s)?,
        None => landauer::games::GameVariant::Sampled { t: 64 },
    };
    let adversary = match args.adversary.as_deref().or(file.adversary.as_deref()) {
        Some(s) => parse_adversary(s)?,
        None => landauer::games::GameAdversary::CopyRandom { bits: 1 << nu },
    };
    Ok(RunConfig::MemoryGame {
        config: MemoryGameConfig {
            nu,
            k,
            variant,
            adversary,
            trials: common.trials,
        },
        common,
    })
}

fn resolve_landauer_count(args: &LandauerCountArgs) -> Result<RunConfig, ConfigError> {
    let file = args.common.file()?;
    if let Some(name) = args.common.preset.as_deref() {
        let base = preset(name, args.common.resolve(100, &file)?)?;
        if let RunConfig::LandauerCount { .. } = &base {
            return Ok(base);
        }
        return Err(ConfigError::Invalid(format!(
            "preset {name:?} is not a landauer-count preset"
        )));
    }
    let common = args.common.resolve(100, &file)?;
    let len_x = args.len_x.or(file.len_x).unwrap_or(12);
    let len_y = args.len_y.or(file.len_y).unwrap_or(6);
    let cells = match (args.w_in.or(file.w_in), args.w_out.or(file.w_out)) {
        (Some(w_in), Some(w_out)) => vec![(w_in, w_out)],
        (None, None) => [0usize, 2, 4]
            .iter()
            .flat_map(|&w_in| (w_in + 1..=w_in + 8).map(move |w_out| (w_in, w_out)))
            .collect(),
        _ => {
            return Err(ConfigError::Invalid(
                "--w-in and --w-out must be given together (omit both for the full grid)".into(),
            ))
        }
    };
    Ok(RunConfig::LandauerCount {
        len_x,
        len_y,
        cells,
        common,
    })
}

fn resolve(command: &Command) -> Result<RunConfig, ConfigError> {
    match command {
        Command::Ske(args) => resolve_ske(args),
        Command::Ot(args) => resolve_ot(args),
        Command::MemoryGame(args) => resolve_memory_game(args),
        Command::LandauerCount(args) => resolve_landauer_count(args),
        Command::LhlCheck(args) => {
            let file = args.common.file()?;
            Ok(RunConfig::LhlCheck {
                distributions: args.distributions.or(file.distributions).unwrap_or(100),
                common: args.common.resolve(1, &file)?,
            })
        }
        Command::UniversalityCheck(args) => {
            let file = args.common.file()?;
            let dims = match (args.n, args.m) {
                (Some(n), Some(m)) => vec![(n, m)],
                (None, None) => vec![(3, 1), (4, 2), (5, 2)],
                _ => {
                    return Err(ConfigError::Invalid(
                        "--n and --m must be given together".into(),
                    ))
                }
            };
            Ok(RunConfig::UniversalityCheck {
                dims,
                pairs: args.pairs.or(file.pairs).unwrap_or(50),
                common: args.common.resolve(1, &file)?,
            })
        }
        Command::ReconcileBench(args) => {
            let file = args.common.file()?;
            Ok(RunConfig::ReconcileBench {
                s: args.s.or(file.s).unwrap_or(16),
                p: args.p.or(file.p).unwrap_or(0.1),
                delta_prime: args.delta_prime.or(file.delta_prime).unwrap_or(0.1),
                eta: args.eta.or(file.eta).unwrap_or(8),
                common: args.common.resolve(1000, &file)?,
            })
        }
        Command::Presets => unreachable!("handled in main"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; anything else is a
            // configuration error
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    if matches!(cli.command, Command::Presets) {
        let mut listing = serde_json::Map::new();
        for name in PRESET_NAMES {
            let common = CommonOpts {
                seed: 1,
                trials: 100,
                output: None,
                format: OutputFormat::Json,
                jobs: None,
            };
            let cfg = preset(name, common).expect("documented preset resolves");
            listing.insert(name.to_string(), serde_json::to_value(&cfg).unwrap());
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(listing)).unwrap()
        );
        return ExitCode::SUCCESS;
    }

    let config = match resolve(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    // parameter consistency checks run before any computation
    let validation = match &config {
        RunConfig::Ske { params, noise, .. } => params
            .validate()
            .and_then(|_| noise.validate())
            .map_err(|e| e.to_string()),
        RunConfig::Ot { params, .. } => params.validate().map_err(|e| e.to_string()),
        _ => Ok(()),
    };
    if let Err(e) = validation {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }

    match runners::execute(&config) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.summary).unwrap());
            if report.violations > 0 {
                eprintln!(
                    "error: {} invariant violation(s) detected",
                    report.violations
                );
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
