//! The counting experiments behind the security claims: exhaustive
//! reversible-permutation counting (a finite Landauer bound) and the
//! exhaustive/sampled memory games.
//!
//! A machine run is a reversible permutation applied to a state
//! `(x, y)`: `x` is the initially random memory part (erased head cells are
//! proof-of-work), `y` the initially blank free-energy part (randomized
//! cells are consumed input). Cell 0 sits at the tape head, so on the `x`
//! part "`w_out` erased head cells" means the low `w_out` bits are zero, and
//! on the `y` part "at most `w_in` cells touched" means `y < 2^w_in`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SubsetIndex};
use crate::channel::{swap_transfer, Transcript};
use crate::ledger::{AdversaryMemory, AgentId, EnergyLedger};
use crate::rng::{derive_seed, stream_rng, SimRng};

use rand::Rng;
use rand::SeedableRng;

/// Exhaustive enumeration is capped at `2^18` states.
pub const MAX_STATE_BITS: usize = 18;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GamesError {
    #[error("state space 2^{0} exceeds the exhaustive cap 2^{MAX_STATE_BITS}")]
    StateSpaceTooLarge(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How the machine's permutation is chosen.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationSpec {
    /// Fisher-Yates over the full state space, seeded.
    Random { seed: u64 },
    Identity,
    /// Packs as many `(x, 0)` inputs as possible into the target pattern,
    /// showing the counting bound is achievable with equality.
    Adversarial,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CountingConfig {
    pub len_x: usize,
    pub len_y: usize,
    pub w_in: usize,
    pub w_out: usize,
    pub permutation: PermutationSpec,
}

impl CountingConfig {
    fn validate(&self) -> Result<(), GamesError> {
        if self.len_x == 0 || self.len_x > 20 {
            return Err(GamesError::InvalidConfig(format!(
                "len_x must be in 1..=20, got {}",
                self.len_x
            )));
        }
        if self.len_y > 12 {
            return Err(GamesError::InvalidConfig(format!(
                "len_y must be <= 12, got {}",
                self.len_y
            )));
        }
        if self.len_x + self.len_y > MAX_STATE_BITS {
            return Err(GamesError::StateSpaceTooLarge(self.len_x + self.len_y));
        }
        if self.w_out > self.len_x {
            return Err(GamesError::InvalidConfig(format!(
                "w_out {} exceeds len_x {}",
                self.w_out, self.len_x
            )));
        }
        if self.w_in > self.len_y {
            return Err(GamesError::InvalidConfig(format!(
                "w_in {} exceeds len_y {}",
                self.w_in, self.len_y
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CountingOutcome {
    /// Inputs `(x, 0)` whose image matches the `(w_in, w_out)` pattern.
    pub count: u64,
    /// `2^(len_x - w_out + w_in)`, the reversibility bound on `count`.
    pub bound: u64,
    /// `count / 2^len_x`.
    pub probability: f64,
    /// `2^(w_in - w_out)`, the bound on `probability`.
    pub bound_probability: f64,
    pub within_bound: bool,
}

/// A reversible map over `(x, y)` states, `x` in the low `len_x` bits.
pub struct ReversiblePermutation {
    len_x: usize,
    len_y: usize,
    map: Vec<u32>,
}

impl ReversiblePermutation {
    fn state_bits(len_x: usize, len_y: usize) -> Result<usize, GamesError> {
        let bits = len_x + len_y;
        if bits > MAX_STATE_BITS {
            return Err(GamesError::StateSpaceTooLarge(bits));
        }
        Ok(bits)
    }

    pub fn identity(len_x: usize, len_y: usize) -> Result<Self, GamesError> {
        let bits = Self::state_bits(len_x, len_y)?;
        Ok(ReversiblePermutation {
            len_x,
            len_y,
            map: (0..1u32 << bits).collect(),
        })
    }

    pub fn random(len_x: usize, len_y: usize, seed: u64) -> Result<Self, GamesError> {
        let bits = Self::state_bits(len_x, len_y)?;
        let mut map: Vec<u32> = (0..1u32 << bits).collect();
        let mut rng = SimRng::seed_from_u64(seed);
        for i in (1..map.len()).rev() {
            let j = rng.gen_range(0..=i);
            map.swap(i, j);
        }
        Ok(ReversiblePermutation { len_x, len_y, map })
    }

    /// Permutation mapping as many inputs `(x, 0)` as possible into the
    /// `(w_in, w_out)` target pattern; the rest is completed arbitrarily but
    /// bijectively.
    pub fn adversarial(
        len_x: usize,
        len_y: usize,
        w_in: usize,
        w_out: usize,
    ) -> Result<Self, GamesError> {
        let bits = Self::state_bits(len_x, len_y)?;
        let size = 1usize << bits;
        let inputs = 1usize << len_x;
        let mut map = vec![u32::MAX; size];
        let mut used = vec![false; size];
        let mut assigned = 0usize;
        'fill: for z in 0..1u64 << (len_x - w_out) {
            for y in 0..1u64 << w_in {
                if assigned == inputs {
                    break 'fill;
                }
                let target = ((z << w_out) | (y << len_x)) as usize;
                map[assigned] = target as u32;
                used[target] = true;
                assigned += 1;
            }
        }
        let mut next_free = 0usize;
        for state in 0..size {
            if map[state] != u32::MAX {
                continue;
            }
            while used[next_free] {
                next_free += 1;
            }
            map[state] = next_free as u32;
            used[next_free] = true;
        }
        Ok(ReversiblePermutation { len_x, len_y, map })
    }

    pub fn from_spec(len_x: usize, len_y: usize, spec: PermutationSpec, w_in: usize, w_out: usize) -> Result<Self, GamesError> {
        match spec {
            PermutationSpec::Random { seed } => Self::random(len_x, len_y, seed),
            PermutationSpec::Identity => Self::identity(len_x, len_y),
            PermutationSpec::Adversarial => Self::adversarial(len_x, len_y, w_in, w_out),
        }
    }

    pub fn apply(&self, state: u32) -> u32 {
        self.map[state as usize]
    }

    pub fn len_x(&self) -> usize {
        self.len_x
    }

    pub fn len_y(&self) -> usize {
        self.len_y
    }

    fn x_part(&self, state: u32) -> u32 {
        state & ((1u32 << self.len_x) - 1)
    }

    fn y_part(&self, state: u32) -> u32 {
        state >> self.len_x
    }

    /// Proof-of-work of an output state: zero cells at the head of the
    /// memory part.
    pub fn pow_produced(&self, out_state: u32) -> u32 {
        let x = self.x_part(out_state);
        (x.trailing_zeros()).min(self.len_x as u32)
    }

    /// Free energy consumed by an output state: cells of the energy part
    /// that are no longer blank (position of the last randomized cell).
    pub fn energy_consumed(&self, out_state: u32) -> u32 {
        32 - self.y_part(out_state).leading_zeros()
    }

    /// Counts inputs `(x, 0)` whose image erases at least `w_out` head cells
    /// of the memory part while randomizing at most the first `w_in` cells
    /// of the energy part, and compares against the reversibility bound.
    pub fn count_pow_couples(&self, w_in: usize, w_out: usize) -> CountingOutcome {
        let inputs = 1u64 << self.len_x;
        let out_mask = if w_out == 0 { 0 } else { (1u32 << w_out) - 1 };
        let y_limit = 1u32 << w_in;
        let mut count = 0u64;
        for x in 0..inputs {
            let out = self.apply(x as u32);
            if self.x_part(out) & out_mask == 0 && self.y_part(out) < y_limit {
                count += 1;
            }
        }
        let bound_exp = self.len_x as i64 - w_out as i64 + w_in as i64;
        let bound = if bound_exp >= 63 {
            u64::MAX
        } else {
            1u64 << bound_exp
        };
        CountingOutcome {
            count,
            bound,
            probability: count as f64 / inputs as f64,
            bound_probability: 2f64.powi(w_in as i32 - w_out as i32),
            within_bound: count <= bound,
        }
    }
}

/// Runs the counting experiment for one configuration.
pub fn landauer_counting(cfg: &CountingConfig) -> Result<CountingOutcome, GamesError> {
    cfg.validate()?;
    let perm =
        ReversiblePermutation::from_spec(cfg.len_x, cfg.len_y, cfg.permutation, cfg.w_in, cfg.w_out)?;
    Ok(perm.count_pow_couples(cfg.w_in, cfg.w_out))
}

/// Memory-game quiz coverage.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum GameVariant {
    /// Quiz all `k * 2^nu` positions.
    Exhaustive,
    /// Quiz `t` positions sampled by the verifier.
    Sampled { t: usize },
}

/// Shipped adversary strategies. All retained bits go through the
/// ledger-charging memory; position lists derived from the strategy's own
/// seed are re-derivable and cost nothing.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum GameAdversary {
    /// Copy the first `bits` positions.
    CopyPrefix { bits: usize },
    /// Copy `bits` uniformly chosen positions.
    CopyRandom { bits: usize },
    NoCopy,
    /// Attempt to copy the whole register. Within the compliant `2^nu`
    /// bound this only records a budget violation; with an explicit larger
    /// bound it is the non-compliant reference point.
    PerfectCopy,
}

impl GameAdversary {
    pub fn label(&self) -> String {
        match self {
            GameAdversary::CopyPrefix { bits } => format!("copy-prefix:{bits}"),
            GameAdversary::CopyRandom { bits } => format!("copy-random:{bits}"),
            GameAdversary::NoCopy => "no-copy".into(),
            GameAdversary::PerfectCopy => "perfect-copy".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MemoryGameConfig {
    pub nu: u32,
    pub k: u32,
    pub variant: GameVariant,
    pub adversary: GameAdversary,
    pub trials: u64,
}

impl MemoryGameConfig {
    pub fn register_len(&self) -> usize {
        (self.k as usize) << self.nu
    }

    fn validate(&self) -> Result<(), GamesError> {
        let len = self.register_len();
        if self.k < 2 {
            return Err(GamesError::InvalidConfig("k must be >= 2".into()));
        }
        if len > 1 << 24 {
            return Err(GamesError::InvalidConfig(format!(
                "register length {len} exceeds 2^24"
            )));
        }
        if let GameVariant::Sampled { t } = self.variant {
            if t == 0 || t > len {
                return Err(GamesError::InvalidConfig(format!(
                    "sample size {t} out of range 1..={len}"
                )));
            }
        }
        match self.adversary {
            GameAdversary::CopyPrefix { bits } | GameAdversary::CopyRandom { bits }
                if bits > len =>
            {
                Err(GamesError::InvalidConfig(format!(
                    "cannot copy {bits} bits from a {len}-bit register"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One game trial, for per-trial CSV export.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub quiz_size: usize,
    pub known_in_quiz: usize,
    pub unknown_in_quiz: usize,
    pub known_correct: usize,
    pub unknown_correct: usize,
    pub full_success: bool,
    pub budget_violation: bool,
}

/// Aggregated game statistics.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GameStats {
    pub trials: u64,
    pub register_len: usize,
    pub bound: u64,
    pub full_success: u64,
    pub known_correct: u64,
    pub known_total: u64,
    pub unknown_correct: u64,
    pub unknown_total: u64,
    pub sum_unknown_in_quiz: u64,
    pub sum_quiz_size: u64,
    pub budget_violations: u64,
}

impl GameStats {
    pub fn full_success_rate(&self) -> f64 {
        self.full_success as f64 / self.trials as f64
    }

    pub fn known_bit_rate(&self) -> f64 {
        self.known_correct as f64 / self.known_total.max(1) as f64
    }

    pub fn unknown_bit_rate(&self) -> f64 {
        self.unknown_correct as f64 / self.unknown_total.max(1) as f64
    }

    /// Mean fraction of quizzed positions the adversary had not stored;
    /// each such position is a fair coin, so this is the empirical
    /// min-entropy rate of the quiz answers.
    pub fn min_entropy_rate(&self) -> f64 {
        self.sum_unknown_in_quiz as f64 / self.sum_quiz_size.max(1) as f64
    }
}

fn observe(
    adversary: GameAdversary,
    x: &BitString,
    memory: &mut AdversaryMemory,
    adv_rng: &mut SimRng,
) -> bool {
    let len = x.len();
    let positions = match adversary {
        GameAdversary::NoCopy => return false,
        GameAdversary::CopyPrefix { bits } => {
            SubsetIndex::new((0..bits).collect(), len).expect("prefix positions valid")
        }
        GameAdversary::CopyRandom { bits } => {
            SubsetIndex::sample(len, bits, adv_rng).expect("validated bits <= len")
        }
        GameAdversary::PerfectCopy => SubsetIndex::full(len),
    };
    let bits = x.extract(&positions).expect("positions over x");
    match memory.store("intercepted register", Some(positions), bits) {
        Ok(()) => false,
        Err(_) => true, // over budget: nothing stored, violation recorded
    }
}

fn run_trial(
    cfg: &MemoryGameConfig,
    bound: u64,
    master_seed: u64,
    trial: u64,
) -> TrialRecord {
    let len = cfg.register_len();
    let mut env_rng = stream_rng(master_seed, trial * 4);
    let mut adv_rng = stream_rng(master_seed, trial * 4 + 1);
    let mut verifier_rng = stream_rng(master_seed, trial * 4 + 2);
    let mut junk_rng = stream_rng(master_seed, trial * 4 + 3);

    // 1. the adversary isolates X from the lab environment (selection, not
    //    copying: zero charge)
    let x = BitString::random(len, &mut env_rng);
    let mut memory = AdversaryMemory::new(EnergyLedger::new(AgentId::Adversary, bound));

    // 2. computation on (X, E) under the ledger
    let budget_violation = observe(cfg.adversary, &x, &mut memory, &mut adv_rng);

    // 3. X goes to the verifier over the SWAP; the adversary keeps only what
    //    it paid for
    let mut transcript = Transcript::new();
    let outcome = swap_transfer(
        &mut transcript,
        &mut junk_rng,
        AgentId::Adversary,
        AgentId::Verifier,
        x,
        None,
    );
    let x_at_verifier = outcome.delivered.expect("uninterfered swap delivers");

    // 4. the quiz
    let quiz = match cfg.variant {
        GameVariant::Exhaustive => SubsetIndex::full(len),
        GameVariant::Sampled { t } => {
            SubsetIndex::sample(len, t, &mut verifier_rng).expect("validated t <= len")
        }
    };

    let mut rec = TrialRecord {
        trial,
        quiz_size: quiz.len(),
        known_in_quiz: 0,
        unknown_in_quiz: 0,
        known_correct: 0,
        unknown_correct: 0,
        full_success: true,
        budget_violation,
    };
    for &pos in quiz.positions() {
        let truth = x_at_verifier.get(pos);
        match memory.recall(pos) {
            Some(answer) => {
                rec.known_in_quiz += 1;
                if answer == truth {
                    rec.known_correct += 1;
                } else {
                    rec.full_success = false;
                }
            }
            None => {
                rec.unknown_in_quiz += 1;
                let guess = adv_rng.gen_bool(0.5);
                if guess == truth {
                    rec.unknown_correct += 1;
                } else {
                    rec.full_success = false;
                }
            }
        }
    }
    rec
}

/// Runs the game and returns per-trial records (aggregate with
/// [`aggregate_stats`]). The adversary's ledger bound is exactly `2^nu`.
pub fn run_memory_game_detailed(
    cfg: &MemoryGameConfig,
    seed: u64,
) -> Result<Vec<TrialRecord>, GamesError> {
    cfg.validate()?;
    let bound = 1u64 << cfg.nu;
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, bound, seed, trial))
        .collect())
}

pub fn aggregate_stats(cfg: &MemoryGameConfig, records: &[TrialRecord]) -> GameStats {
    let mut stats = GameStats {
        trials: records.len() as u64,
        register_len: cfg.register_len(),
        bound: 1u64 << cfg.nu,
        ..GameStats::default()
    };
    for r in records {
        stats.full_success += r.full_success as u64;
        stats.known_correct += r.known_correct as u64;
        stats.known_total += r.known_in_quiz as u64;
        stats.unknown_correct += r.unknown_correct as u64;
        stats.unknown_total += r.unknown_in_quiz as u64;
        stats.sum_unknown_in_quiz += r.unknown_in_quiz as u64;
        stats.sum_quiz_size += r.quiz_size as u64;
        stats.budget_violations += r.budget_violation as u64;
    }
    stats
}

pub fn run_memory_game(cfg: &MemoryGameConfig, seed: u64) -> Result<GameStats, GamesError> {
    let records = run_memory_game_detailed(cfg, seed)?;
    Ok(aggregate_stats(cfg, &records))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowReductionStats {
    pub trials: u64,
    /// Trials where XORing the adversary's guess onto X produced the
    /// all-zero string of length `k * 2^nu`.
    pub all_zero_count: u64,
    /// `-(k-1) * 2^nu`: log2 of the bound on the all-zero frequency for a
    /// compliant adversary.
    pub log2_bound: f64,
    pub budget_violations: u64,
}

/// The reduction from the exhaustive memory game to the counting bound, run
/// literally: the adversary XORs its best guess onto X; a correct guess
/// turns X into an all-zero proof-of-work of the full register length.
/// `bound_override` permits non-compliant budgets for demonstration.
pub fn pow_reduction_check(
    adversary: GameAdversary,
    k: u32,
    nu: u32,
    trials: u64,
    bound_override: Option<u64>,
    seed: u64,
) -> Result<PowReductionStats, GamesError> {
    let cfg = MemoryGameConfig {
        nu,
        k,
        variant: GameVariant::Exhaustive,
        adversary,
        trials,
    };
    cfg.validate()?;
    let len = cfg.register_len();
    let bound = bound_override.unwrap_or(1u64 << nu);
    let results: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut env_rng = stream_rng(derive_seed(seed, 0xb00), trial * 2);
            let mut adv_rng = stream_rng(derive_seed(seed, 0xb01), trial * 2 + 1);
            let x = BitString::random(len, &mut env_rng);
            let mut memory = AdversaryMemory::new(EnergyLedger::new(AgentId::Adversary, bound));
            let violation = observe(adversary, &x, &mut memory, &mut adv_rng);
            let mut guess = BitString::zeros(len);
            for pos in 0..len {
                let bit = memory
                    .recall(pos)
                    .unwrap_or_else(|| adv_rng.gen_bool(0.5));
                if bit {
                    guess.set(pos, true);
                }
            }
            let mut residue = x;
            residue.xor_in_place(&guess).expect("equal lengths");
            (residue.hamming_weight() == 0, violation)
        })
        .collect();
    let all_zero_count = results.iter().filter(|r| r.0).count() as u64;
    let budget_violations = results.iter().filter(|r| r.1).count() as u64;
    Ok(PowReductionStats {
        trials,
        all_zero_count,
        log2_bound: -((k as f64 - 1.0) * (1u64 << nu) as f64),
        budget_violations,
    })
}
