//! The 1-2 oblivious-transfer protocol.
//!
//! Alice masks her two messages with hashes of two random registers that she
//! SWAPped to Bob. Bob keeps one register and returns the XOR of both; the
//! XOR is the same whichever register he kept, so Alice learns nothing about
//! his choice, while returning it forces him to forget the other register.
//! Alice spot-checks the returned XOR on her pre-stored raw positions and
//! aborts on any mismatch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SubsetIndex};
use crate::channel::{swap_transfer, PublicChannel, Transcript};
use crate::hashing::ToeplitzHash;
use crate::ledger::{AgentId, EnergyLedger};
use crate::rng::{derive_seed, stream_rng};

use super::wire;
use super::{
    ProtocolError, STREAM_ALICE, STREAM_ALICE_ENV, STREAM_BOB, STREAM_BOB_ENV, STREAM_CHANNEL,
};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OtParams {
    /// Security parameter: registers are `4 * 2^nu` bits, a malicious
    /// party's budget `2^nu`.
    pub nu: u32,
    /// Message length.
    pub n: usize,
    /// Security surplus; `n + eta` raw positions are checked and hashed.
    pub eta: usize,
    /// Run the pre-emptive pad step (XOR both registers onto fresh random
    /// pads before computing; classically invisible).
    pub classicize: bool,
}

impl OtParams {
    pub fn register_len(&self) -> usize {
        4usize << self.nu
    }

    pub fn raw_len(&self) -> usize {
        self.n + self.eta
    }

    pub fn index_width(&self) -> usize {
        wire::index_width(self.register_len())
    }

    /// Longest single broadcast; the raw-position list dominates at desk
    /// scale.
    pub fn public_cap_bits(&self) -> usize {
        let raw_msg = wire::positions_wire_len(self.raw_len(), self.register_len());
        raw_msg
            .max(ToeplitzHash::seed_len(self.raw_len(), self.n))
            .max(self.n)
            .max(1)
    }

    /// Alice stores the raw positions and both extracts, then broadcasts the
    /// hash seed, the positions, and both masked messages.
    pub fn alice_budget(&self) -> u64 {
        let raw = self.raw_len();
        let copies = raw * self.index_width() + 2 * raw;
        let broadcasts = ToeplitzHash::seed_len(raw, self.n)
            + wire::positions_wire_len(raw, self.register_len())
            + 2 * self.n;
        (copies + broadcasts) as u64
    }

    /// Bob extracts the raw positions of his kept register and stores the
    /// unmasked message.
    pub fn bob_budget(&self) -> u64 {
        (self.raw_len() + self.n) as u64
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let fail = |msg: String| Err(ProtocolError::Config(msg));
        if self.nu == 0 || self.nu > 22 {
            return fail(format!("nu must be in 1..=22, got {}", self.nu));
        }
        if self.register_len() > 1 << 24 {
            return fail(format!(
                "register length {} exceeds 2^24",
                self.register_len()
            ));
        }
        if self.n == 0 || self.eta == 0 {
            return fail("n and eta must be positive".into());
        }
        if self.raw_len() > self.register_len() {
            return fail(format!(
                "n + eta = {} exceeds register length {}",
                self.raw_len(),
                self.register_len()
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtStatus {
    Delivered,
    AbortedCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AliceStrategy {
    Honest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobStrategy {
    Honest { choice: u8 },
    /// Returns the XOR register with `flips` positions flipped; each flip
    /// lands in the checked raw set with probability `(n+eta)/(4*2^nu)`.
    FlipBits { choice: u8, flips: usize },
}

impl BobStrategy {
    pub fn choice(&self) -> u8 {
        match self {
            BobStrategy::Honest { choice } | BobStrategy::FlipBits { choice, .. } => *choice,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OtOutcome {
    pub status: OtStatus,
    pub bob_choice: u8,
    /// The message Bob unmasked, when the run completed.
    pub bob_message: Option<BitString>,
    /// Alice's inputs, reported by the simulator for verification.
    pub message_0: BitString,
    pub message_1: BitString,
    pub transcript: Transcript,
    pub alice_ledger: EnergyLedger,
    pub bob_ledger: EnergyLedger,
}

#[derive(Clone, Debug, Serialize)]
pub struct OtSummary {
    pub status: OtStatus,
    pub bob_choice: u8,
    pub message_matches: Option<bool>,
    pub alice_consumed: u64,
    pub bob_consumed: u64,
}

impl From<&OtOutcome> for OtSummary {
    fn from(o: &OtOutcome) -> Self {
        let expected = if o.bob_choice == 0 {
            &o.message_0
        } else {
            &o.message_1
        };
        OtSummary {
            status: o.status,
            bob_choice: o.bob_choice,
            message_matches: o.bob_message.as_ref().map(|m| m == expected),
            alice_consumed: o.alice_ledger.consumed(),
            bob_consumed: o.bob_ledger.consumed(),
        }
    }
}

/// The pre-emptive pad step: XOR each register onto a fresh random pad from
/// Bob's environment. Reversible CNOT onto pads, so the ledger records a
/// zero-cost entry; the pads are one-time-pad encryptions, not copies.
/// Returns the updated pads; the registers themselves are untouched.
pub fn ot_classicize(
    x0: &BitString,
    x1: &BitString,
    pad0: BitString,
    pad1: BitString,
    ledger: &mut EnergyLedger,
) -> Result<(BitString, BitString), ProtocolError> {
    let mut pad0 = pad0;
    let mut pad1 = pad1;
    pad0.xor_in_place(x0)?;
    pad1.xor_in_place(x1)?;
    ledger
        .charge(0, "cnot-to-fresh-random-pad-target")
        .expect("zero charge always fits");
    Ok((pad0, pad1))
}

/// Executes one OT run.
pub fn run_ot(
    params: &OtParams,
    _alice: AliceStrategy,
    bob: BobStrategy,
    seed: u64,
) -> Result<OtOutcome, ProtocolError> {
    params.validate()?;
    let register_len = params.register_len();
    let raw_len = params.raw_len();
    let public = PublicChannel::new(params.public_cap_bits());

    let mut alice_rng = stream_rng(seed, STREAM_ALICE);
    let mut alice_env = stream_rng(seed, STREAM_ALICE_ENV);
    let mut bob_rng = stream_rng(seed, STREAM_BOB);
    let mut bob_env = stream_rng(seed, STREAM_BOB_ENV);
    let mut junk_rng = stream_rng(seed, STREAM_CHANNEL);

    let mut transcript = Transcript::new();
    let mut alice = EnergyLedger::new(AgentId::Alice, params.alice_budget());
    let mut bob_ledger = EnergyLedger::new(AgentId::Bob, params.bob_budget());

    // step 1: Alice's messages
    let m0 = BitString::random(params.n, &mut alice_rng);
    let m1 = BitString::random(params.n, &mut alice_rng);

    // step 2: two random registers; the raw positions and both extracts go
    // into Alice's memory
    let x0 = BitString::random(register_len, &mut alice_env);
    let x1 = BitString::random(register_len, &mut alice_env);
    let raw = SubsetIndex::sample(register_len, raw_len, &mut alice_rng)
        .expect("n + eta <= register length");
    alice
        .charge_copy((raw_len * params.index_width()) as u64, "raw positions")
        .expect("within computed budget");
    alice
        .charge_copy(2 * raw_len as u64, "raw extracts")
        .expect("within computed budget");
    let a0 = x0.extract(&raw)?;
    let a1 = x1.extract(&raw)?;

    // step 3: both registers cross the SWAP channel
    let swap0 = swap_transfer(
        &mut transcript,
        &mut junk_rng,
        AgentId::Alice,
        AgentId::Bob,
        x0,
        None,
    );
    let swap1 = swap_transfer(
        &mut transcript,
        &mut junk_rng,
        AgentId::Alice,
        AgentId::Bob,
        x1,
        None,
    );
    let r0 = swap0.delivered.expect("uninterfered swap delivers");
    let r1 = swap1.delivered.expect("uninterfered swap delivers");

    // step 4: Bob picks i, optionally classicizes, computes the XOR register
    // reversibly, keeps X^(i) and returns the XOR
    let choice = bob.choice();
    if params.classicize {
        let pad0 = BitString::random(register_len, &mut bob_env);
        let pad1 = BitString::random(register_len, &mut bob_env);
        let (_enc0, _enc1) = ot_classicize(&r0, &r1, pad0, pad1, &mut bob_ledger)?;
        // Bob keeps the pads in his environment; classically they never
        // influence the run again.
    }
    let mut xor_register = r0.xor(&r1)?;
    bob_ledger
        .charge(0, "xor-in-place")
        .expect("zero charge always fits");
    let kept = if choice == 0 { r0 } else { r1 };
    if let BobStrategy::FlipBits { flips, .. } = bob {
        let flip_at = SubsetIndex::sample(register_len, flips, &mut bob_rng)
            .expect("flips <= register length");
        for &pos in flip_at.positions() {
            xor_register.flip(pos);
        }
    }
    let swap_back = swap_transfer(
        &mut transcript,
        &mut junk_rng,
        AgentId::Bob,
        AgentId::Alice,
        xor_register,
        None,
    );
    let returned = swap_back.delivered.expect("uninterfered swap delivers");

    // step 5: Alice checks the returned XOR against her stored extracts
    let expected = a0.xor(&a1)?;
    let got = returned.extract(&raw)?;
    if got != expected {
        transcript.abort(AgentId::Alice, "returned XOR register fails the raw check");
        return Ok(OtOutcome {
            status: OtStatus::AbortedCheck,
            bob_choice: choice,
            bob_message: None,
            message_0: m0,
            message_1: m1,
            transcript,
            alice_ledger: alice,
            bob_ledger,
        });
    }

    // step 6: Alice broadcasts the hash, the raw positions, and both masked
    // messages
    let h = ToeplitzHash::random(raw_len, params.n, &mut alice_rng);
    let c0 = m0.xor(&h.hash(&a0)?)?;
    let c1 = m1.xor(&h.hash(&a1)?)?;
    public.broadcast(&mut transcript, &mut alice, AgentId::Alice, h.seed_bits())?;
    public.broadcast(
        &mut transcript,
        &mut alice,
        AgentId::Alice,
        wire::encode_positions(&raw),
    )?;
    public.broadcast(&mut transcript, &mut alice, AgentId::Alice, c0.clone())?;
    public.broadcast(&mut transcript, &mut alice, AgentId::Alice, c1.clone())?;

    // step 7: Bob unmasks his message
    let b_raw = kept.extract(&raw)?;
    bob_ledger
        .charge_copy(raw_len as u64, "raw extraction")
        .expect("within computed budget");
    let mask = h.hash(&b_raw)?;
    let cipher = if choice == 0 { c0 } else { c1 };
    let message = cipher.xor(&mask)?;
    bob_ledger
        .charge_copy(params.n as u64, "unmasked message")
        .expect("within computed budget");

    Ok(OtOutcome {
        status: OtStatus::Delivered,
        bob_choice: choice,
        bob_message: Some(message),
        message_0: m0,
        message_1: m1,
        transcript,
        alice_ledger: alice,
        bob_ledger,
    })
}

pub fn run_ot_batch(
    params: &OtParams,
    alice: AliceStrategy,
    bob: BobStrategy,
    master_seed: u64,
    trials: u64,
) -> Result<Vec<OtSummary>, ProtocolError> {
    params.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            run_ot(params, alice, bob, derive_seed(master_seed, trial)).map(|o| OtSummary::from(&o))
        })
        .collect()
}
