//! Protocol orchestration: secret-key establishment and 1-2 oblivious
//! transfer over the simulated channels, with per-agent energy accounting.

pub mod eve;
pub mod ot;
pub mod ske;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::bits::{BitError, BitString};
use crate::channel::{ChannelError, Transcript, ViewEvent};
use crate::hashing::HashingError;
use crate::ledger::AgentId;
use crate::recon::ReconError;
use crate::rng::SimRng;

pub use eve::{EveInterceptor, EveStrategy};
pub use ot::{
    ot_classicize, run_ot, run_ot_batch, AliceStrategy, BobStrategy, OtOutcome, OtParams,
    OtStatus, OtSummary,
};
pub use ske::{run_ske, run_ske_batch, EveReport, SkeOutcome, SkeParams, SkeStatus, SkeSummary};

// Stream ids for deriving per-agent generators from a run seed.
pub(crate) const STREAM_ALICE: u64 = 0;
pub(crate) const STREAM_BOB: u64 = 1;
pub(crate) const STREAM_EVE: u64 = 2;
pub(crate) const STREAM_CHANNEL: u64 = 3;
pub(crate) const STREAM_NOISE: u64 = 4;
pub(crate) const STREAM_ALICE_ENV: u64 = 5;
pub(crate) const STREAM_BOB_ENV: u64 = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Hashing(#[from] HashingError),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Channel noise applied on the delivery leg of a SWAP transfer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    Noiseless,
    /// Binary symmetric channel: each bit flips independently with
    /// probability `p`.
    Bsc { p: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if let NoiseModel::Bsc { p } = self {
            if !(0.0..=0.5).contains(p) {
                return Err(ProtocolError::Config(format!(
                    "BSC flip probability must be in [0, 0.5], got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &mut BitString, rng: &mut SimRng) {
        if let NoiseModel::Bsc { p } = self {
            use rand::Rng;
            for i in 0..x.len() {
                if rng.gen_bool(*p) {
                    x.flip(i);
                }
            }
        }
    }
}

/// The events one agent observed during a completed run.
pub fn transcript_view(transcript: &Transcript, agent: AgentId) -> Vec<ViewEvent> {
    transcript.view(agent)
}
