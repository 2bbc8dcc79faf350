//! Simulation and verification toolkit for free-energy-bounded cryptography.
//!
//! Agents are operation sequences audited by per-agent energy ledgers: every
//! logically irreversible step (copying, broadcasting, erasing) consumes one
//! free-energy unit per bit, reversible steps are free, and the adversary's
//! total is capped at `2^nu` while honest parties stay within `O(nu)`. On
//! top of that accounting sit two channels (authenticated broadcast and a
//! reversible SWAP with an interception hook), a strongly 2-universal hash
//! family with exhaustive verification oracles, hash-based information
//! reconciliation, secret-key-establishment and 1-2 oblivious-transfer
//! protocol runners, and the counting experiments (memory games, reversible
//! permutation bounds) that check the model's limits numerically.

pub mod bits;
pub mod channel;
pub mod games;
pub mod hashing;
pub mod ledger;
pub mod protocol;
pub mod recon;
pub mod rng;

pub use bits::{BitError, BitString, SubsetIndex};
pub use ledger::{AgentBudget, AgentId, EnergyLedger, LedgerError};
