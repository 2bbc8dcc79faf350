//! Free-energy accounting.
//!
//! One unit is one bit-erasure (the convention `k_B T ln 2 := 1`); a blank
//! memory cell is the single free-energy currency. Copying n bits and
//! erasing n random bits both consume n units. Logically reversible
//! operations (see [`free_ops_registry`]) consume nothing; everything else
//! must be charged through a ledger before it takes effect.

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SubsetIndex};

/// The parties appearing in protocols and games.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentId {
    Alice,
    Bob,
    Eve,
    Verifier,
    Adversary,
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AgentId::Alice => "alice",
            AgentId::Bob => "bob",
            AgentId::Eve => "eve",
            AgentId::Verifier => "verifier",
            AgentId::Adversary => "adversary",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error(
        "budget exceeded for {agent}: bound {bound}, consumed {consumed}, attempted +{attempted} ({reason})"
    )]
    BudgetExceeded {
        agent: AgentId,
        bound: u64,
        consumed: u64,
        attempted: u64,
        reason: String,
    },
}

/// One audited charge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub reason: String,
    pub amount: u64,
    pub running_total: u64,
}

/// Per-agent free-energy budget tracker.
///
/// `consumed <= bound` is enforced on every charge; both counters are
/// monotone within a run. The audit log reconstructs `consumed` exactly.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyLedger {
    agent: AgentId,
    bound: u64,
    consumed: u64,
    pow_produced: u64,
    audit: Vec<AuditEntry>,
}

impl EnergyLedger {
    pub fn new(agent: AgentId, bound: u64) -> Self {
        EnergyLedger {
            agent,
            bound,
            consumed: 0,
            pow_produced: 0,
            audit: Vec::new(),
        }
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.bound - self.consumed
    }

    pub fn pow_produced(&self) -> u64 {
        self.pow_produced
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Consumes `amount` units if the bound allows it. On failure nothing is
    /// recorded; an adversary strategy treats the error as "pick something
    /// smaller", honest code treats it as a bug.
    pub fn charge(&mut self, amount: u64, reason: impl Into<String>) -> Result<(), LedgerError> {
        let reason = reason.into();
        if self.consumed + amount > self.bound {
            return Err(LedgerError::BudgetExceeded {
                agent: self.agent,
                bound: self.bound,
                consumed: self.consumed,
                attempted: amount,
                reason,
            });
        }
        self.consumed += amount;
        self.audit.push(AuditEntry {
            reason,
            amount,
            running_total: self.consumed,
        });
        Ok(())
    }

    /// Copying consumes one blank cell per copied bit.
    pub fn charge_copy(&mut self, n_bits: u64, what: &str) -> Result<(), LedgerError> {
        self.charge(n_bits, format!("copy:{what}"))
    }

    /// Records `n_zeros` cells of proof-of-work produced at the head of an
    /// initially random memory region.
    pub fn record_pow(&mut self, n_zeros: u64) {
        self.pow_produced += n_zeros;
    }

    /// Ordered audit log as JSON.
    pub fn audit_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.audit).expect("audit serializes")
    }
}

/// Operations that are logically reversible and therefore free. Everything
/// not listed here must be paid for through [`EnergyLedger::charge`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreeOp {
    /// XOR of one register into another, in place.
    XorInPlace,
    /// Exchange of two equal-length registers.
    Swap,
    /// Any permutation of cells.
    Permute,
    /// CNOT of a register onto a fresh random pad; the pad bits are consumed
    /// as randomness, not energy.
    CnotToFreshRandomPad,
}

impl FreeOp {
    pub fn label(&self) -> &'static str {
        match self {
            FreeOp::XorInPlace => "xor-in-place",
            FreeOp::Swap => "swap",
            FreeOp::Permute => "permute",
            FreeOp::CnotToFreshRandomPad => "cnot-to-fresh-random-pad-target",
        }
    }
}

pub const FREE_OPS: [FreeOp; 4] = [
    FreeOp::XorInPlace,
    FreeOp::Swap,
    FreeOp::Permute,
    FreeOp::CnotToFreshRandomPad,
];

/// The exact set of zero-cost operation labels.
pub fn free_ops_registry() -> &'static [FreeOp] {
    &FREE_OPS
}

pub fn is_free_op(label: &str) -> bool {
    FREE_OPS.iter().any(|op| op.label() == label)
}

/// Which bound formula an agent runs under.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundFormula {
    /// `coefficient * nu`, for honest players.
    Linear { coefficient: u64 },
    /// Exactly `2^nu`, for the adversary.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Honest,
    Adversary,
}

/// Pairing of a role with its budget rule. Honest agents get linear bounds,
/// the adversary gets exactly `2^nu`; the constructors enforce this.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AgentBudget {
    pub role: Role,
    pub nu: u32,
    pub bound_formula: BoundFormula,
}

impl AgentBudget {
    pub fn honest(nu: u32, coefficient: u64) -> Self {
        AgentBudget {
            role: Role::Honest,
            nu,
            bound_formula: BoundFormula::Linear { coefficient },
        }
    }

    pub fn adversary(nu: u32) -> Self {
        AgentBudget {
            role: Role::Adversary,
            nu,
            bound_formula: BoundFormula::Exponential,
        }
    }

    pub fn bound(&self) -> u64 {
        match self.bound_formula {
            BoundFormula::Linear { coefficient } => coefficient * self.nu as u64,
            BoundFormula::Exponential => 1u64 << self.nu,
        }
    }

    pub fn ledger(&self, agent: AgentId) -> EnergyLedger {
        EnergyLedger::new(agent, self.bound())
    }
}

/// Adversary storage whose only mutator charges the ledger, making the
/// free-energy bound structural: bits that were never paid for cannot be
/// recalled later.
#[derive(Clone, Debug)]
pub struct AdversaryMemory {
    ledger: EnergyLedger,
    segments: Vec<StoredSegment>,
}

#[derive(Clone, Debug)]
pub struct StoredSegment {
    pub label: String,
    /// Host-string positions the bits came from, when positional recall is
    /// wanted. Position lists derived deterministically from the strategy's
    /// own seed are re-derivable and carry no storage charge; only the bit
    /// values are paid for.
    pub positions: Option<SubsetIndex>,
    pub bits: BitString,
}

impl AdversaryMemory {
    pub fn new(ledger: EnergyLedger) -> Self {
        AdversaryMemory {
            ledger,
            segments: Vec::new(),
        }
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut EnergyLedger {
        &mut self.ledger
    }

    pub fn segments(&self) -> &[StoredSegment] {
        &self.segments
    }

    pub fn stored_bits(&self) -> u64 {
        self.segments.iter().map(|s| s.bits.len() as u64).sum()
    }

    /// Stores a labelled segment, charging one unit per bit first.
    pub fn store(
        &mut self,
        label: impl Into<String>,
        positions: Option<SubsetIndex>,
        bits: BitString,
    ) -> Result<(), LedgerError> {
        let label = label.into();
        if let Some(p) = &positions {
            assert_eq!(p.len(), bits.len(), "positions/bits length mismatch");
        }
        self.ledger.charge_copy(bits.len() as u64, &label)?;
        self.segments.push(StoredSegment {
            label,
            positions,
            bits,
        });
        Ok(())
    }

    /// Recalls a stored bit by host-string position, if any segment holds it.
    pub fn recall(&self, position: usize) -> Option<bool> {
        for seg in &self.segments {
            if let Some(pos) = &seg.positions {
                if let Ok(i) = pos.positions().binary_search(&position) {
                    return Some(seg.bits.get(i));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charge_at_boundary() {
        let mut ledger = EnergyLedger::new(AgentId::Alice, 10);
        ledger.charge(10, "fill").unwrap();
        assert_eq!(ledger.consumed(), 10);
        let err = ledger.charge(1, "overflow").unwrap_err();
        assert!(matches!(err, LedgerError::BudgetExceeded { consumed: 10, .. }));
        // failed charge records nothing
        assert_eq!(ledger.consumed(), 10);
        assert_eq!(ledger.audit().len(), 1);
    }

    #[test]
    fn copy_charges_per_bit() {
        let mut ledger = EnergyLedger::new(AgentId::Alice, 100);
        ledger.charge_copy(0, "nothing").unwrap();
        assert_eq!(ledger.consumed(), 0);
        ledger.charge_copy(42, "rawkey").unwrap();
        assert_eq!(ledger.consumed(), 42);
    }

    #[test]
    fn adversary_cannot_copy_whole_register() {
        // bound 2^nu, register k*2^nu with k >= 2
        let nu = 10;
        let budget = AgentBudget::adversary(nu);
        let mut ledger = budget.ledger(AgentId::Eve);
        let register_len = 4u64 << nu;
        assert!(ledger.charge_copy(register_len, "whole register").is_err());
        // but the exact bound fits
        ledger.charge_copy(1 << nu, "quarter").unwrap();
    }

    #[test]
    fn record_pow_accumulates() {
        let mut ledger = EnergyLedger::new(AgentId::Adversary, 5);
        ledger.record_pow(0);
        assert_eq!(ledger.pow_produced(), 0);
        ledger.record_pow(7);
        ledger.record_pow(3);
        assert_eq!(ledger.pow_produced(), 10);
    }

    #[test]
    fn registry_contents() {
        let labels: Vec<&str> = free_ops_registry().iter().map(|o| o.label()).collect();
        assert_eq!(
            labels,
            vec![
                "xor-in-place",
                "swap",
                "permute",
                "cnot-to-fresh-random-pad-target"
            ]
        );
        assert!(is_free_op("xor-in-place"));
        assert!(!is_free_op("bit-erasure"));
        assert!(!is_free_op("copy"));
    }

    #[test]
    fn audit_reconstructs_consumed() {
        let mut ledger = EnergyLedger::new(AgentId::Bob, 1000);
        for (i, amount) in [3u64, 0, 17, 5, 100].iter().enumerate() {
            ledger.charge(*amount, format!("step {i}")).unwrap();
        }
        let total: u64 = ledger.audit().iter().map(|e| e.amount).sum();
        assert_eq!(total, ledger.consumed());
        assert_eq!(ledger.audit().last().unwrap().running_total, ledger.consumed());
    }

    #[test]
    fn budget_formulas() {
        assert_eq!(AgentBudget::honest(16, 3).bound(), 48);
        assert_eq!(AgentBudget::adversary(16).bound(), 65536);
        assert_eq!(AgentBudget::adversary(16).role, Role::Adversary);
    }

    #[test]
    fn memory_store_is_charged_and_recallable() {
        let mut mem = AdversaryMemory::new(EnergyLedger::new(AgentId::Eve, 4));
        let positions = SubsetIndex::new(vec![2, 5, 7], 10).unwrap();
        let bits = BitString::from_bit_str("101");
        mem.store("stash", Some(positions), bits).unwrap();
        assert_eq!(mem.ledger().consumed(), 3);
        assert_eq!(mem.recall(2), Some(true));
        assert_eq!(mem.recall(5), Some(false));
        assert_eq!(mem.recall(3), None);
        // second store would exceed the bound of 4
        let more = BitString::from_bit_str("11");
        assert!(mem.store("more", None, more).is_err());
        assert_eq!(mem.stored_bits(), 3);
    }
}
