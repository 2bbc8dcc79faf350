//! Reference eavesdropper strategies for the SWAP interception hook.
//!
//! A strategy sees the full string in transit but keeps only what it pays
//! for: its persistent state is built exclusively through the
//! ledger-charging [`AdversaryMemory`]. A strategy that over-asks gets a
//! `BudgetExceeded` and must settle for what fits ("picking parsimoniously
//! what to copy"); the failed attempt is counted, not fatal.

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SubsetIndex};
use crate::channel::{InterceptAction, Interceptor};
use crate::ledger::{AdversaryMemory, AgentId, EnergyLedger};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveStrategy {
    /// Swallow the transfer; the receiver observes no receipt.
    Block,
    /// Pass the string through untouched, keep nothing.
    Forward,
    /// Copy `bits` uniformly chosen positions, then forward.
    StoreFraction { bits: u64 },
    /// Deliver a fresh random string; try to keep the original in full,
    /// which must fail the budget check, then keep the prefix that fits.
    Substitute,
}

impl EveStrategy {
    pub fn label(&self) -> String {
        match self {
            EveStrategy::Block => "block".into(),
            EveStrategy::Forward => "forward".into(),
            EveStrategy::StoreFraction { bits } => format!("store-fraction:{bits}"),
            EveStrategy::Substitute => "substitute".into(),
        }
    }
}

pub struct EveInterceptor {
    pub strategy: EveStrategy,
    pub memory: AdversaryMemory,
    pub rng: SimRng,
    pub budget_exceeded_events: u64,
}

impl EveInterceptor {
    /// Eve is exactly `2^nu`-bounded.
    pub fn new(strategy: EveStrategy, nu: u32, rng: SimRng) -> Self {
        EveInterceptor {
            strategy,
            memory: AdversaryMemory::new(EnergyLedger::new(AgentId::Eve, 1u64 << nu)),
            rng,
            budget_exceeded_events: 0,
        }
    }
}

impl Interceptor for EveInterceptor {
    fn intercept(&mut self, payload: &BitString) -> InterceptAction {
        let len = payload.len();
        match self.strategy {
            EveStrategy::Block => InterceptAction::Block,
            EveStrategy::Forward => InterceptAction::Forward,
            EveStrategy::StoreFraction { bits } => {
                let want = (bits as usize).min(len);
                let affordable = (self.memory.ledger().remaining() as usize).min(want);
                if affordable < want {
                    // exercise the budget check with the full request first
                    let positions =
                        SubsetIndex::sample(len, want, &mut self.rng).expect("want <= len");
                    let values = payload.extract(&positions).expect("positions over payload");
                    let err = self.memory.store("intercepted fraction", Some(positions), values);
                    debug_assert!(err.is_err());
                    self.budget_exceeded_events += 1;
                }
                // positions come from Eve's own seed, so they are
                // re-derivable and only the values are charged
                let positions =
                    SubsetIndex::sample(len, affordable, &mut self.rng).expect("affordable <= len");
                let values = payload.extract(&positions).expect("positions over payload");
                self.memory
                    .store("intercepted fraction", Some(positions), values)
                    .expect("fits remaining budget");
                InterceptAction::Forward
            }
            EveStrategy::Substitute => {
                // full retention must exceed the 2^nu budget for k >= 2
                let full = SubsetIndex::full(len);
                let values = payload.clone();
                if self
                    .memory
                    .store("original register", Some(full), values)
                    .is_err()
                {
                    self.budget_exceeded_events += 1;
                    let keep = self.memory.ledger().remaining() as usize;
                    let positions = SubsetIndex::new((0..keep).collect(), len)
                        .expect("prefix positions valid");
                    let values = payload.extract(&positions).expect("prefix over payload");
                    self.memory
                        .store("original prefix", Some(positions), values)
                        .expect("fits remaining budget");
                }
                InterceptAction::Substitute(BitString::random(len, &mut self.rng))
            }
        }
    }
}
