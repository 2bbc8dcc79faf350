//! The two communication resources: an authenticated public broadcast
//! channel for short messages and a reversible SWAP channel for
//! register-length transfers.
//!
//! Broadcasting duplicates information, so it charges the sender one unit
//! per bit and is capped at `O(nu)` length. A SWAP costs nothing, but the
//! sender's register is consumed by the transfer: what comes back is fresh
//! junk, and any bits the sender (or an interceptor) wants to keep must be
//! paid for through a ledger before the transfer returns.

use serde::Serialize;

use crate::bits::BitString;
use crate::ledger::{AgentId, EnergyLedger, LedgerError};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("broadcast of {len} bits exceeds public-channel cap of {cap} bits")]
    CapExceeded { len: usize, cap: usize },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// One logged channel event.
#[derive(Clone, Debug, Serialize)]
pub struct TranscriptEvent {
    pub index: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    Broadcast {
        sender: AgentId,
        payload: BitString,
    },
    SwapSend {
        sender: AgentId,
        receiver: AgentId,
        payload: BitString,
        /// Fresh random bits that replaced the sender's register.
        junk: BitString,
        intercepted: bool,
    },
    SwapDeliver {
        receiver: AgentId,
        payload: BitString,
        intercepted: bool,
    },
    Abort {
        agent: AgentId,
        reason: String,
    },
}

/// What an event looks like from one agent's side. Broadcasts and aborts are
/// visible to everyone; swap payloads only to the parties that touched them
/// (including an interceptor that saw the string in transit).
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ViewEvent {
    pub index: u64,
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<BitString>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub junk: Option<BitString>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Ordered log of all channel events in one run. Replaying a run with the
/// same seeds reproduces this log exactly.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    fn push(&mut self, kind: EventKind) {
        let index = self.events.len() as u64;
        self.events.push(TranscriptEvent { index, kind });
    }

    pub fn abort(&mut self, agent: AgentId, reason: impl Into<String>) {
        self.push(EventKind::Abort {
            agent,
            reason: reason.into(),
        });
    }

    /// All broadcast payloads, in order. Identical from every agent's
    /// viewpoint: the channel is authenticated.
    pub fn broadcasts(&self) -> Vec<&BitString> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Broadcast { payload, .. } => Some(payload),
                _ => None,
            })
            .collect()
    }

    /// Total bits broadcast by `sender` with event indices in
    /// `range` (used for leakage accounting).
    pub fn broadcast_bits_by(&self, sender: AgentId) -> usize {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Broadcast { sender: s, payload } if *s == sender => Some(payload.len()),
                _ => None,
            })
            .sum()
    }

    /// The events agent `who` observes, with the payloads it actually sees.
    pub fn view(&self, who: AgentId) -> Vec<ViewEvent> {
        let mut out = Vec::new();
        for e in &self.events {
            match &e.kind {
                EventKind::Broadcast { sender, payload } => out.push(ViewEvent {
                    index: e.index,
                    event: "broadcast".into(),
                    payload: Some(payload.clone()),
                    junk: None,
                    detail: Some(format!("from {sender}")),
                }),
                EventKind::SwapSend {
                    sender,
                    receiver,
                    payload,
                    junk,
                    intercepted,
                } => {
                    if *sender == who {
                        out.push(ViewEvent {
                            index: e.index,
                            event: "swap-send".into(),
                            payload: Some(payload.clone()),
                            junk: Some(junk.clone()),
                            detail: Some(format!("to {receiver}")),
                        });
                    } else if who == AgentId::Eve && *intercepted {
                        out.push(ViewEvent {
                            index: e.index,
                            event: "swap-send".into(),
                            payload: Some(payload.clone()),
                            junk: None,
                            detail: Some(format!("{sender} to {receiver}, intercepted")),
                        });
                    }
                }
                EventKind::SwapDeliver {
                    receiver,
                    payload,
                    intercepted,
                } => {
                    if *receiver == who {
                        out.push(ViewEvent {
                            index: e.index,
                            event: "swap-deliver".into(),
                            payload: Some(payload.clone()),
                            junk: None,
                            detail: None,
                        });
                    } else if who == AgentId::Eve && *intercepted {
                        out.push(ViewEvent {
                            index: e.index,
                            event: "swap-deliver".into(),
                            payload: Some(payload.clone()),
                            junk: None,
                            detail: Some(format!("delivered to {receiver}")),
                        });
                    }
                }
                EventKind::Abort { agent, reason } => out.push(ViewEvent {
                    index: e.index,
                    event: "abort".into(),
                    payload: None,
                    junk: None,
                    detail: Some(format!("{agent}: {reason}")),
                }),
            }
        }
        out
    }

    /// JSON lines, one event per line; bit payloads as hex plus length.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

/// Authenticated public broadcast channel capped at `cap_bits` per message.
#[derive(Clone, Debug)]
pub struct PublicChannel {
    pub cap_bits: usize,
}

impl PublicChannel {
    pub fn new(cap_bits: usize) -> Self {
        PublicChannel { cap_bits }
    }

    /// Broadcasts `msg`, charging the sender `msg.len()` units: broadcasting
    /// inevitably duplicates the message's information content.
    pub fn broadcast(
        &self,
        transcript: &mut Transcript,
        ledger: &mut EnergyLedger,
        sender: AgentId,
        msg: BitString,
    ) -> Result<(), ChannelError> {
        if msg.len() > self.cap_bits {
            return Err(ChannelError::CapExceeded {
                len: msg.len(),
                cap: self.cap_bits,
            });
        }
        ledger.charge(msg.len() as u64, "broadcast")?;
        transcript.push(EventKind::Broadcast {
            sender,
            payload: msg,
        });
        Ok(())
    }
}

/// What an interceptor does with a string in transit. Any bits it keeps
/// beyond returning must already have been stored through its
/// ledger-charging memory.
pub enum InterceptAction {
    /// Deliver the original string unmodified.
    Forward,
    /// Deliver a substitute of equal length.
    Substitute(BitString),
    /// Deliver nothing; the receiver observes no receipt.
    Block,
}

/// Adversary hook on the SWAP channel.
pub trait Interceptor {
    fn intercept(&mut self, payload: &BitString) -> InterceptAction;
}

/// Result of a SWAP transfer, from the run loop's perspective.
pub struct SwapOutcome {
    /// Fresh random bits now occupying the sender's register.
    pub junk: BitString,
    /// The string the receiver obtained, or `None` if blocked / failed.
    pub delivered: Option<BitString>,
}

/// Reversible SWAP transfer. Charges nothing; the sender's register is
/// consumed (ownership of `x` moves into the channel) and replaced by junk.
pub fn swap_transfer(
    transcript: &mut Transcript,
    junk_rng: &mut SimRng,
    sender: AgentId,
    receiver: AgentId,
    x: BitString,
    mut interceptor: Option<&mut dyn Interceptor>,
) -> SwapOutcome {
    let junk = BitString::random(x.len(), junk_rng);
    let intercepted = interceptor.is_some();
    let action = match interceptor.as_deref_mut() {
        None => InterceptAction::Forward,
        Some(i) => i.intercept(&x),
    };
    transcript.push(EventKind::SwapSend {
        sender,
        receiver,
        payload: x.clone(),
        junk: junk.clone(),
        intercepted,
    });
    let delivered = match action {
        InterceptAction::Forward => Some(x),
        InterceptAction::Substitute(sub) => {
            if sub.len() == x.len() {
                Some(sub)
            } else {
                // wrong-length substitution models a channel failure
                transcript.abort(receiver, "swap delivered wrong length");
                None
            }
        }
        InterceptAction::Block => None,
    };
    if let Some(payload) = &delivered {
        transcript.push(EventKind::SwapDeliver {
            receiver,
            payload: payload.clone(),
            intercepted,
        });
    }
    SwapOutcome { junk, delivered }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn broadcast_within_cap_charges_length() {
        let cap = 64 * 16;
        let ch = PublicChannel::new(cap);
        let mut tr = Transcript::new();
        let mut ledger = EnergyLedger::new(AgentId::Alice, 10_000);
        let msg = BitString::random(100, &mut stream_rng(1, 0));
        ch.broadcast(&mut tr, &mut ledger, AgentId::Alice, msg).unwrap();
        assert_eq!(ledger.consumed(), 100);
        assert_eq!(tr.broadcasts().len(), 1);
    }

    #[test]
    fn broadcast_over_cap_rejected() {
        let ch = PublicChannel::new(64);
        let mut tr = Transcript::new();
        let mut ledger = EnergyLedger::new(AgentId::Alice, 10_000);
        let msg = BitString::zeros(65);
        let err = ch
            .broadcast(&mut tr, &mut ledger, AgentId::Alice, msg)
            .unwrap_err();
        assert_eq!(err, ChannelError::CapExceeded { len: 65, cap: 64 });
        // nothing charged, nothing logged
        assert_eq!(ledger.consumed(), 0);
        assert!(tr.events.is_empty());
    }

    #[test]
    fn swap_without_interceptor_is_identity() {
        let mut tr = Transcript::new();
        let mut junk_rng = stream_rng(9, 1);
        let x = BitString::random(256, &mut stream_rng(9, 0));
        let out = swap_transfer(
            &mut tr,
            &mut junk_rng,
            AgentId::Alice,
            AgentId::Bob,
            x.clone(),
            None,
        );
        assert_eq!(out.delivered.as_ref(), Some(&x));
        assert_eq!(out.junk.len(), x.len());
        assert_eq!(tr.events.len(), 2);
    }

    struct Blocker;
    impl Interceptor for Blocker {
        fn intercept(&mut self, _payload: &BitString) -> InterceptAction {
            InterceptAction::Block
        }
    }

    #[test]
    fn blocked_swap_delivers_nothing() {
        let mut tr = Transcript::new();
        let mut junk_rng = stream_rng(9, 1);
        let x = BitString::random(64, &mut stream_rng(9, 0));
        let mut blocker = Blocker;
        let out = swap_transfer(
            &mut tr,
            &mut junk_rng,
            AgentId::Alice,
            AgentId::Bob,
            x,
            Some(&mut blocker),
        );
        assert!(out.delivered.is_none());
    }

    struct WrongLength;
    impl Interceptor for WrongLength {
        fn intercept(&mut self, payload: &BitString) -> InterceptAction {
            InterceptAction::Substitute(BitString::zeros(payload.len() + 1))
        }
    }

    #[test]
    fn wrong_length_substitution_aborts() {
        let mut tr = Transcript::new();
        let mut junk_rng = stream_rng(9, 1);
        let x = BitString::random(64, &mut stream_rng(9, 0));
        let mut bad = WrongLength;
        let out = swap_transfer(
            &mut tr,
            &mut junk_rng,
            AgentId::Alice,
            AgentId::Bob,
            x,
            Some(&mut bad),
        );
        assert!(out.delivered.is_none());
        assert!(matches!(
            tr.events.iter().map(|e| &e.kind).find(|k| matches!(k, EventKind::Abort { .. })),
            Some(EventKind::Abort { .. })
        ));
    }

    #[test]
    fn sender_cannot_predict_sent_string_from_junk() {
        // After a SWAP without a prior copy, the sender's register holds
        // junk uncorrelated with the sent string: guessing each first bit
        // from the junk's first bit succeeds at 0.5 within 3 sigma.
        let runs = 10_000usize;
        let mut env = stream_rng(31, 0);
        let mut junk_rng = stream_rng(31, 1);
        let mut hits = 0usize;
        for _ in 0..runs {
            let mut tr = Transcript::new();
            let x = BitString::random(32, &mut env);
            let first = x.get(0);
            let out = swap_transfer(&mut tr, &mut junk_rng, AgentId::Alice, AgentId::Bob, x, None);
            if out.junk.get(0) == first {
                hits += 1;
            }
        }
        let freq = hits as f64 / runs as f64;
        let sigma = 0.5 / (runs as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn public_transcript_identical_across_agents() {
        let ch = PublicChannel::new(1024);
        let mut tr = Transcript::new();
        let mut ledger = EnergyLedger::new(AgentId::Alice, 10_000);
        for i in 0..3 {
            let msg = BitString::random(16 + i, &mut stream_rng(5, i as u64));
            ch.broadcast(&mut tr, &mut ledger, AgentId::Alice, msg).unwrap();
        }
        let views: Vec<_> = [AgentId::Alice, AgentId::Bob, AgentId::Eve]
            .iter()
            .map(|&a| {
                tr.view(a)
                    .into_iter()
                    .filter(|v| v.event == "broadcast")
                    .collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(views[0], views[1]);
        assert_eq!(views[1], views[2]);
    }

    #[test]
    fn jsonl_one_event_per_line() {
        let mut tr = Transcript::new();
        tr.abort(AgentId::Bob, "no receipt");
        let ch = PublicChannel::new(64);
        let mut ledger = EnergyLedger::new(AgentId::Alice, 100);
        ch.broadcast(&mut tr, &mut ledger, AgentId::Alice, BitString::from_bit_str("101"))
            .unwrap();
        let jsonl = tr.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("abort"));
        assert!(lines[1].contains(r#""hex":"a""#));
    }
}
