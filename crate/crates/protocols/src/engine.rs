use std::fmt;
use std::str::FromStr;

use depthlab_core::{KernelSystem, ProcessId, QuorumSystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bca::BcaEngine;
use crate::coin::CoinEngine;
use crate::consensus::ConsensusEngine;
use crate::dealer::CoinTable;
use crate::message::Message;
use crate::rb::RbEngine;
use crate::value::{Bit, Payload, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Rb3,
    /// Reliable broadcast with both READYAFTERREADY clauses removed: a process
    /// delivers on its first quorum of READYAFTERECHO messages.
    RbPremature,
    Cc,
    Bca,
    Consensus,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Rb3 => "rb3",
            ProtocolKind::RbPremature => "rb_premature",
            ProtocolKind::Cc => "cc",
            ProtocolKind::Bca => "bca",
            ProtocolKind::Consensus => "consensus",
        }
    }

    pub fn is_rb(self) -> bool {
        matches!(self, ProtocolKind::Rb3 | ProtocolKind::RbPremature)
    }

    pub fn needs_dealer(self) -> bool {
        matches!(self, ProtocolKind::Cc | ProtocolKind::Consensus)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ProtocolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rb3" => ProtocolKind::Rb3,
            "rb_premature" => ProtocolKind::RbPremature,
            "cc" => ProtocolKind::Cc,
            "bca" => ProtocolKind::Bca,
            "consensus" => ProtocolKind::Consensus,
            other => return Err(ProtocolError::UnknownKind(other.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Highest READYAFTERECHO round; `None` means n.
    pub rb_max_round: Option<u32>,
    /// Highest BCA echo counter c.
    pub bca_max_counter: u32,
    /// Consensus rounds (and dealt coins).
    pub max_rounds: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { rb_max_round: None, bca_max_counter: 8, max_rounds: 10 }
    }
}

/// Deliberate bugs used to check that the property checkers notice them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mutations {
    /// Never turn a READYAFTERREADY quorum into the next READYAFTERECHO round.
    pub skip_rb_amplification: bool,
    /// Drop the single-ECHO3 guard; each distinct ECHO3 payload is sent once.
    pub bca_echo3_multi_send: bool,
    /// Ignore REVIVE2 quorums.
    pub skip_revive2: bool,
}

impl Mutations {
    pub fn any(&self) -> bool {
        self.skip_rb_amplification || self.bca_echo3_multi_send || self.skip_revive2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("unknown protocol kind {0:?} (expected rb3, rb_premature, cc, bca or consensus)")]
    UnknownKind(String),
    #[error("{0} needs a designated sender")]
    MissingSender(ProtocolKind),
    #[error("{0} needs a dealer coin table")]
    MissingDealer(ProtocolKind),
    #[error("sender {0} is not a process of the system")]
    BadSender(ProcessId),
}

/// Everything engines share: the trust structure, configuration and dealer.
#[derive(Clone, Debug)]
pub struct Context {
    pub kind: ProtocolKind,
    pub quorums: QuorumSystem,
    pub kernels: KernelSystem,
    pub config: ProtocolConfig,
    pub mutations: Mutations,
    pub sender: Option<ProcessId>,
    pub dealer: Option<CoinTable>,
}

impl Context {
    pub fn n(&self) -> usize {
        self.quorums.n()
    }

    pub fn rb_max_round(&self) -> u32 {
        self.config.rb_max_round.unwrap_or(self.n() as u32)
    }

    pub fn dealer(&self) -> &CoinTable {
        self.dealer.as_ref().expect("context built without a dealer")
    }
}

/// Local invocations and message receipts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Input {
    Broadcast(Payload),
    Release(u32),
    Propose(Bit),
    Receive { from: ProcessId, msg: Message },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    Propose,
    Finish,
    Revive,
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Via::Propose => "propose",
            Via::Finish => "finish",
            Via::Revive => "revive",
        })
    }
}

/// Protocol-level events reported to the environment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    Deliver {
        m: Payload,
    },
    Release {
        round: u32,
    },
    Coin {
        round: u32,
        c: Bit,
    },
    BcaPropose {
        round: u32,
        v: Bit,
    },
    BcaDecide {
        round: u32,
        v: Value,
    },
    /// `continue[round]` was set with `v[round] = v`.
    Enter {
        round: u32,
        v: Bit,
        via: Via,
    },
    Decide {
        round: u32,
        v: Bit,
    },
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Deliver { m } => write!(f, "DELIVER(m={m})"),
            Output::Release { round } => write!(f, "RELEASE[round={round}]"),
            Output::Coin { round, c } => write!(f, "COIN[round={round}](c={c})"),
            Output::BcaPropose { round, v } => write!(f, "BCA_PROPOSE[round={round}](v={v})"),
            Output::BcaDecide { round, v } => write!(f, "BCA_DECIDE[round={round}](v={v})"),
            Output::Enter { round, v, via } => write!(f, "ENTER[round={round}](v={v},via={via})"),
            Output::Decide { round, v } => write!(f, "DECIDE[round={round}](v={v})"),
        }
    }
}

/// What one step produced. Every message goes to all processes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effects {
    pub messages: Vec<Message>,
    pub outputs: Vec<Output>,
    /// Reasons for ignoring the input, if it was ignored as malformed.
    pub notes: Vec<String>,
}

impl Effects {
    pub fn send(&mut self, msg: Message) {
        self.messages.push(msg);
    }

    pub fn output(&mut self, out: Output) {
        self.outputs.push(out);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty() && self.outputs.is_empty() && self.notes.is_empty()
    }
}

/// One process's protocol state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Rb(RbEngine),
    Coin(CoinEngine),
    Bca(BcaEngine),
    Consensus(ConsensusEngine),
}

impl Engine {
    pub fn new(ctx: &Context, me: ProcessId) -> Engine {
        match ctx.kind {
            ProtocolKind::Rb3 | ProtocolKind::RbPremature => Engine::Rb(RbEngine::new(me)),
            ProtocolKind::Cc => Engine::Coin(CoinEngine::new(me)),
            ProtocolKind::Bca => Engine::Bca(BcaEngine::new(me, 1)),
            ProtocolKind::Consensus => Engine::Consensus(ConsensusEngine::new(me)),
        }
    }

    pub fn me(&self) -> ProcessId {
        match self {
            Engine::Rb(e) => e.me(),
            Engine::Coin(e) => e.me(),
            Engine::Bca(e) => e.me(),
            Engine::Consensus(e) => e.me(),
        }
    }

    /// See [`BcaEngine::receipt_commutes`]. Always false for protocols
    /// without such an analysis and whenever a mutation is active.
    pub fn receipt_commutes(&self, ctx: &Context, msg: &Message, one_value: bool) -> bool {
        match self {
            Engine::Bca(e) => ctx.mutations == Mutations::default() && e.receipt_commutes(ctx, msg, one_value),
            _ => false,
        }
    }

    /// Applies one input. Identical (state, input, context) always gives
    /// identical results.
    pub fn step(&mut self, ctx: &Context, input: Input) -> Effects {
        let mut fx = Effects::default();
        match (self, input) {
            (Engine::Rb(e), Input::Broadcast(m)) => e.broadcast(ctx, m, &mut fx),
            (Engine::Rb(e), Input::Receive { from, msg }) => e.receive(ctx, from, msg, &mut fx),
            (Engine::Coin(e), Input::Release(r)) => e.release(ctx, r, &mut fx),
            (Engine::Coin(e), Input::Receive { from, msg }) => e.receive(ctx, from, msg, &mut fx),
            (Engine::Bca(e), Input::Propose(v)) => e.propose(ctx, v, &mut fx),
            (Engine::Bca(e), Input::Receive { from, msg }) => e.receive(ctx, from, msg, &mut fx),
            (Engine::Consensus(e), Input::Propose(v)) => e.propose(ctx, v, &mut fx),
            (Engine::Consensus(e), Input::Receive { from, msg }) => e.receive(ctx, from, msg, &mut fx),
            (_, input) => fx.note(format!("input {input:?} does not apply to this protocol")),
        }
        fx
    }
}

/// Inputs to `protocol_factory` beyond the quorum system.
#[derive(Clone, Debug, Default)]
pub struct FactoryParams {
    pub sender: Option<ProcessId>,
    pub dealer: Option<CoinTable>,
    pub config: ProtocolConfig,
    pub mutations: Mutations,
}

/// Builds the shared context and one engine per process.
pub fn protocol_factory(
    kind: ProtocolKind,
    quorums: &QuorumSystem,
    params: FactoryParams,
) -> Result<(Context, Vec<Engine>), ProtocolError> {
    if kind.is_rb() {
        let s = params.sender.ok_or(ProtocolError::MissingSender(kind))?;
        if s.index() >= quorums.n() {
            return Err(ProtocolError::BadSender(s));
        }
    }
    if kind.needs_dealer() && params.dealer.is_none() {
        return Err(ProtocolError::MissingDealer(kind));
    }
    let ctx = Context {
        kind,
        quorums: quorums.clone(),
        kernels: KernelSystem::from_quorums(quorums),
        config: params.config,
        mutations: params.mutations,
        sender: params.sender,
        dealer: params.dealer,
    };
    let engines = quorums.processes().map(|p| Engine::new(&ctx, p)).collect();
    Ok((ctx, engines))
}
