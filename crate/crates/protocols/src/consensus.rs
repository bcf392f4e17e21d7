//! Asymmetric randomized binary consensus with round revival.
//!
//! Each round runs one crusader agreement and one coin; rounds may overlap
//! inside a process. A decided process keeps taking part in later rounds up
//! to `max_rounds`.

use std::collections::{BTreeMap, BTreeSet};

use depthlab_core::{ProcessId, ProcessSet};

use crate::bca::BcaEngine;
use crate::coin::CoinEngine;
use crate::engine::{Context, Effects, Output, Via};
use crate::message::Message;
use crate::value::{Bit, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConsensusEngine {
    me: ProcessId,
    proposed: bool,
    v: BTreeMap<u32, Value>,
    cont: BTreeSet<u32>,
    bca: BTreeMap<u32, BcaEngine>,
    coin: CoinEngine,
    decided: Option<(u32, Bit)>,
    revive1: BTreeMap<(u32, Bit), ProcessSet>,
    revive2: BTreeMap<(u32, Bit), ProcessSet>,
    sent_revive2: BTreeSet<(u32, Bit)>,
    revived: BTreeSet<(u32, Bit)>,
}

impl ConsensusEngine {
    pub fn new(me: ProcessId) -> Self {
        ConsensusEngine {
            me,
            proposed: false,
            v: BTreeMap::new(),
            cont: BTreeSet::new(),
            bca: BTreeMap::new(),
            coin: CoinEngine::new(me),
            decided: None,
            revive1: BTreeMap::new(),
            revive2: BTreeMap::new(),
            sent_revive2: BTreeSet::new(),
            revived: BTreeSet::new(),
        }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    /// (round, value) of the decision, if any.
    pub fn decided(&self) -> Option<(u32, Bit)> {
        self.decided
    }

    pub fn propose(&mut self, ctx: &Context, v: Bit, fx: &mut Effects) {
        if self.proposed {
            return;
        }
        self.proposed = true;
        self.set_continue(1, v, Via::Propose, fx);
        self.run(ctx, fx);
    }

    pub fn receive(&mut self, ctx: &Context, from: ProcessId, msg: Message, fx: &mut Effects) {
        let max = ctx.config.max_rounds;
        match msg {
            Message::BcaEcho { round, .. }
            | Message::BcaEchoPrime { round, .. }
            | Message::BcaEcho2 { round, .. }
            | Message::BcaEcho3 { round, .. } => {
                if round > max {
                    fx.note(format!("round {round} above {max}"));
                    return;
                }
                let me = self.me;
                let mut sub = Effects::default();
                self.bca.entry(round).or_insert_with(|| BcaEngine::new(me, round)).receive(ctx, from, msg, &mut sub);
                self.absorb(ctx, sub, fx);
            }
            Message::Share { .. } => {
                let mut sub = Effects::default();
                self.coin.receive(ctx, from, msg, &mut sub);
                self.absorb(ctx, sub, fx);
            }
            Message::Revive1 { round, v } => {
                if round > max + 1 {
                    fx.note(format!("round {round} above {}", max + 1));
                    return;
                }
                let set = self.revive1.entry((round, v)).or_default();
                set.insert(from);
                if !self.sent_revive2.contains(&(round, v)) && ctx.kernels.has_kernel(self.me, *set) {
                    self.sent_revive2.insert((round, v));
                    fx.send(Message::Revive2 { round, v });
                }
            }
            Message::Revive2 { round, v } => {
                if round > max + 1 {
                    fx.note(format!("round {round} above {}", max + 1));
                    return;
                }
                let set = self.revive2.entry((round, v)).or_default();
                set.insert(from);
                if !ctx.mutations.skip_revive2
                    && !self.revived.contains(&(round, v))
                    && ctx.quorums.has_quorum(self.me, *set)
                {
                    self.revived.insert((round, v));
                    self.set_continue(round, v, Via::Revive, fx);
                }
            }
            other => {
                fx.note(format!("{} is not a consensus message", other.kind()));
                return;
            }
        }
        self.run(ctx, fx);
    }

    fn set_continue(&mut self, round: u32, v: Bit, via: Via, fx: &mut Effects) {
        self.v.insert(round, Value::Bit(v));
        self.cont.insert(round);
        fx.output(Output::Enter { round, v, via });
    }

    /// Consumes every pending `continue[round]` flag.
    fn run(&mut self, ctx: &Context, fx: &mut Effects) {
        while let Some(round) = self.cont.pop_first() {
            if round > ctx.config.max_rounds {
                continue;
            }
            let v = self.v[&round].bit().expect("continue is only set with a binary value");
            let me = self.me;
            let mut sub = Effects::default();
            self.bca.entry(round).or_insert_with(|| BcaEngine::new(me, round)).propose(ctx, v, &mut sub);
            self.absorb(ctx, sub, fx);
        }
    }

    fn absorb(&mut self, ctx: &Context, sub: Effects, fx: &mut Effects) {
        fx.messages.extend(sub.messages);
        fx.notes.extend(sub.notes);
        for out in sub.outputs {
            fx.output(out.clone());
            match out {
                Output::BcaDecide { round, v } => {
                    self.v.insert(round + 1, v);
                    let mut coin = Effects::default();
                    self.coin.release(ctx, round, &mut coin);
                    self.absorb(ctx, coin, fx);
                }
                Output::Coin { round, c } => self.finish_round(round, c, fx),
                _ => {}
            }
        }
    }

    fn finish_round(&mut self, round: u32, c: Bit, fx: &mut Effects) {
        let next = round + 1;
        match self.v.get(&next) {
            Some(Value::Bit(b)) => {
                if *b == c && self.decided.is_none() {
                    self.decided = Some((round, c));
                    fx.output(Output::Decide { round, v: c });
                }
            }
            _ => {
                self.v.insert(next, Value::Bit(c));
            }
        }
        let v = self.v[&next].bit().expect("set above");
        fx.send(Message::Revive1 { round: next, v });
        self.set_continue(next, v, Via::Finish, fx);
    }
}
