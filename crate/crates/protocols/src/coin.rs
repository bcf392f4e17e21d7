//! Asymmetric common coin over dealer-shared bits.

use std::collections::{BTreeMap, BTreeSet};

use depthlab_core::{ProcessId, ProcessSet};

use crate::engine::{Context, Effects, Output};
use crate::message::Message;
use crate::value::Bit;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CoinEngine {
    me: ProcessId,
    released: BTreeSet<u32>,
    /// share[(round, Q)][j], kept only for quorums of this process.
    shares: BTreeMap<(u32, ProcessSet), BTreeMap<ProcessId, Bit>>,
    output: BTreeSet<u32>,
}

impl CoinEngine {
    pub fn new(me: ProcessId) -> Self {
        CoinEngine { me, ..Default::default() }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    pub fn has_output(&self, round: u32) -> bool {
        self.output.contains(&round)
    }

    pub fn release(&mut self, ctx: &Context, round: u32, fx: &mut Effects) {
        let dealer = ctx.dealer();
        if round == 0 || round > dealer.max_rounds() {
            fx.note(format!("no coin dealt for round {round}"));
            return;
        }
        if !self.released.insert(round) {
            return;
        }
        fx.output(Output::Release { round });
        for (q, s) in dealer.shares_of(round, self.me) {
            fx.send(Message::Share { round, q, s, tag: dealer.tag(round, q, self.me, s) });
        }
        self.try_output(ctx, round, fx);
    }

    pub fn receive(&mut self, ctx: &Context, from: ProcessId, msg: Message, fx: &mut Effects) {
        let Message::Share { round, q, s, tag } = msg else {
            fx.note(format!("{} is not a coin message", msg.kind()));
            return;
        };
        if !q.contains(from) {
            fx.note(format!("share for {q} from non-member {from}"));
            return;
        }
        if !ctx.dealer().verify(round, q, from, s, tag) {
            fx.note(format!("share from {from} fails dealer provenance"));
            return;
        }
        if !ctx.quorums.of(self.me).contains(&q) {
            return;
        }
        self.shares.entry((round, q)).or_default().entry(from).or_insert(s);
        self.try_output(ctx, round, fx);
    }

    fn try_output(&mut self, ctx: &Context, round: u32, fx: &mut Effects) {
        if !self.released.contains(&round) || self.output.contains(&round) {
            return;
        }
        for &q in ctx.quorums.of(self.me) {
            let Some(got) = self.shares.get(&(round, q)) else { continue };
            if q.iter().all(|p| got.contains_key(&p)) {
                let c = got.values().fold(0u8, |acc, b| acc ^ b.as_u8());
                self.output.insert(round);
                fx.output(Output::Coin { round, c: Bit::from_u8(c).unwrap() });
                return;
            }
        }
    }
}
