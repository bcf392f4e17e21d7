//! Asymmetric binding crusader agreement.
//!
//! Messages are collected from the start, but no upon-clause fires before the
//! local `bca-propose`.

use std::collections::{BTreeMap, BTreeSet};

use depthlab_core::{ProcessId, ProcessSet};

use crate::engine::{Context, Effects, Output};
use crate::message::Message;
use crate::value::{Bit, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BcaEngine {
    me: ProcessId,
    round: u32,
    proposed: Option<Bit>,
    echo: BTreeMap<(u32, Bit), ProcessSet>,
    echo_prime: BTreeMap<(u32, Bit), ProcessSet>,
    echo2: BTreeMap<Bit, ProcessSet>,
    echo3: BTreeMap<Value, ProcessSet>,
    sent_echo: BTreeSet<(u32, Bit)>,
    sent_echo_prime: BTreeSet<(u32, Bit)>,
    sentecho2: bool,
    sent_echo3: BTreeSet<Value>,
    approved: BTreeSet<Bit>,
    decided: Option<Value>,
}

impl BcaEngine {
    pub fn new(me: ProcessId, round: u32) -> Self {
        BcaEngine {
            me,
            round,
            proposed: None,
            echo: BTreeMap::new(),
            echo_prime: BTreeMap::new(),
            echo2: BTreeMap::new(),
            echo3: BTreeMap::new(),
            sent_echo: BTreeSet::new(),
            sent_echo_prime: BTreeSet::new(),
            sentecho2: false,
            sent_echo3: BTreeSet::new(),
            approved: BTreeSet::new(),
            decided: None,
        }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    pub fn proposed(&self) -> bool {
        self.proposed.is_some()
    }

    pub fn decided(&self) -> Option<Value> {
        self.decided
    }

    /// True if receiving `msg` now and receiving it after any further
    /// messages lead to the same state and the same sends. Stays true as
    /// more messages arrive. Only valid without mutations. `one_value` is a
    /// promise that every message this process will ever receive carries the
    /// same bit, so no choice can go two ways.
    pub fn receipt_commutes(&self, ctx: &Context, msg: &Message, one_value: bool) -> bool {
        if self.proposed.is_none() {
            return false;
        }
        if one_value || msg.round() != Some(self.round) {
            return true;
        }
        match *msg {
            Message::BcaEcho { c, .. } | Message::BcaEchoPrime { c, .. } if c > ctx.config.bca_max_counter => true,
            // only feeds the monotone ECHO clauses
            Message::BcaEchoPrime { .. } => true,
            Message::BcaEcho { v, .. } => self.approved.contains(&v),
            Message::BcaEcho2 { .. } => !self.sent_echo3.is_empty(),
            Message::BcaEcho3 { .. } => self.decided.is_some(),
            _ => true,
        }
    }

    pub fn propose(&mut self, ctx: &Context, v: Bit, fx: &mut Effects) {
        if self.proposed.is_some() {
            return;
        }
        self.proposed = Some(v);
        fx.output(Output::BcaPropose { round: self.round, v });
        self.sent_echo.insert((1, v));
        fx.send(Message::BcaEcho { round: self.round, c: 1, v });
        self.evaluate(ctx, fx);
    }

    pub fn receive(&mut self, ctx: &Context, from: ProcessId, msg: Message, fx: &mut Effects) {
        if msg.round() != Some(self.round) {
            fx.note(format!("{msg} does not belong to round {}", self.round));
            return;
        }
        let max = ctx.config.bca_max_counter;
        match msg {
            Message::BcaEcho { c, v, .. } | Message::BcaEchoPrime { c, v, .. } if c > max => {
                fx.note(format!("counter {c} above {max} for value {v}"));
                return;
            }
            Message::BcaEcho { c, v, .. } => {
                self.echo.entry((c, v)).or_default().insert(from);
            }
            Message::BcaEchoPrime { c, v, .. } => {
                self.echo_prime.entry((c, v)).or_default().insert(from);
            }
            Message::BcaEcho2 { v, .. } => {
                self.echo2.entry(v).or_default().insert(from);
            }
            Message::BcaEcho3 { v, .. } => {
                self.echo3.entry(v).or_default().insert(from);
            }
            other => {
                fx.note(format!("{} is not a crusader agreement message", other.kind()));
                return;
            }
        }
        if self.proposed.is_some() {
            self.evaluate(ctx, fx);
        }
    }

    fn evaluate(&mut self, ctx: &Context, fx: &mut Effects) {
        let me = self.me;
        let round = self.round;
        let qs = &ctx.quorums;

        for (&(c, v), &set) in &self.echo {
            if !self.sent_echo_prime.contains(&(c, v)) && ctx.kernels.has_kernel(me, set) {
                self.sent_echo_prime.insert((c, v));
                fx.send(Message::BcaEchoPrime { round, c, v });
            }
        }
        for (&(c, v), &set) in &self.echo_prime {
            let next = (c + 1, v);
            if c < ctx.config.bca_max_counter && !self.sent_echo.contains(&next) && qs.has_quorum(me, set) {
                self.sent_echo.insert(next);
                fx.send(Message::BcaEcho { round, c: c + 1, v });
            }
        }
        for (&(_, v), &set) in &self.echo {
            if qs.has_quorum(me, set) {
                self.approved.insert(v);
                if !self.sentecho2 {
                    self.sentecho2 = true;
                    fx.send(Message::BcaEcho2 { round, v });
                }
            }
        }

        let conflicted = self.approved.len() > 1;
        let mut echo3 = Vec::new();
        for (&v, &set) in &self.echo2 {
            if qs.has_quorum(me, set) {
                echo3.push(if conflicted { Value::Bot } else { Value::Bit(v) });
            }
        }
        if conflicted {
            echo3.push(Value::Bot);
        }
        if ctx.mutations.bca_echo3_multi_send {
            for v in echo3 {
                if self.sent_echo3.insert(v) {
                    fx.send(Message::BcaEcho3 { round, v });
                }
            }
        } else if let Some(&v) = echo3.first() {
            if self.sent_echo3.is_empty() {
                self.sent_echo3.insert(v);
                fx.send(Message::BcaEcho3 { round, v });
            }
        }

        if self.decided.is_none() {
            let exact = [Value::ZERO, Value::ONE, Value::Bot]
                .into_iter()
                .find(|v| self.echo3.get(v).is_some_and(|s| qs.has_quorum(me, *s)));
            let any = self.echo3.values().fold(ProcessSet::EMPTY, |acc, s| acc | *s);
            let decision = exact.or_else(|| (conflicted && qs.has_quorum(me, any)).then_some(Value::Bot));
            if let Some(v) = decision {
                self.decided = Some(v);
                fx.output(Output::BcaDecide { round, v });
            }
        }
    }
}
