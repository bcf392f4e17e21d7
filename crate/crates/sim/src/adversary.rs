//! Byzantine behaviour of the faulty processes.
//!
//! Faulty processes have no honest engine in the simulation. The adversary
//! owns them: it sees every message addressed to them as soon as it is sent
//! and acts only between deliveries.

use std::collections::BTreeMap;

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{Context, Engine, Input, Message, Value};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::run::follow_up;
use crate::scenario::{Scenario, Strategy, Trigger};
use crate::trace::Event;

/// Flips the value or alters the payload of a message. Shares keep their
/// dealer tag, so correct processes reject them.
pub fn alter(msg: &Message) -> Message {
    match msg {
        Message::Send { m } => Message::Send { m: m.altered() },
        Message::Echo { m } => Message::Echo { m: m.altered() },
        Message::ReadyAfterEcho { r, m } => Message::ReadyAfterEcho { r: *r, m: m.altered() },
        Message::ReadyAfterReady { r, m } => Message::ReadyAfterReady { r: *r, m: m.altered() },
        Message::BcaEcho { round, c, v } => Message::BcaEcho { round: *round, c: *c, v: v.flip() },
        Message::BcaEchoPrime { round, c, v } => Message::BcaEchoPrime { round: *round, c: *c, v: v.flip() },
        Message::BcaEcho2 { round, v } => Message::BcaEcho2 { round: *round, v: v.flip() },
        Message::BcaEcho3 { round, v } => Message::BcaEcho3 {
            round: *round,
            v: match v {
                Value::Bit(b) => Value::Bit(b.flip()),
                Value::Bot => Value::ZERO,
            },
        },
        Message::Share { round, q, s, tag } => Message::Share { round: *round, q: *q, s: s.flip(), tag: *tag },
        Message::Revive1 { round, v } => Message::Revive1 { round: *round, v: v.flip() },
        Message::Revive2 { round, v } => Message::Revive2 { round: *round, v: v.flip() },
    }
}

pub struct Adversary {
    n: usize,
    strategies: BTreeMap<ProcessId, Strategy>,
    /// Engines run on behalf of equivocating and delaying processes.
    shadows: BTreeMap<ProcessId, Engine>,
    /// Recipients that get the altered copy, per equivocating process.
    altered_for: BTreeMap<ProcessId, ProcessSet>,
    inputs: Vec<(ProcessId, Input)>,
    inbox: Vec<(ProcessId, ProcessId, Message)>,
    rules: Vec<(crate::scenario::ScriptRule, bool)>,
    rounds: u32,
}

impl Adversary {
    /// `inputs` are the invocations the environment makes at faulty processes.
    pub fn new(sc: &Scenario, ctx: &Context, inputs: Vec<(ProcessId, Input)>, rng: &mut ChaCha8Rng) -> Self {
        let n = sc.n();
        let mut strategies = BTreeMap::new();
        let mut shadows = BTreeMap::new();
        let mut altered_for = BTreeMap::new();
        for p in sc.faults {
            let s = sc.strategy(p).unwrap_or(Strategy::Silent);
            strategies.insert(p, s);
            if matches!(s, Strategy::Equivocate | Strategy::DelayMax) {
                shadows.insert(p, Engine::new(ctx, p));
            }
            if s == Strategy::Equivocate {
                let set: ProcessSet = (0..n).filter(|_| rng.gen_bool(0.5)).map(|i| ProcessId(i as u8)).collect();
                altered_for.insert(p, set);
            }
        }
        let inputs = inputs.into_iter().filter(|(p, _)| shadows.contains_key(p)).collect();
        Adversary {
            n,
            strategies,
            shadows,
            altered_for,
            inputs,
            inbox: Vec::new(),
            rules: sc.script.iter().cloned().map(|r| (r, false)).collect(),
            rounds: sc.rounds,
        }
    }

    pub fn strategy(&self, p: ProcessId) -> Option<Strategy> {
        self.strategies.get(&p).copied()
    }

    /// Messages from this process are delivered only when nothing else is pending.
    pub fn postponed(&self, from: ProcessId) -> bool {
        self.strategy(from) == Some(Strategy::DelayMax)
    }

    /// Hands over a message addressed to a faulty process.
    pub fn observe(&mut self, from: ProcessId, to: ProcessId, msg: Message) {
        self.inbox.push((from, to, msg));
    }

    /// Acts at logical time `now`, given the events since its last turn.
    /// Returns (from, to, message) sends in order.
    pub fn act(&mut self, ctx: &Context, now: u64, recent: &[Event]) -> Vec<(ProcessId, ProcessId, Message)> {
        let mut out = Vec::new();
        for (rule, fired) in &mut self.rules {
            if *fired {
                continue;
            }
            let due = match &rule.trigger {
                Trigger::At(t) => *t <= now,
                Trigger::After(pat) => recent.iter().any(|e| {
                    e.kind() == pat.kind
                        && pat.actor.is_none_or(|a| a == e.actor())
                        && e.message_text().starts_with(&pat.prefix)
                }),
            };
            if due {
                *fired = true;
                out.extend(rule.to.iter().map(|to| (rule.from, to, rule.msg.clone())));
            }
        }

        let mut work: Vec<(ProcessId, Input)> = std::mem::take(&mut self.inputs);
        work.extend(
            std::mem::take(&mut self.inbox)
                .into_iter()
                .filter(|(_, to, _)| self.shadows.contains_key(to))
                .map(|(from, to, msg)| (to, Input::Receive { from, msg })),
        );
        let mut i = 0;
        while i < work.len() {
            let (p, input) = work[i].clone();
            i += 1;
            let fx = self.shadows.get_mut(&p).expect("work only targets shadows").step(ctx, input);
            for o in &fx.outputs {
                if let Some(next) = follow_up(ctx.kind, self.rounds, o) {
                    work.push((p, next));
                }
            }
            let altered = self.altered_for.get(&p).copied().unwrap_or_default();
            for msg in fx.messages {
                for to in (0..self.n).map(|j| ProcessId(j as u8)) {
                    let m = if altered.contains(to) { alter(&msg) } else { msg.clone() };
                    out.push((p, to, m));
                }
            }
        }
        out
    }
}
