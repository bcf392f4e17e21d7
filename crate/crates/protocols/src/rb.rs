//! Depth-3 asymmetric reliable broadcast.

use std::collections::{BTreeMap, BTreeSet};

use depthlab_core::{ProcessId, ProcessSet};

use crate::engine::{Context, Effects, Output, ProtocolKind};
use crate::message::Message;
use crate::value::Payload;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RbEngine {
    me: ProcessId,
    broadcast: bool,
    sentecho: bool,
    echos: BTreeMap<ProcessId, Payload>,
    echo_senders: BTreeMap<Payload, ProcessSet>,
    sentrae: BTreeSet<u32>,
    sentrar: BTreeSet<u32>,
    readysafterecho: BTreeMap<(u32, ProcessId), Payload>,
    rae_senders: BTreeMap<(u32, Payload), ProcessSet>,
    readysafterready: BTreeMap<(u32, ProcessId), Payload>,
    rar_senders: BTreeMap<(u32, Payload), ProcessSet>,
    delivered: bool,
}

/// First-write-wins store plus the set of senders per value.
fn record(
    slots: &mut BTreeMap<(u32, ProcessId), Payload>,
    senders: &mut BTreeMap<(u32, Payload), ProcessSet>,
    r: u32,
    from: ProcessId,
    m: &Payload,
) -> Option<ProcessSet> {
    if slots.contains_key(&(r, from)) {
        return None;
    }
    slots.insert((r, from), m.clone());
    let set = senders.entry((r, m.clone())).or_default();
    set.insert(from);
    Some(*set)
}

impl RbEngine {
    pub fn new(me: ProcessId) -> Self {
        RbEngine {
            me,
            broadcast: false,
            sentecho: false,
            echos: BTreeMap::new(),
            echo_senders: BTreeMap::new(),
            sentrae: BTreeSet::new(),
            sentrar: BTreeSet::new(),
            readysafterecho: BTreeMap::new(),
            rae_senders: BTreeMap::new(),
            readysafterready: BTreeMap::new(),
            rar_senders: BTreeMap::new(),
            delivered: false,
        }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    pub fn delivered(&self) -> bool {
        self.delivered
    }

    pub fn broadcast(&mut self, ctx: &Context, m: Payload, fx: &mut Effects) {
        if ctx.sender != Some(self.me) {
            fx.note("only the designated sender broadcasts");
            return;
        }
        if self.broadcast {
            fx.note("already broadcast");
            return;
        }
        self.broadcast = true;
        fx.send(Message::Send { m });
    }

    pub fn receive(&mut self, ctx: &Context, from: ProcessId, msg: Message, fx: &mut Effects) {
        let amplify = ctx.kind == ProtocolKind::Rb3;
        match msg {
            Message::Send { m } => {
                if ctx.sender != Some(from) {
                    fx.note(format!("SEND from {from}, who is not the sender"));
                } else if !self.sentecho {
                    self.sentecho = true;
                    fx.send(Message::Echo { m });
                }
            }
            Message::Echo { m } => {
                if self.echos.contains_key(&from) {
                    return;
                }
                self.echos.insert(from, m.clone());
                let set = self.echo_senders.entry(m.clone()).or_default();
                set.insert(from);
                if !self.sentrae.contains(&1) && ctx.quorums.has_quorum(self.me, *set) {
                    self.sentrae.insert(1);
                    fx.send(Message::ReadyAfterEcho { r: 1, m });
                }
            }
            Message::ReadyAfterEcho { r, m } => {
                if r == 0 || r > ctx.rb_max_round() {
                    fx.note(format!("round {r} outside 1..={}", ctx.rb_max_round()));
                    return;
                }
                let Some(set) = record(&mut self.readysafterecho, &mut self.rae_senders, r, from, &m) else {
                    return;
                };
                if amplify && !self.sentrar.contains(&r) && ctx.kernels.has_kernel(self.me, set) {
                    self.sentrar.insert(r);
                    fx.send(Message::ReadyAfterReady { r, m: m.clone() });
                }
                if !self.delivered && ctx.quorums.has_quorum(self.me, set) {
                    self.delivered = true;
                    fx.output(Output::Deliver { m });
                }
            }
            Message::ReadyAfterReady { r, m } => {
                if r == 0 || r > ctx.rb_max_round() {
                    fx.note(format!("round {r} outside 1..={}", ctx.rb_max_round()));
                    return;
                }
                let Some(set) = record(&mut self.readysafterready, &mut self.rar_senders, r, from, &m) else {
                    return;
                };
                let next = r + 1;
                if amplify
                    && !ctx.mutations.skip_rb_amplification
                    && next <= ctx.rb_max_round()
                    && !self.sentrae.contains(&next)
                    && ctx.quorums.has_quorum(self.me, set)
                {
                    self.sentrae.insert(next);
                    fx.send(Message::ReadyAfterEcho { r: next, m });
                }
            }
            other => fx.note(format!("{} is not a broadcast message", other.kind())),
        }
    }
}
