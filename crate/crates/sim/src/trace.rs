//! Execution traces and their line format.
//!
//! Header lines start with `#`. Every other line is one event with five
//! tab-separated fields: timestamp, kind, actor, message and annotation.
//! Timestamps are event indices; logical time is the number of `deliver`
//! events so far.

use std::fmt::{self, Write as _};

use depthlab_core::{Depth, ExecutionContext, ProcessId};
use depthlab_protocols::{Bit, Message, Output, Payload};
use sha2::{Digest, Sha256};

use crate::error::SimError;
use crate::scenario::Scenario;

pub const TRACE_MAGIC: &str = "# depthlab trace v1";

/// A local invocation made by the environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Invocation {
    Broadcast(Payload),
    Propose(Bit),
    Release(u32),
}

impl fmt::Display for Invocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invocation::Broadcast(m) => write!(f, "BROADCAST(m={m})"),
            Invocation::Propose(v) => write!(f, "PROPOSE(v={v})"),
            Invocation::Release(r) => write!(f, "RELEASE[round={r}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Input {
        p: ProcessId,
        input: Invocation,
    },
    /// A message put on the link `from → to`. `forged` marks sends made by
    /// the adversary on behalf of a faulty process.
    Send {
        id: u64,
        from: ProcessId,
        to: ProcessId,
        msg: Message,
        forged: bool,
    },
    Deliver {
        id: u64,
        from: ProcessId,
        to: ProcessId,
        msg: Message,
    },
    /// The engine of `p` ignored an input.
    Drop {
        p: ProcessId,
        what: String,
        reason: String,
    },
    Output {
        p: ProcessId,
        out: Output,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Input { .. } => "input",
            Event::Send { forged: false, .. } => "send",
            Event::Send { forged: true, .. } => "adversary",
            Event::Deliver { .. } => "deliver",
            Event::Drop { .. } => "drop",
            Event::Output { .. } => "output",
        }
    }

    pub fn actor(&self) -> ProcessId {
        match self {
            Event::Input { p, .. } | Event::Drop { p, .. } | Event::Output { p, .. } => *p,
            Event::Send { from, .. } => *from,
            Event::Deliver { to, .. } => *to,
        }
    }

    /// The message field of the line.
    pub fn message_text(&self) -> String {
        match self {
            Event::Input { input, .. } => input.to_string(),
            Event::Send { msg, .. } | Event::Deliver { msg, .. } => msg.to_string(),
            Event::Drop { what, .. } => what.clone(),
            Event::Output { out, .. } => out.to_string(),
        }
    }

    fn annotation(&self) -> String {
        match self {
            Event::Send { id, to, .. } => format!("id={id} to={to}"),
            Event::Deliver { id, from, .. } => format!("id={id} from={from}"),
            Event::Drop { reason, .. } => clean(reason),
            Event::Input { .. } | Event::Output { .. } => "-".into(),
        }
    }

    pub fn render(&self, ts: usize) -> String {
        format!("{ts}\t{}\t{}\t{}\t{}", self.kind(), self.actor(), clean(&self.message_text()), self.annotation())
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Renders a depth for headers: `bot`, a number or `inf`.
fn depth_text(d: Depth) -> String {
    d.to_string()
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub scenario: Scenario,
    pub context: ExecutionContext,
    pub events: Vec<Event>,
    /// Every sent message was delivered before the horizon.
    pub complete: bool,
    pub delivered: u64,
}

impl Trace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let ctx = &self.context;
        let depths: Vec<String> = ctx.depths.iter().map(|d| depth_text(*d)).collect();
        let guild = ctx.maximal_guild.map_or("none".to_string(), |g| g.to_string());
        let _ = writeln!(out, "{TRACE_MAGIC}");
        let _ = writeln!(out, "# digest {}", self.scenario.digest());
        let _ = writeln!(out, "# protocol {}", self.scenario.protocol);
        let _ = writeln!(out, "# context faults={} depths={} guild={guild}", ctx.faults, depths.join(","));
        let _ = writeln!(out, "# scenario {}", self.scenario.to_json());
        for (ts, e) in self.events.iter().enumerate() {
            out.push_str(&e.render(ts));
            out.push('\n');
        }
        let status = if self.complete { "complete" } else { "incomplete" };
        let _ = writeln!(out, "# end {status} delivered={}", self.delivered);
        out
    }

    /// SHA-256 of the rendered trace.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    /// Outputs in trace order with their timestamps.
    pub fn outputs(&self) -> impl Iterator<Item = (usize, ProcessId, &Output)> {
        self.events.iter().enumerate().filter_map(|(ts, e)| match e {
            Event::Output { p, out } => Some((ts, *p, out)),
            _ => None,
        })
    }

    /// Adversary actions as script rules that reproduce them.
    pub fn adversary_script(&self) -> Vec<crate::scenario::ScriptRule> {
        use crate::scenario::{ScriptRule, Trigger};
        let mut rules = Vec::new();
        let mut now = 0;
        for e in &self.events {
            match e {
                Event::Deliver { .. } => now += 1,
                Event::Send { from, to, msg, forged: true, .. } => rules.push(ScriptRule {
                    trigger: Trigger::At(now),
                    from: *from,
                    to: depthlab_core::ProcessSet::singleton(*to),
                    msg: msg.clone(),
                }),
                _ => {}
            }
        }
        rules
    }
}

/// Reads the scenario embedded in a rendered trace.
pub fn scenario_of(text: &str) -> Result<Scenario, SimError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_MAGIC) {
        return Err(SimError::Header("missing trace magic line".into()));
    }
    let mut digest = None;
    for line in lines.take_while(|l| l.starts_with('#')) {
        if let Some(d) = line.strip_prefix("# digest ") {
            digest = Some(d.to_string());
        }
        if let Some(json) = line.strip_prefix("# scenario ") {
            let sc = Scenario::from_json(json)?;
            if digest.as_deref() != Some(sc.digest().as_str()) {
                return Err(SimError::Header("scenario does not match its digest".into()));
            }
            return Ok(sc);
        }
    }
    Err(SimError::Header("no scenario line".into()))
}

/// First line (1-based) where two rendered traces differ, with both lines.
pub fn first_difference(expected: &str, actual: &str) -> Option<(usize, String, String)> {
    let mut a = expected.lines();
    let mut b = actual.lines();
    let mut line = 0;
    loop {
        line += 1;
        match (a.next(), b.next()) {
            (None, None) => return None,
            (x, y) if x == y => continue,
            (x, y) => {
                return Some((line, x.unwrap_or("<end>").to_string(), y.unwrap_or("<end>").to_string()));
            }
        }
    }
}
