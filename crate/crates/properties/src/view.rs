//! Queries over one trace.

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{Message, Output, ProtocolKind};
use depthlab_sim::{Event, Invocation, Trace};

use crate::report::EventRef;
use crate::CheckError;

pub fn at(t: &Trace, ts: usize) -> EventRef {
    EventRef::Event { seed: t.scenario.seed, ts }
}

pub fn end(t: &Trace) -> EventRef {
    EventRef::End { seed: t.scenario.seed }
}

pub fn expect(t: &Trace, kinds: &[ProtocolKind]) -> Result<(), CheckError> {
    if kinds.contains(&t.scenario.protocol) {
        Ok(())
    } else {
        Err(CheckError::WrongProtocol { expected: kinds[0], got: t.scenario.protocol })
    }
}

/// Outputs of members of `class` matching `f`, with their timestamps.
pub fn outputs_in<'a, T>(
    t: &'a Trace,
    class: ProcessSet,
    f: impl Fn(&Output) -> Option<T> + 'a,
) -> impl Iterator<Item = (usize, ProcessId, T)> + 'a {
    t.outputs().filter(move |(_, p, _)| class.contains(*p)).filter_map(move |(ts, p, o)| f(o).map(|x| (ts, p, x)))
}

/// Broadcasts of `p` matching `f`. A broadcast reaches every process,
/// `p` included, so the copy addressed to `p` stands for it.
pub fn broadcasts<'a, T>(
    t: &'a Trace,
    p: ProcessId,
    f: impl Fn(&Message) -> Option<T> + 'a,
) -> impl Iterator<Item = (usize, T)> + 'a {
    t.events.iter().enumerate().filter_map(move |(ts, e)| match e {
        Event::Send { from, to, msg, .. } if *from == p && *to == p => f(msg).map(|x| (ts, x)),
        _ => None,
    })
}

/// Local invocations of `p` matching `f`.
pub fn inputs<'a, T>(
    t: &'a Trace,
    p: ProcessId,
    f: impl Fn(&Invocation) -> Option<T> + 'a,
) -> impl Iterator<Item = (usize, T)> + 'a {
    t.events.iter().enumerate().filter_map(move |(ts, e)| match e {
        Event::Input { p: q, input } if *q == p => f(input).map(|x| (ts, x)),
        _ => None,
    })
}
