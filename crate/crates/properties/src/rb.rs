//! Reliable broadcast quantified over a depth class.

use std::collections::BTreeMap;

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{Message, Output, Payload, ProtocolKind};
use depthlab_sim::{Event, Invocation, Trace};

use crate::report::{merge, Params, PropertyReport, Verdict, Witness};
use crate::view::{at, end, expect, inputs, outputs_in};
use crate::CheckError;

const RB: &[ProtocolKind] = &[ProtocolKind::Rb3, ProtocolKind::RbPremature];

/// Validity, Consistency, Integrity and Totality over the processes of depth
/// at least `d`.
pub fn check_rb(t: &Trace, d: u32) -> Result<Vec<PropertyReport>, CheckError> {
    expect(t, RB)?;
    let class = t.context.depth_class(d);
    let params = Params::d(d);
    let sender = t.scenario.sender.filter(|s| t.context.is_correct(*s));
    let broadcast: Option<(usize, Payload)> = sender.and_then(|s| {
        inputs(t, s, |i| match i {
            Invocation::Broadcast(m) => Some(m.clone()),
            _ => None,
        })
        .next()
    });
    let delivered: Vec<(usize, ProcessId, Payload)> = outputs_in(t, class, |o| match o {
        Output::Deliver { m } => Some(m.clone()),
        _ => None,
    })
    .collect();
    let mut first: BTreeMap<ProcessId, (usize, Payload)> = BTreeMap::new();
    for (ts, p, m) in &delivered {
        first.entry(*p).or_insert((*ts, m.clone()));
    }
    let missing: Vec<ProcessId> = class.iter().filter(|p| !first.contains_key(p)).collect();

    let mut validity = PropertyReport::new("rb.validity", params, class);
    match (&broadcast, validity.verdict) {
        (_, Verdict::Vacuous) => {}
        (None, _) => validity.detail = "sender is faulty".into(),
        (Some((bts, m)), _) => {
            for (p, (ts, got)) in &first {
                if got != m {
                    validity.violate(Witness::new(at(t, *bts), at(t, *ts), format!("{p} delivered {got}, not {m}")));
                }
            }
            for p in &missing {
                if t.complete {
                    validity.violate(Witness::new(at(t, *bts), end(t), format!("{p} never delivered {m}")));
                } else {
                    validity.inconclusive("trace incomplete");
                }
            }
        }
    }

    let mut consistency = PropertyReport::new("rb.consistency", params, class);
    if let Some((p, (ts, m))) = first.iter().next() {
        for (q, (ts2, m2)) in first.iter().skip(1) {
            if m2 != m {
                consistency.violate(Witness::new(
                    at(t, *ts),
                    at(t, *ts2),
                    format!("{p} delivered {m}, {q} delivered {m2}"),
                ));
            }
        }
    }

    let mut integrity = PropertyReport::new("rb.integrity", params, class);
    for (ts, p, m) in &delivered {
        let (ts0, _) = &first[p];
        if ts0 != ts {
            integrity.violate(Witness::new(at(t, *ts0), at(t, *ts), format!("{p} delivered twice, again {m}")));
        }
        if let Some(s) = sender {
            match &broadcast {
                Some((bts, bm)) if bts < ts && bm == m => {}
                Some((bts, _)) => integrity.violate(Witness::new(
                    at(t, *bts),
                    at(t, *ts),
                    format!("{p} delivered {m}, which {s} did not broadcast before"),
                )),
                None => integrity.violate(Witness::new(
                    at(t, 0),
                    at(t, *ts),
                    format!("{p} delivered {m} before any broadcast"),
                )),
            }
        }
    }

    let mut totality = PropertyReport::new("rb.totality", params, class);
    if let Some((p, (ts, _))) = first.iter().min_by_key(|(_, (ts, _))| *ts) {
        for q in &missing {
            if t.complete {
                totality.violate(Witness::new(at(t, *ts), end(t), format!("{p} delivered, {q} did not")));
            } else {
                totality.inconclusive("trace incomplete");
            }
        }
    }
    Ok(vec![validity, consistency, integrity, totality])
}

/// Who sent ECHO(m) to whom, over the whole trace.
fn echo_senders(t: &Trace) -> BTreeMap<(ProcessId, Payload), ProcessSet> {
    let mut out: BTreeMap<(ProcessId, Payload), ProcessSet> = BTreeMap::new();
    for e in &t.events {
        if let Event::Send { from, to, msg: Message::Echo { m }, .. } = e {
            out.entry((*to, m.clone())).or_default().insert(*from);
        }
    }
    out
}

/// Two supporting facts about the ready chain:
///
/// * `rb.ready_after_echo`: a depth-1 process sends READYAFTERECHO(1, m)
///   only after receiving ECHO(m) from one of its quorums.
/// * `rb.echo_attested`: if a depth-3 process delivers m, some depth-1
///   process has a quorum whose members all sent it ECHO(m).
pub fn check_rb_chain(t: &Trace) -> Result<Vec<PropertyReport>, CheckError> {
    expect(t, RB)?;
    let qs = &t.scenario.quorums;
    let d1 = t.context.depth_class(1);

    let mut ready = PropertyReport::new("rb.ready_after_echo", Params::d(1), d1);
    let mut heard: BTreeMap<(ProcessId, Payload), ProcessSet> = BTreeMap::new();
    for (ts, e) in t.events.iter().enumerate() {
        match e {
            Event::Deliver { from, to, msg: Message::Echo { m }, .. } => {
                heard.entry((*to, m.clone())).or_default().insert(*from);
            }
            Event::Send { from, to, msg: Message::ReadyAfterEcho { r: 1, m }, .. }
                if from == to && d1.contains(*from) =>
            {
                let got = heard.get(&(*from, m.clone())).copied().unwrap_or_default();
                if !qs.has_quorum(*from, got) {
                    ready.violate(Witness::new(
                        at(t, 0),
                        at(t, ts),
                        format!("{from} sent READYAFTERECHO(1,{m}) with ECHO({m}) only from {got}"),
                    ));
                }
            }
            _ => {}
        }
    }

    let d3 = t.context.depth_class(3);
    let mut attested = PropertyReport::new("rb.echo_attested", Params::d(3), d3);
    let echoes = echo_senders(t);
    for (ts, p, m) in outputs_in(t, d3, |o| match o {
        Output::Deliver { m } => Some(m.clone()),
        _ => None,
    }) {
        let ok = d1.iter().any(|q| echoes.get(&(q, m.clone())).is_some_and(|s| qs.has_quorum(q, *s)));
        if !ok {
            attested.violate(Witness::new(
                at(t, ts),
                end(t),
                format!("{p} delivered {m} without a depth-1 echo quorum"),
            ));
        }
    }
    Ok(vec![ready, attested])
}

/// If every RB[d] report holds on the ensemble, so does every RB[d′] report
/// (or it is vacuous).
pub fn check_monotonicity(traces: &[Trace], d: u32, d_prime: u32) -> Result<PropertyReport, CheckError> {
    if d_prime <= d {
        return Err(CheckError::Parameters(format!("need d' > d, got d={d}, d'={d_prime}")));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for t in traces {
        lower.extend(check_rb(t, d)?);
        upper.extend(check_rb(t, d_prime)?);
    }
    let class = traces.iter().fold(ProcessSet::EMPTY, |acc, t| acc | t.context.depth_class(d_prime));
    let mut r = PropertyReport::new("rb.monotonicity", Params::d(d_prime), class)
        .with_detail(format!("RB[{d}] implies RB[{d_prime}]"));
    if r.verdict == Verdict::Vacuous {
        return Ok(r);
    }
    let lower = merge(lower);
    if lower.iter().any(|l| l.verdict != Verdict::Holds) {
        r.detail = format!("RB[{d}] does not hold on the ensemble");
        return Ok(r);
    }
    for u in merge(upper) {
        if !matches!(u.verdict, Verdict::Holds | Verdict::Vacuous) {
            for w in u.witnesses.iter().take(2) {
                r.violate(Witness::new(
                    w.first,
                    w.second,
                    format!("{} {} at d={d_prime}: {}", u.property, u.verdict, w.note),
                ));
            }
            if u.witnesses.is_empty() {
                r.inconclusive(&format!("{} is {} at d={d_prime}", u.property, u.verdict));
            }
        }
    }
    Ok(r)
}
