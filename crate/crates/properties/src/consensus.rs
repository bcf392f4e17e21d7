//! Consensus per trace and as ensemble statistics.

use std::collections::BTreeMap;

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{Bit, Message, Output, ProtocolKind, Via};
use depthlab_sim::{Event, Invocation, Trace};

use crate::report::{merge, Params, PropertyReport, Verdict, Witness};
use crate::view::{at, end, expect, inputs, outputs_in};
use crate::CheckError;

/// Depth of the processes whose finishing a round revives the others.
pub const FINISH_DEPTH: u32 = 7;
/// Depth of the processes that get revived.
pub const REVIVED_DEPTH: u32 = 2;
/// Revival is only claimed when a process of this depth exists.
pub const ANCHOR_DEPTH: u32 = 9;

/// What the ensemble statistics are measured against.
#[derive(Clone, Copy, Debug)]
pub struct Targets {
    /// Least fraction of traces in which every depth-d process decides.
    pub termination: f64,
    /// Accepted band for the mean decision round.
    pub mean_round: Option<(f64, f64)>,
}

impl Default for Targets {
    fn default() -> Self {
        Targets { termination: 0.99, mean_round: None }
    }
}

/// Agreement, Validity, round causality and revival per trace, merged; then
/// termination and the mean decision round over the ensemble.
pub fn check_consensus(traces: &[Trace], d: u32, targets: Targets) -> Result<Vec<PropertyReport>, CheckError> {
    let mut per_trace = Vec::new();
    let mut finished = 0usize;
    let mut rounds = Vec::new();
    let mut unfinished = Vec::new();
    let mut class_union = ProcessSet::EMPTY;
    for t in traces {
        expect(t, &[ProtocolKind::Consensus])?;
        let class = t.context.depth_class(d);
        class_union = class_union | class;
        let decided: Vec<(usize, ProcessId, (u32, Bit))> = outputs_in(t, class, |o| match o {
            Output::Decide { round, v } => Some((*round, *v)),
            _ => None,
        })
        .collect();
        let params = Params::d(d);

        let mut agreement = PropertyReport::new("consensus.agreement", params, class);
        if let Some((ts, p, (_, v))) = decided.first() {
            for (ts2, q, (_, v2)) in &decided[1..] {
                if v2 != v {
                    agreement.violate(Witness::new(
                        at(t, *ts),
                        at(t, *ts2),
                        format!("{p} decided {v}, {q} decided {v2}"),
                    ));
                }
            }
        }

        let mut validity = PropertyReport::new("consensus.validity", params, class);
        let proposed: Vec<(usize, Bit)> = t
            .context
            .correct()
            .iter()
            .filter_map(|p| {
                inputs(t, p, |i| match i {
                    Invocation::Propose(v) => Some(*v),
                    _ => None,
                })
                .next()
            })
            .collect();
        if let Some(&(pts, v)) = proposed.first().filter(|_| proposed.iter().all(|(_, b)| *b == proposed[0].1)) {
            for (ts, p, (_, got)) in &decided {
                if *got != v {
                    validity.violate(Witness::new(
                        at(t, pts),
                        at(t, *ts),
                        format!("every correct process proposed {v}, {p} decided {got}"),
                    ));
                }
            }
        }

        let done: ProcessSet = decided.iter().map(|(_, p, _)| *p).collect();
        if !class.is_empty() {
            if class.is_subset(done) {
                finished += 1;
                rounds.push(decided.iter().map(|(_, _, (r, _))| *r).max().unwrap_or(0));
            } else {
                unfinished.push(t);
            }
        }
        per_trace.extend([agreement, validity, causality(t), revival(t)]);
    }

    let mut reports = merge(per_trace);
    let params = Params { d: Some(d), d_prime: None, tolerance: Some(targets.termination) };
    let mut termination = PropertyReport::new("consensus.termination", params, class_union);
    if termination.verdict != Verdict::Vacuous {
        let total = finished + unfinished.len();
        let frac = finished as f64 / total as f64;
        termination.detail = format!("{finished}/{total} traces fully decided ({:.1}%)", 100.0 * frac);
        if frac < targets.termination {
            for t in unfinished.iter().take(4) {
                termination.violate(Witness::new(at(t, 0), end(t), "not every depth-d process decided".to_string()));
            }
        }
    }
    reports.push(termination);

    if let Some((lo, hi)) = targets.mean_round {
        let mut mean = PropertyReport::new(
            "consensus.mean_round",
            Params { d: Some(d), d_prime: None, tolerance: None },
            class_union,
        );
        if rounds.is_empty() {
            mean.inconclusive("no trace fully decided");
        } else {
            let m = rounds.iter().map(|r| *r as f64).sum::<f64>() / rounds.len() as f64;
            mean.detail = format!("mean decision round {m:.3} over {} traces, band [{lo}, {hi}]", rounds.len());
            if !(lo..=hi).contains(&m) {
                let t = &traces[0];
                mean.violate(Witness::new(
                    at(t, 0),
                    end(&traces[traces.len() - 1]),
                    format!("mean {m:.3} outside [{lo}, {hi}]"),
                ));
            }
        }
        reports.push(mean);
    }
    Ok(reports)
}

/// A process of depth 2 revived into round r with v only after some
/// depth-7 process sent REVIVE1(r, v).
fn causality(t: &Trace) -> PropertyReport {
    let class = anchored(t, REVIVED_DEPTH);
    let finishers = t.context.depth_class(FINISH_DEPTH);
    let mut r = PropertyReport::new("consensus.round_causality", Params::pair(FINISH_DEPTH, REVIVED_DEPTH), class);
    let mut sent: BTreeMap<(u32, Bit), usize> = BTreeMap::new();
    for (ts, e) in t.events.iter().enumerate() {
        match e {
            Event::Send { from, msg: Message::Revive1 { round, v }, .. } if finishers.contains(*from) => {
                sent.entry((*round, *v)).or_insert(ts);
            }
            Event::Output { p, out: Output::Enter { round, v, via: Via::Revive } } if class.contains(*p) => {
                if !sent.contains_key(&(*round, *v)) {
                    r.violate(Witness::new(
                        at(t, 0),
                        at(t, ts),
                        format!("{p} revived into round {round} with {v}, no depth-{FINISH_DEPTH} REVIVE1"),
                    ));
                }
            }
            _ => {}
        }
    }
    r
}

/// If every depth-7 process finished round r, every depth-2 process enters
/// round r + 1.
fn revival(t: &Trace) -> PropertyReport {
    let class = anchored(t, REVIVED_DEPTH);
    let finishers = t.context.depth_class(FINISH_DEPTH);
    let mut r = PropertyReport::new("consensus.revival", Params::pair(FINISH_DEPTH, REVIVED_DEPTH), class);
    if class.is_empty() {
        return r;
    }
    let mut finished: BTreeMap<u32, (ProcessSet, usize)> = BTreeMap::new();
    let mut entered: BTreeMap<u32, ProcessSet> = BTreeMap::new();
    for (ts, p, o) in t.outputs() {
        if let Output::Enter { round, via, .. } = o {
            entered.entry(*round).or_default().insert(p);
            if *via == Via::Finish {
                let slot = finished.entry(*round).or_default();
                slot.0.insert(p);
                slot.1 = ts;
            }
        }
    }
    for (round, (who, last)) in &finished {
        if !finishers.is_subset(*who) {
            continue;
        }
        let got = entered.get(round).copied().unwrap_or_default();
        for p in class - got {
            if t.complete {
                r.violate(Witness::new(
                    at(t, *last),
                    end(t),
                    format!(
                        "every depth-{FINISH_DEPTH} process finished round {}, {p} never entered round {round}",
                        round - 1
                    ),
                ));
            } else {
                r.inconclusive("trace incomplete");
            }
        }
    }
    r
}

/// The depth-`d` class, or empty when no process has depth 9.
fn anchored(t: &Trace, d: u32) -> ProcessSet {
    if t.context.depth_class(ANCHOR_DEPTH).is_empty() {
        ProcessSet::EMPTY
    } else {
        t.context.depth_class(d)
    }
}
