//! Binding crusader agreement over traces or an exhaustive exploration.

use std::collections::BTreeMap;

use depthlab_core::{ExecutionContext, ProcessId, ProcessSet};
use depthlab_protocols::{Bit, Message, Output, ProtocolKind, Value};
use depthlab_sim::{decisions_of, Exploration, Invocation, Scenario, Trace};

use crate::report::{merge, EventRef, Params, PropertyReport, Verdict, Witness};
use crate::view::{at, broadcasts, end, expect, inputs, outputs_in};
use crate::CheckError;

/// Depth from which two processes never send ECHO3 with opposite bits.
pub const ECHO3_DEPTH: u32 = 5;

pub enum BcaEvidence<'a> {
    Traces(&'a [Trace]),
    /// Every delivery order of one scenario.
    Enumeration {
        scenario: &'a Scenario,
        exploration: &'a Exploration,
    },
}

/// Termination, Validity, Agreement and the ECHO3 facts per trace, merged
/// over the ensemble; over an enumeration, Termination, Validity, Agreement
/// and Binding across every interleaving.
pub fn check_bca(evidence: &BcaEvidence, d_prime: u32, d: u32) -> Result<Vec<PropertyReport>, CheckError> {
    match evidence {
        BcaEvidence::Traces(traces) => {
            let mut all = Vec::new();
            for t in *traces {
                all.extend(check_trace(t, d_prime, d)?);
            }
            Ok(merge(all))
        }
        BcaEvidence::Enumeration { scenario, exploration } => check_enumeration(scenario, exploration, d_prime, d),
    }
}

/// Binding needs every extension of the first decision, so only an
/// enumeration will do.
pub fn check_binding(evidence: &BcaEvidence, d: u32) -> Result<PropertyReport, CheckError> {
    match evidence {
        BcaEvidence::Traces(_) => Err(CheckError::BindingNeedsEnumeration),
        BcaEvidence::Enumeration { scenario, exploration } => Ok(binding(scenario, exploration, d)),
    }
}

fn proposals(t: &Trace, class: ProcessSet) -> BTreeMap<ProcessId, (usize, Bit)> {
    class
        .iter()
        .filter_map(|p| {
            inputs(t, p, |i| match i {
                Invocation::Propose(v) => Some(*v),
                _ => None,
            })
            .next()
            .map(|x| (p, x))
        })
        .collect()
}

fn check_trace(t: &Trace, d_prime: u32, d: u32) -> Result<Vec<PropertyReport>, CheckError> {
    expect(t, &[ProtocolKind::Bca])?;
    let params = Params::pair(d_prime, d);
    let starters = t.context.depth_class(d_prime);
    let class = t.context.depth_class(d);
    let proposed = proposals(t, starters);
    let decided: Vec<(usize, ProcessId, Value)> = outputs_in(t, class, |o| match o {
        Output::BcaDecide { v, .. } => Some(*v),
        _ => None,
    })
    .collect();

    let mut termination = PropertyReport::new("bca.termination", params, class);
    if proposed.len() == starters.len() {
        let done: ProcessSet = decided.iter().map(|(_, p, _)| *p).collect();
        let last = proposed.values().map(|(ts, _)| *ts).max().unwrap_or(0);
        for p in class - done {
            if t.complete {
                termination.violate(Witness::new(at(t, last), end(t), format!("{p} never decided")));
            } else {
                termination.inconclusive("trace incomplete");
            }
        }
    }

    let mut validity = PropertyReport::new("bca.validity", params, class);
    let values: Vec<Bit> = proposed.values().map(|(_, v)| *v).collect();
    if let Some((&p0, &(pts, v))) = proposed.iter().next().filter(|_| values.windows(2).all(|w| w[0] == w[1])) {
        for (ts, p, got) in &decided {
            if *got != Value::Bit(v) {
                validity.violate(Witness::new(
                    at(t, pts),
                    at(t, *ts),
                    format!("{p0} and all of depth {d_prime} proposed {v}, {p} decided {got}"),
                ));
            }
        }
    }

    let mut agreement = PropertyReport::new("bca.agreement", params, class);
    let bits: Vec<&(usize, ProcessId, Value)> = decided.iter().filter(|(_, _, v)| v.bit().is_some()).collect();
    for a in &bits {
        for b in &bits {
            if a.0 < b.0 && a.2 != b.2 {
                agreement.violate(Witness::new(
                    at(t, a.0),
                    at(t, b.0),
                    format!("{} decided {}, {} decided {}", a.1, a.2, b.1, b.2),
                ));
            }
        }
    }

    let echo3 = |p| {
        broadcasts(t, p, |m| match m {
            Message::BcaEcho3 { round, v } => Some((*round, *v)),
            _ => None,
        })
        .collect::<Vec<_>>()
    };
    let d5 = t.context.depth_class(ECHO3_DEPTH);
    let mut one_value = PropertyReport::new("bca.echo3_one_value", Params::d(ECHO3_DEPTH), d5);
    let sent: Vec<(ProcessId, usize, u32, Bit)> = d5
        .iter()
        .flat_map(|p| echo3(p).into_iter().filter_map(move |(ts, (r, v))| v.bit().map(|b| (p, ts, r, b))))
        .collect();
    for a in &sent {
        for b in &sent {
            if a.1 < b.1 && a.2 == b.2 && a.3 != b.3 {
                one_value.violate(Witness::new(
                    at(t, a.1),
                    at(t, b.1),
                    format!("{} sent ECHO3({}), {} sent ECHO3({})", a.0, a.3, b.0, b.3),
                ));
            }
        }
    }

    let correct = t.context.correct();
    let mut once = PropertyReport::new("bca.echo3_once", Params::d(0), correct);
    for p in correct {
        let mut first: BTreeMap<u32, (usize, Value)> = BTreeMap::new();
        for (ts, (r, v)) in echo3(p) {
            match first.get(&r) {
                Some((ts0, v0)) => once.violate(Witness::new(
                    at(t, *ts0),
                    at(t, ts),
                    format!("{p} sent ECHO3({v0}) and ECHO3({v}) in round {r}"),
                )),
                None => {
                    first.insert(r, (ts, v));
                }
            }
        }
    }
    Ok(vec![termination, validity, agreement, one_value, once])
}

fn check_enumeration(sc: &Scenario, ex: &Exploration, d_prime: u32, d: u32) -> Result<Vec<PropertyReport>, CheckError> {
    if sc.protocol != ProtocolKind::Bca {
        return Err(CheckError::WrongProtocol { expected: ProtocolKind::Bca, got: sc.protocol });
    }
    let ctx = ExecutionContext::new(&sc.quorums, &sc.fail_prone, sc.faults);
    let params = Params::pair(d_prime, d);
    let class = ctx.depth_class(d);
    let starters = ctx.depth_class(d_prime);
    let leaves = ex.terminal_outcomes.len() + ex.truncated_outcomes.len();
    let note = format!("{} states, {} interleavings, {leaves} distinct outcomes", ex.states, ex.interleavings);
    let leaf = EventRef::Path { point: 0, step: 0 };

    let mut termination = PropertyReport::new("bca.termination", params, class).with_detail(note.clone());
    if termination.verdict != Verdict::Vacuous {
        for outcome in ex.terminal_outcomes.keys() {
            if let Some(p) = class.iter().find(|p| outcome[p.index()].is_none()) {
                termination.violate(Witness::new(
                    leaf,
                    leaf,
                    format!("{p} undecided in quiescent outcome {}", show(outcome)),
                ));
            }
        }
        if !ex.complete() {
            termination.inconclusive("exploration cut off by the horizon");
        }
    }

    let mut validity = PropertyReport::new("bca.validity", params, class).with_detail(note.clone());
    let props: Vec<u8> = starters.iter().map(|p| sc.proposals[p.index()]).collect();
    if !props.is_empty() && props.windows(2).all(|w| w[0] == w[1]) {
        let v = Value::Bit(Bit::from_u8(props[0]).expect("validated proposals"));
        for outcome in ex.outcomes() {
            for p in class {
                if let Some(got) = outcome[p.index()].filter(|got| *got != v) {
                    validity.violate(Witness::new(
                        leaf,
                        leaf,
                        format!("all of depth {d_prime} proposed {v}, {p} decided {got}"),
                    ));
                }
            }
        }
    }

    let mut agreement = PropertyReport::new("bca.agreement", params, class).with_detail(note);
    for outcome in ex.outcomes() {
        let bits: Vec<Value> = class.iter().filter_map(|p| outcome[p.index()]).filter(|v| v.bit().is_some()).collect();
        if bits.contains(&Value::ZERO) && bits.contains(&Value::ONE) {
            agreement.violate(Witness::new(leaf, leaf, format!("outcome {}", show(outcome))));
        }
    }
    Ok(vec![termination, validity, agreement, binding(sc, ex, d)])
}

/// In every explored state where some depth-`d` process has decided, the
/// decisions depth-`d` processes can still reach do not include both bits.
fn binding(sc: &Scenario, ex: &Exploration, d: u32) -> PropertyReport {
    let ctx = ExecutionContext::new(&sc.quorums, &sc.fail_prone, sc.faults);
    let class = ctx.depth_class(d);
    let mut r = PropertyReport::new("bca.binding", Params::d(d), class);
    if r.verdict == Verdict::Vacuous {
        return r;
    }
    let mut checked = 0u64;
    for (i, point) in ex.decision_points.iter().enumerate() {
        if !class.iter().any(|p| point.decided[p.index()].is_some()) {
            continue;
        }
        checked += point.count;
        let reach: Vec<Value> = class.iter().flat_map(|p| decisions_of(point.reachable, p)).collect();
        if reach.contains(&Value::ZERO) && reach.contains(&Value::ONE) {
            r.violate(Witness::new(
                EventRef::Path { point: i, step: 0 },
                EventRef::Path { point: i, step: point.path.len() },
                format!("after decisions {}, depth-{d} processes can still decide both 0 and 1", show(&point.decided)),
            ));
        }
    }
    r.detail = format!("{checked} decided states, {} states explored", ex.states);
    if checked == 0 {
        r.inconclusive("no depth-d process decides in the explored graph");
    } else if !ex.complete() {
        r.inconclusive("exploration cut off by the horizon");
    }
    r
}

fn show(outcome: &[Option<Value>]) -> String {
    let parts: Vec<String> = outcome.iter().map(|v| v.map_or("-".into(), |v| v.to_string())).collect();
    format!("({})", parts.join(","))
}
