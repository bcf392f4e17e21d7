//! Common coin over an ensemble of coin traces.

use std::collections::BTreeMap;

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{Bit, Message, Output, ProtocolKind};
use depthlab_sim::{Event, Trace};

use crate::report::{merge, Params, PropertyReport, Witness};
use crate::view::{at, end, expect};
use crate::CheckError;

/// Three standard deviations of the frequency of ones in `samples` fair flips.
pub fn three_sigma(samples: usize) -> f64 {
    3.0 * (0.25 / samples as f64).sqrt()
}

/// Termination, Matching, No bias and structural Unpredictability for
/// release class `d_prime` and output class `d`.
///
/// The bias tolerance defaults to [`three_sigma`] of the sample count; one
/// sample is taken per trace and round.
pub fn check_coin(
    traces: &[Trace],
    d_prime: u32,
    d: u32,
    tolerance: Option<f64>,
) -> Result<Vec<PropertyReport>, CheckError> {
    let params = Params::pair(d_prime, d);
    let mut per_trace = Vec::new();
    let mut samples = Vec::new();
    for t in traces {
        expect(t, &[ProtocolKind::Cc])?;
        let starters = t.context.depth_class(d_prime);
        let class = t.context.depth_class(d);
        let released: BTreeMap<u32, Vec<(usize, ProcessId)>> =
            t.outputs().fold(BTreeMap::new(), |mut acc, (ts, p, o)| {
                if let Output::Release { round } = o {
                    acc.entry(*round).or_default().push((ts, p));
                }
                acc
            });
        let coins: BTreeMap<u32, Vec<(usize, ProcessId, Bit)>> =
            t.outputs().fold(BTreeMap::new(), |mut acc, (ts, p, o)| {
                if let Output::Coin { round, c } = o {
                    acc.entry(*round).or_default().push((ts, p, *c));
                }
                acc
            });

        let mut termination = PropertyReport::new("cc.termination", params, class);
        for round in 1..=t.scenario.rounds {
            let rel = released.get(&round).map(|v| v.iter().map(|(_, p)| *p).collect()).unwrap_or(ProcessSet::EMPTY);
            if !starters.is_subset(rel) {
                continue;
            }
            let got: ProcessSet =
                coins.get(&round).map(|v| v.iter().map(|(_, p, _)| *p).collect()).unwrap_or(ProcessSet::EMPTY);
            for p in class - got {
                if t.complete {
                    let last = released[&round].iter().map(|(ts, _)| *ts).max().unwrap_or(0);
                    termination.violate(Witness::new(
                        at(t, last),
                        end(t),
                        format!("{p} has no coin for round {round}"),
                    ));
                } else {
                    termination.inconclusive("trace incomplete");
                }
            }
        }

        let mut matching = PropertyReport::new("cc.matching", params, class);
        for (round, outs) in &coins {
            let mut outs = outs.iter().filter(|(_, p, _)| class.contains(*p));
            if let Some((ts, p, c)) = outs.next() {
                samples.push((at(t, *ts), *c));
                for (ts2, q, c2) in outs {
                    if c2 != c {
                        matching.violate(Witness::new(
                            at(t, *ts),
                            at(t, *ts2),
                            format!("round {round}: {p} output {c}, {q} output {c2}"),
                        ));
                    }
                }
            }
        }

        per_trace.extend([termination, matching, unpredictability(t, params, &released, &coins)]);
    }
    let mut reports = merge(per_trace);

    let tol = tolerance.unwrap_or_else(|| three_sigma(samples.len().max(1)));
    let class = traces.iter().fold(ProcessSet::EMPTY, |acc, t| acc | t.context.depth_class(d));
    let mut bias = PropertyReport::new("cc.no_bias", Params { tolerance: Some(tol), ..params }, class);
    if samples.is_empty() {
        bias.inconclusive("no coin output");
    } else {
        let ones = samples.iter().filter(|(_, c)| *c == Bit::One).count();
        let freq = ones as f64 / samples.len() as f64;
        bias.detail = format!("freq(1) = {freq:.4} over {} samples", samples.len());
        if (freq - 0.5).abs() >= tol {
            bias.violate(Witness::new(
                samples[0].0,
                samples[samples.len() - 1].0,
                format!("first and last sample; freq(1) = {freq:.4}"),
            ));
        }
    }
    reports.push(bias);
    Ok(reports)
}

/// Before the first release at a depth-`d′` process no quorum's shares are
/// all out, and no coin is output.
///
/// Shares of faulty processes count as out from the start; a correct
/// process's shares are out once it sent one.
fn unpredictability(
    t: &Trace,
    params: Params,
    released: &BTreeMap<u32, Vec<(usize, ProcessId)>>,
    coins: &BTreeMap<u32, Vec<(usize, ProcessId, Bit)>>,
) -> PropertyReport {
    let d_prime = params.d_prime.unwrap_or(0);
    let starters = t.context.depth_class(d_prime);
    let mut r = PropertyReport::new("cc.unpredictability", params, starters);
    let Some(dealer) = t.scenario.dealer() else {
        r.inconclusive("no dealer table");
        return r;
    };
    for round in 1..=t.scenario.rounds {
        let first_release =
            released.get(&round).and_then(|v| v.iter().find(|(_, p)| starters.contains(*p))).map(|(ts, _)| *ts);
        let cutoff = first_release.unwrap_or(t.events.len());
        if let Some((ts, p, _)) = coins.get(&round).and_then(|v| v.first()) {
            if *ts < cutoff {
                let other = first_release.map_or(end(t), |x| at(t, x));
                r.violate(Witness::new(at(t, *ts), other, format!("{p} output the round {round} coin first")));
            }
        }
        let mut out = t.context.faults;
        let mut last = 0;
        for (ts, e) in t.events[..cutoff].iter().enumerate() {
            if let Event::Send { from, msg: Message::Share { round: sr, .. }, .. } = e {
                if *sr == round && !out.contains(*from) {
                    out.insert(*from);
                    last = ts;
                }
            }
        }
        for q in dealer.quorums() {
            if q.is_subset(out) {
                let other = first_release.map_or(end(t), |x| at(t, x));
                r.violate(Witness::new(at(t, last), other, format!("all shares of {q} for round {round} were out")));
            }
        }
    }
    r
}
