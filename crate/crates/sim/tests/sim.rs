use std::collections::{BTreeMap, BTreeSet, HashMap};

use depthlab_core::{canonical_quorums, fixtures, ProcessId, ProcessSet};
use depthlab_protocols::{Bit, Context, Engine, Input, Message, Output, Payload, ProtocolKind, Value};
use depthlab_sim::Strategy;
use depthlab_sim::*;
use proptest::prelude::*;

fn pid(label: usize) -> ProcessId {
    ProcessId::from_label(label).unwrap()
}

fn set(labels: &[usize]) -> ProcessSet {
    labels.iter().map(|&l| pid(l)).collect()
}

fn threshold(n: usize, f: usize, kind: ProtocolKind) -> Scenario {
    let fps = fixtures::threshold_fail_prone(n, f);
    let qs = canonical_quorums(&fps).unwrap();
    Scenario::new("t", fps, qs, kind)
}

fn rb(n: usize, f: usize) -> Scenario {
    let mut sc = threshold(n, f, ProtocolKind::Rb3);
    sc.sender = Some(pid(1));
    sc
}

fn deliveries(t: &Trace) -> BTreeSet<ProcessId> {
    t.outputs().filter(|(_, _, o)| matches!(o, Output::Deliver { .. })).map(|(_, p, _)| p).collect()
}

/// Logical send and delivery times of every delivered envelope, by id.
fn delays(t: &Trace) -> Vec<(u64, u64, bool)> {
    let mut now = 0;
    let mut sent = HashMap::new();
    let mut out = Vec::new();
    for e in &t.events {
        match e {
            Event::Send { id, forged, .. } => {
                sent.insert(*id, (now, *forged));
            }
            Event::Deliver { id, .. } => {
                now += 1;
                let (at, forged) = sent[id];
                out.push((at, now, forged));
            }
            _ => {}
        }
    }
    out
}

#[test]
fn same_seed_same_trace() {
    let sc = rb(4, 1).with_faults(set(&[4]), Strategy::Equivocate);
    let mut sc = sc.with_seed(7);
    sc.schedule = SchedulePolicy::Random;
    let a = run(&sc).unwrap().render();
    let b = run(&sc).unwrap().render();
    assert_eq!(a, b);
}

#[test]
fn rb3_all_correct_random_schedule_delivers_everywhere() {
    for seed in 0..20 {
        let mut sc = rb(4, 1).with_seed(seed);
        sc.schedule = SchedulePolicy::Random;
        let t = run(&sc).unwrap();
        assert!(t.complete);
        assert_eq!(deliveries(&t), ProcessSet::full(4).iter().collect());
        for (_, _, o) in t.outputs() {
            assert_eq!(o, &Output::Deliver { m: Payload::from_text("m") });
        }
    }
}

#[test]
fn fifo_keeps_per_link_order() {
    let t = run(&rb(4, 1)).unwrap();
    let mut last: BTreeMap<(ProcessId, ProcessId), u64> = BTreeMap::new();
    for e in &t.events {
        if let Event::Deliver { id, from, to, .. } = e {
            if let Some(prev) = last.insert((*from, *to), *id) {
                assert!(prev < *id, "link {from}->{to} reordered");
            }
        }
    }
}

#[test]
fn random_schedules_differ_across_seeds() {
    let mut digests = BTreeSet::new();
    for seed in 0..100 {
        let mut sc = rb(4, 1).with_seed(seed);
        sc.schedule = SchedulePolicy::Random;
        // same scenario apart from the seed, so compare event lines only
        let t = run(&sc).unwrap();
        let body: Vec<String> = t.events.iter().enumerate().map(|(i, e)| e.render(i)).collect();
        digests.insert(body.join("\n"));
    }
    assert!(digests.len() >= 95, "only {} distinct schedules", digests.len());
}

#[test]
fn adversarial_schedule_respects_max_delay() {
    for seed in 0..30 {
        let mut sc = threshold(4, 1, ProtocolKind::Consensus).with_faults(set(&[4]), Strategy::Silent).with_seed(seed);
        sc.schedule = SchedulePolicy::Adversarial;
        sc.proposals = vec![0, 1, 1, 0];
        let t = run(&sc).unwrap();
        assert!(t.complete);
        for (sent, delivered, forged) in delays(&t) {
            if !forged {
                assert!(delivered - sent <= sc.max_delay, "seed {seed}: sent {sent}, delivered {delivered}");
            }
        }
    }
}

#[test]
fn delay_max_messages_wait_for_quiet() {
    let mut sc = rb(4, 1).with_faults(set(&[4]), Strategy::DelayMax);
    sc.schedule = SchedulePolicy::Random;
    let t = run(&sc).unwrap();
    let mut pending_correct = 0i64;
    let mut correct_ids = BTreeSet::new();
    for e in &t.events {
        match e {
            Event::Send { id, to, forged: false, .. } if *to != pid(4) => {
                correct_ids.insert(*id);
                pending_correct += 1;
            }
            Event::Deliver { id, from, .. } => {
                if correct_ids.contains(id) {
                    pending_correct -= 1;
                } else {
                    assert_eq!(*from, pid(4));
                    assert_eq!(pending_correct, 0, "delayed message overtook a correct one");
                }
            }
            _ => {}
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn links_are_reliable_and_faults_confined(
        seed in 0u64..1000,
        kind in 0usize..3,
        strategy in 0usize..3,
        schedule in 0usize..3,
    ) {
        let kind = [ProtocolKind::Rb3, ProtocolKind::Bca, ProtocolKind::Consensus][kind];
        let strategy = [Strategy::Silent, Strategy::Equivocate, Strategy::DelayMax][strategy];
        let mut sc = threshold(4, 1, kind).with_faults(set(&[1]), strategy).with_seed(seed);
        sc.sender = kind.is_rb().then(|| pid(1));
        sc.schedule = [SchedulePolicy::Fifo, SchedulePolicy::Random, SchedulePolicy::Adversarial][schedule];
        sc.proposals = vec![1, 0, 1, 0];
        let t = run(&sc).unwrap();
        let mut sends = HashMap::new();
        let mut delivered = BTreeSet::new();
        for e in &t.events {
            match e {
                Event::Send { id, from, to, msg, forged } => {
                    prop_assert_eq!(*forged, sc.faults.contains(*from));
                    sends.insert(*id, (*from, *to, msg.clone()));
                }
                Event::Deliver { id, from, to, msg } => {
                    prop_assert_eq!(sends.get(id), Some(&(*from, *to, msg.clone())));
                    prop_assert!(delivered.insert(*id), "delivered twice");
                    prop_assert!(!sc.faults.contains(*to));
                }
                Event::Output { p, .. } | Event::Input { p, .. } => prop_assert!(!sc.faults.contains(*p)),
                Event::Drop { .. } => {}
            }
        }
        if t.complete {
            for (id, (_, to, _)) in &sends {
                prop_assert!(sc.faults.contains(*to) || delivered.contains(id));
            }
        }
    }

    #[test]
    fn scripted_replay_reproduces_trace(seed in 0u64..1000, schedule in 0usize..3) {
        let mut sc = rb(4, 1).with_faults(set(&[1]), Strategy::Equivocate).with_seed(seed);
        sc.schedule = [SchedulePolicy::Fifo, SchedulePolicy::Random, SchedulePolicy::Adversarial][schedule];
        let original = run(&sc).unwrap();
        let mut replay = sc.clone().with_faults(sc.faults, Strategy::Scripted);
        replay.script = original.adversary_script();
        let again = run(&replay).unwrap();
        prop_assert_eq!(&original.events, &again.events);
    }
}

#[test]
fn horizon_cuts_the_run() {
    let mut sc = rb(4, 1);
    sc.horizon = 5;
    let t = run(&sc).unwrap();
    assert!(!t.complete);
    assert_eq!(t.delivered, 5);
    assert!(t.render().ends_with("# end incomplete delivered=5\n"));
}

#[test]
fn trace_header_round_trips_and_detects_tampering() {
    let mut sc = rb(4, 1).with_seed(3);
    sc.schedule = SchedulePolicy::Random;
    let text = run(&sc).unwrap().render();
    assert_eq!(scenario_of(&text).unwrap(), sc);
    let tampered = text.replacen("\"seed\":3", "\"seed\":4", 1);
    assert!(matches!(scenario_of(&tampered), Err(SimError::Header(_))));
    assert!(scenario_of("hello").is_err());

    let again = run(&scenario_of(&text).unwrap()).unwrap().render();
    assert_eq!(first_difference(&text, &again), None);
    let edited = text.replacen("\tdeliver\t", "\tdrop\t", 1);
    let (line, _, _) = first_difference(&text, &edited).unwrap();
    assert!(line > 5);
}

#[test]
fn coin_rounds_are_released_in_sequence() {
    let mut sc = threshold(4, 1, ProtocolKind::Cc).with_faults(set(&[4]), Strategy::Silent);
    sc.rounds = 3;
    let t = run(&sc).unwrap();
    assert!(t.complete);
    let mut releases = BTreeMap::<ProcessId, Vec<u32>>::new();
    for e in &t.events {
        if let Event::Input { p, input: Invocation::Release(r) } = e {
            releases.entry(*p).or_default().push(*r);
        }
    }
    assert_eq!(releases.len(), 3);
    assert!(releases.values().all(|r| r == &[1, 2, 3]));
    let coins = t.outputs().filter(|(_, _, o)| matches!(o, Output::Coin { .. })).count();
    assert_eq!(coins, 9);
}

fn split_view(kind: ProtocolKind, towards: ProcessSet) -> Scenario {
    let fps = fixtures::fd_fail_prone();
    let mut sc =
        Scenario::new("split_view", fps, fixtures::fd_quorums(), kind).with_faults(set(&[5, 6]), Strategy::Scripted);
    sc.sender = Some(pid(5));
    let m = Payload::from_text("0");
    let rule = |from, msg| ScriptRule { trigger: Trigger::At(0), from: pid(from), to: towards, msg };
    sc.script = vec![
        rule(5, Message::Send { m: m.clone() }),
        rule(5, Message::Echo { m: m.clone() }),
        rule(6, Message::Echo { m: m.clone() }),
        rule(5, Message::ReadyAfterEcho { r: 1, m: m.clone() }),
        rule(6, Message::ReadyAfterEcho { r: 1, m }),
    ];
    sc
}

/// What p4 receives from the faulty processes, what it sends and outputs.
fn view_of_p4(t: &Trace) -> Vec<String> {
    let p4 = pid(4);
    t.events
        .iter()
        .filter_map(|e| match e {
            Event::Deliver { from, to, msg, .. } if *to == p4 && t.scenario.faults.contains(*from) => {
                Some(format!("{from} {msg}"))
            }
            Event::Send { from, to, msg, .. } if *from == p4 && *to == p4 => Some(format!("sends {msg}")),
            Event::Output { p, out } if *p == p4 => Some(out.to_string()),
            _ => None,
        })
        .collect()
}

#[test]
fn premature_delivery_splits_depth_one_processes() {
    let e = run(&split_view(ProtocolKind::RbPremature, ProcessSet::full(6) - set(&[5, 6]))).unwrap();
    let e_prime = run(&split_view(ProtocolKind::RbPremature, set(&[2, 4]))).unwrap();
    assert!(deliveries(&e).contains(&pid(1)));
    let delivered = deliveries(&e_prime);
    assert!(delivered.contains(&pid(2)));
    assert!(!delivered.contains(&pid(1)));
    assert_eq!(view_of_p4(&e), view_of_p4(&e_prime));
    assert_eq!(e_prime.context.depth_class(1), set(&[1, 2]));
}

#[test]
fn scenario_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let system = dir.path().join("t.system");
    std::fs::write(
        &system,
        depthlab_core::write_system(&depthlab_core::SystemFile {
            labels: None,
            fail_prone: fixtures::threshold_fail_prone(4, 1),
            quorums: None,
        }),
    )
    .unwrap();
    let text = r#"
system = "t.system"
protocol = "bca"
proposals = [0, 0, 1, 1]
faults = [4]
schedule = "random"
seed = 5

[adversary]
strategy = "equivocate"
"#;
    let sc = parse_scenario(text, "bca", dir.path()).unwrap();
    let t = run(&sc).unwrap();
    assert!(t.complete);
    assert_eq!(t.scenario.faults, set(&[4]));
}

// exploration

fn bca(n: usize, f: usize, proposals: &[u8], faults: &[usize]) -> Scenario {
    let mut sc = threshold(n, f, ProtocolKind::Bca).with_faults(set(faults), Strategy::Silent);
    sc.proposals = proposals.to_vec();
    sc.config.bca_max_counter = 2;
    sc
}

fn cfg(sc: &Scenario, reduce: bool) -> ExploreConfig {
    ExploreConfig { horizon: u64::MAX, state_cap: 5_000_000, watch: ProcessSet::full(sc.n()) - sc.faults, reduce }
}

#[test]
fn two_pending_messages_two_interleavings() {
    let sc = threshold(4, 1, ProtocolKind::Bca);
    let (ctx, engines): (Context, Vec<Engine>) =
        depthlab_protocols::protocol_factory(sc.protocol, &sc.quorums, sc.factory_params()).unwrap();
    // nobody has proposed, so the echoes are only recorded
    let pending = vec![
        (pid(1), pid(2), Message::BcaEcho { round: 1, c: 1, v: Bit::Zero }),
        (pid(1), pid(3), Message::BcaEcho { round: 1, c: 1, v: Bit::Zero }),
    ];
    let ex = explore_from(&ctx, engines, ProcessSet::EMPTY, 1, vec![], pending, &cfg(&sc, false)).unwrap();
    assert_eq!(ex.interleavings, 2);
    assert_eq!(ex.states, 4);
    assert_eq!(ex.terminal_outcomes.values().sum::<u64>(), 1);
}

#[test]
fn identical_copies_are_one_choice() {
    let sc = threshold(4, 1, ProtocolKind::Bca);
    let (ctx, engines) = depthlab_protocols::protocol_factory(sc.protocol, &sc.quorums, sc.factory_params()).unwrap();
    let m = (pid(1), pid(2), Message::BcaEcho { round: 1, c: 1, v: Bit::Zero });
    let ex = explore_from(&ctx, engines, ProcessSet::EMPTY, 1, vec![], vec![m.clone(), m], &cfg(&sc, false)).unwrap();
    assert_eq!(ex.interleavings, 1);
}

#[test]
fn horizon_truncates_exploration() {
    let sc = bca(4, 1, &[0, 0, 1, 0], &[4]);
    let mut c = cfg(&sc, false);
    c.horizon = 6;
    let ex = explore(&sc, &c).unwrap();
    assert!(!ex.complete());
    assert!(ex.terminal_outcomes.is_empty());
}

#[test]
fn explosion_guard_stops_search() {
    let sc = bca(4, 1, &[0, 0, 1, 1], &[]);
    let mut c = cfg(&sc, true);
    c.state_cap = 1000;
    assert_eq!(explore(&sc, &c).unwrap_err(), SimError::Explosion(1000));
}

#[test]
fn exploration_needs_silent_faults() {
    let sc = bca(4, 1, &[0, 0, 1, 1], &[4]).with_faults(set(&[4]), Strategy::Equivocate);
    assert!(matches!(explore(&sc, &cfg(&sc, true)), Err(SimError::Unsupported(_))));
}

/// Reduced and full search agree on quiescent outcomes and reachable decisions.
#[test]
fn reduction_matches_full_search() {
    let mut sc = bca(4, 1, &[0, 0, 1, 0], &[4]);
    sc.config.bca_max_counter = 1;
    let full = explore(&sc, &cfg(&sc, false)).unwrap();
    let reduced = explore(&sc, &cfg(&sc, true)).unwrap();
    assert!(reduced.states < full.states);
    assert!(reduced.reduced > 0);
    assert_eq!(full.terminal_outcomes.keys().collect::<Vec<_>>(), reduced.terminal_outcomes.keys().collect::<Vec<_>>());
    assert_eq!(full.reachable, reduced.reachable);
}

fn compare_with_full_search(sc: &Scenario) {
    let mut c = cfg(sc, false);
    c.state_cap = 40_000_000;
    let full = explore(sc, &c).unwrap();
    let reduced = explore(sc, &cfg(sc, true)).unwrap();
    assert_eq!(full.terminal_outcomes.keys().collect::<Vec<_>>(), reduced.terminal_outcomes.keys().collect::<Vec<_>>());
    assert_eq!(full.reachable, reduced.reachable);
    let groups =
        |e: &Exploration| e.decision_points.iter().map(|d| (d.decided.clone(), d.reachable)).collect::<BTreeSet<_>>();
    assert!(groups(&reduced).is_subset(&groups(&full)));
}

#[test]
#[ignore = "full search over 18M states, about three minutes in release mode"]
fn reduction_matches_full_search_on_split_inputs() {
    compare_with_full_search(&bca(4, 1, &[0, 0, 1, 0], &[4]));
}

#[test]
#[ignore = "full search over 3M states"]
fn reduction_matches_full_search_on_unanimous_inputs() {
    let mut sc = bca(3, 0, &[1, 1, 1], &[]);
    sc.config.bca_max_counter = 1;
    compare_with_full_search(&sc);
}

#[test]
fn unanimous_bca_decides_in_every_order() {
    for v in [0u8, 1] {
        for faults in [&[][..], &[4][..]] {
            let sc = bca(4, 1, &[v; 4], faults);
            let ex = explore(&sc, &cfg(&sc, true)).unwrap();
            assert!(ex.complete());
            let want = Some(Value::Bit(Bit::from_u8(v).unwrap()));
            for outcome in ex.terminal_outcomes.keys() {
                for p in sc.quorums.processes().filter(|p| !sc.faults.contains(*p)) {
                    assert_eq!(outcome[p.index()], want);
                }
            }
        }
    }
}

#[test]
fn decision_points_carry_replayable_paths() {
    let sc = bca(4, 1, &[0, 1, 0, 0], &[4]);
    let ex = explore(&sc, &cfg(&sc, true)).unwrap();
    assert!(!ex.decision_points.is_empty());
    let (ctx, mut engines) =
        depthlab_protocols::protocol_factory(sc.protocol, &sc.quorums, sc.factory_params()).unwrap();
    for (p, input) in initial_inputs(&sc).into_iter().filter(|(p, _)| !sc.faults.contains(*p)) {
        engines[p.index()].step(&ctx, input);
    }
    let point = &ex.decision_points[0];
    for (from, to, msg) in &point.path {
        engines[to.index()].step(&ctx, Input::Receive { from: *from, msg: msg.clone() });
    }
    let decided: Vec<Option<Value>> = engines
        .iter()
        .map(|e| match e {
            Engine::Bca(b) => b.decided(),
            _ => None,
        })
        .collect();
    assert_eq!(decided, point.decided);
    for p in sc.quorums.processes() {
        if let Some(v) = point.decided[p.index()] {
            assert!(decisions_of(point.reachable, p).contains(&v));
        }
    }
}
