use depthlab_core::{canonical_quorums, fixtures, ProcessId, ProcessSet};
use depthlab_properties::*;
use depthlab_protocols::{Message, Output, Payload, ProtocolKind};
use depthlab_sim::{
    explore, run, Event, ExploreConfig, Scenario, SchedulePolicy, ScriptRule, Strategy, Trace, Trigger,
};
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

fn find<'a>(reports: &'a [PropertyReport], id: &str) -> &'a PropertyReport {
    reports.iter().find(|r| r.property == id).unwrap_or_else(|| panic!("no report {id}"))
}

fn verdict(reports: &[PropertyReport], id: &str) -> Verdict {
    find(reports, id).verdict
}

fn ensemble(sc: &Scenario, seeds: std::ops::Range<u64>) -> Vec<Trace> {
    seeds.map(|s| run(&sc.clone().with_seed(s)).unwrap()).collect()
}

// reliable broadcast

fn rb7() -> Scenario {
    let mut sc = threshold(7, 2, ProtocolKind::Rb3);
    sc.faults = set(&[1, 7]);
    sc.strategies = [(0, Strategy::Equivocate), (6, Strategy::Silent)].into();
    sc.sender = Some(pid(1));
    sc.schedule = SchedulePolicy::Random;
    sc
}

#[test]
fn rb3_holds_with_equivocating_sender() {
    for t in ensemble(&rb7(), 0..10) {
        let reports = check_rb(&t, depths::RB).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert_eq!(r.verdict, Verdict::Holds, "{r}");
            assert_eq!(r.class, t.context.depth_class(3));
        }
        for r in check_rb_chain(&t).unwrap() {
            assert_eq!(r.verdict, Verdict::Holds, "{r}");
        }
    }
}

#[test]
fn rb3_correct_sender_delivers_its_message() {
    let mut sc = rb7();
    sc.faults = set(&[6, 7]);
    sc.strategies = [(5, Strategy::Equivocate), (6, Strategy::DelayMax)].into();
    for t in ensemble(&sc, 0..5) {
        let reports = check_rb(&t, depths::RB).unwrap();
        assert!(find(&reports, "rb.validity").detail.is_empty());
        assert!(reports.iter().all(|r| r.verdict == Verdict::Holds));
    }
}

fn split_view(kind: ProtocolKind, towards: ProcessSet) -> Scenario {
    let mut sc = Scenario::new("split_view", fixtures::fd_fail_prone(), fixtures::fd_quorums(), kind)
        .with_faults(set(&[5, 6]), Strategy::Scripted);
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

#[test]
fn premature_delivery_breaks_totality_at_depth_one() {
    let t = run(&split_view(ProtocolKind::RbPremature, set(&[2, 4]))).unwrap();
    let reports = check_rb(&t, 1).unwrap();
    let totality = find(&reports, "rb.totality");
    assert_eq!(totality.verdict, Verdict::Violated);
    assert_eq!(totality.class, set(&[1, 2]));
    assert_eq!(totality.witnesses.len(), 1);
    let w = &totality.witnesses[0];
    assert_eq!(w.note, "p2 delivered, p1 did not");
    let EventRef::Event { ts, .. } = w.first else { panic!("{w:?}") };
    assert!(matches!(&t.events[ts], Event::Output { p, out: Output::Deliver { .. } } if *p == pid(2)));
    assert_eq!(w.second, EventRef::End { seed: t.scenario.seed });
}

#[test]
fn full_rb3_on_the_same_script_is_vacuous_at_depth_three() {
    for towards in [set(&[2, 4]), set(&[1, 2, 3, 4])] {
        let t = run(&split_view(ProtocolKind::Rb3, towards)).unwrap();
        for r in check_rb(&t, 3).unwrap() {
            assert_eq!(r.verdict, Verdict::Vacuous);
            assert!(r.class.is_empty());
        }
    }
}

#[test]
fn rb_checker_rejects_other_protocols() {
    let t = run(&threshold(4, 1, ProtocolKind::Cc)).unwrap();
    assert!(matches!(check_rb(&t, 3), Err(CheckError::WrongProtocol { .. })));
}

fn amplification_script(mutate: bool) -> Scenario {
    let mut sc = threshold(4, 1, ProtocolKind::Rb3).with_faults(set(&[4]), Strategy::Scripted);
    sc.sender = Some(pid(4));
    sc.mutations.skip_rb_amplification = mutate;
    let m = Payload::from_text("m");
    let rule = |to, msg| ScriptRule { trigger: Trigger::At(0), from: pid(4), to, msg };
    sc.script = vec![
        rule(set(&[1, 2]), Message::Send { m: m.clone() }),
        rule(set(&[1, 2]), Message::Echo { m: m.clone() }),
        rule(set(&[1]), Message::ReadyAfterEcho { r: 1, m }),
    ];
    sc
}

#[test]
fn dropping_amplification_breaks_totality() {
    let t = run(&amplification_script(false)).unwrap();
    assert!(check_rb(&t, 3).unwrap().iter().all(|r| r.verdict == Verdict::Holds));
    let t = run(&amplification_script(true)).unwrap();
    let reports = check_rb(&t, 3).unwrap();
    assert_eq!(verdict(&reports, "rb.totality"), Verdict::Violated);
    assert_eq!(verdict(&reports, "rb.consistency"), Verdict::Holds);
}

#[test]
fn incomplete_traces_leave_totality_open() {
    let mut sc = amplification_script(true);
    sc.horizon = 12;
    let t = run(&sc).unwrap();
    assert!(!t.complete);
    let reports = check_rb(&t, 3).unwrap();
    assert_ne!(verdict(&reports, "rb.totality"), Verdict::Violated);
}

#[test]
fn monotonicity_on_passing_and_empty_ensembles() {
    let traces = ensemble(&rb7(), 0..5);
    assert_eq!(check_monotonicity(&traces, 3, 4).unwrap().verdict, Verdict::Holds);
    let fd = vec![run(&split_view(ProtocolKind::Rb3, set(&[2, 4]))).unwrap()];
    assert_eq!(check_monotonicity(&fd, 3, 4).unwrap().verdict, Verdict::Vacuous);
    assert!(check_monotonicity(&traces, 4, 4).is_err());
}

#[test]
fn monotonicity_over_random_systems() {
    let mut checked = 0;
    for seed in 0..50 {
        let fps = fixtures::random_b3(6, seed);
        let Ok(qs) = canonical_quorums(&fps) else { continue };
        let faults = fps.of(pid(1)).first().copied().unwrap_or_default();
        let mut sc = Scenario::new("random", fps, qs, ProtocolKind::Rb3).with_faults(faults, Strategy::Equivocate);
        sc.sender = Some(pid(2));
        sc.schedule = SchedulePolicy::Random;
        let Ok(t) = run(&sc.with_seed(seed)) else { continue };
        checked += 1;
        let traces = [t];
        for d in 3..6 {
            let r = check_monotonicity(&traces, d, d + 1).unwrap();
            assert_ne!(r.verdict, Verdict::Violated, "system {seed}, d={d}: {r}");
        }
    }
    assert!(checked >= 40, "only {checked} systems ran");
}

// common coin

fn coin(rounds: u32) -> Scenario {
    let mut sc = threshold(4, 1, ProtocolKind::Cc).with_faults(set(&[4]), Strategy::Silent);
    sc.rounds = rounds;
    sc.schedule = SchedulePolicy::Random;
    sc
}

#[test]
fn coin_matches_terminates_and_stays_hidden() {
    let traces = ensemble(&coin(10), 0..20);
    let reports = check_coin(&traces, depths::CC_RELEASE, depths::CC, None).unwrap();
    for id in ["cc.termination", "cc.matching", "cc.unpredictability", "cc.no_bias"] {
        assert_eq!(verdict(&reports, id), Verdict::Holds, "{}", find(&reports, id));
    }
    let bias = find(&reports, "cc.no_bias");
    assert!((bias.params.tolerance.unwrap() - three_sigma(200)).abs() < 1e-12);
}

#[test]
fn an_early_coin_output_is_caught() {
    let mut t = run(&coin(1)).unwrap();
    let first_coin = t.events.iter().position(|e| matches!(e, Event::Output { out: Output::Coin { .. }, .. })).unwrap();
    let e = t.events.remove(first_coin);
    t.events.insert(0, e);
    let reports = check_coin(&[t], depths::CC_RELEASE, depths::CC, None).unwrap();
    assert_eq!(verdict(&reports, "cc.unpredictability"), Verdict::Violated);
}

#[test]
fn leaked_shares_are_caught() {
    // keep only the last release output: the shares of the two earlier
    // releasers and of faulty p4 then complete a quorum before it
    let mut t = run(&coin(1)).unwrap();
    let releases: Vec<usize> = t
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e, Event::Output { out: Output::Release { .. }, .. }))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(releases.len(), 3);
    for &i in releases[..2].iter().rev() {
        t.events.remove(i);
    }
    let reports = check_coin(&[t], depths::CC_RELEASE, depths::CC, None).unwrap();
    let r = find(&reports, "cc.unpredictability");
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(r.witnesses.iter().any(|w| w.note.contains("{1,2,4}")));
}

#[test]
fn biased_samples_fail_the_bias_check() {
    let traces = ensemble(&coin(5), 0..4);
    let reports = check_coin(&traces, depths::CC_RELEASE, depths::CC, Some(0.0)).unwrap();
    assert_eq!(verdict(&reports, "cc.no_bias"), Verdict::Violated);
}

// binding crusader agreement

fn bca(proposals: &[u8], faults: &[usize]) -> Scenario {
    let mut sc = threshold(4, 1, ProtocolKind::Bca).with_faults(set(faults), Strategy::Silent);
    sc.proposals = proposals.to_vec();
    sc.config.bca_max_counter = 2;
    sc
}

#[test]
fn bca_traces_agree_and_validate() {
    let mut sc = bca(&[0, 1, 1, 0], &[4]).with_faults(set(&[4]), Strategy::Equivocate);
    sc.schedule = SchedulePolicy::Random;
    let traces = ensemble(&sc, 0..30);
    let reports = check_bca(&BcaEvidence::Traces(&traces), depths::BCA_START, depths::BCA).unwrap();
    for r in &reports {
        assert_eq!(r.verdict, Verdict::Holds, "{r}");
    }
    assert_eq!(check_binding(&BcaEvidence::Traces(&traces), depths::BCA), Err(CheckError::BindingNeedsEnumeration));
}

#[test]
fn bca_unanimous_traces_decide_the_input() {
    let mut sc = bca(&[1, 1, 1, 1], &[]);
    sc.schedule = SchedulePolicy::Random;
    let traces = ensemble(&sc, 0..10);
    for t in &traces {
        assert!(t
            .outputs()
            .filter(|(_, _, o)| matches!(o, Output::BcaDecide { .. }))
            .all(|(_, _, o)| o.to_string().ends_with("(v=1)")));
    }
    let reports = check_bca(&BcaEvidence::Traces(&traces), depths::BCA_START, depths::BCA).unwrap();
    assert_eq!(verdict(&reports, "bca.validity"), Verdict::Holds);
}

#[test]
fn multi_send_mutation_breaks_single_echo3() {
    let run_with = |mutate: bool| {
        let mut sc = bca(&[0, 1, 1, 0], &[]);
        sc.schedule = SchedulePolicy::Random;
        sc.mutations.bca_echo3_multi_send = mutate;
        let traces = ensemble(&sc, 0..100);
        check_bca(&BcaEvidence::Traces(&traces), depths::BCA_START, depths::BCA).unwrap()
    };
    assert_eq!(verdict(&run_with(false), "bca.echo3_once"), Verdict::Holds);
    let mutated = run_with(true);
    let once = find(&mutated, "bca.echo3_once");
    assert_eq!(once.verdict, Verdict::Violated);
    assert!(!once.witnesses.is_empty());
}

#[test]
fn enumeration_checks_binding() {
    let sc = bca(&[0, 0, 1, 0], &[4]);
    let ex = explore(&sc, &ExploreConfig::full(ProcessSet::full(4) - sc.faults, 1_000_000)).unwrap();
    let evidence = BcaEvidence::Enumeration { scenario: &sc, exploration: &ex };
    let reports = check_bca(&evidence, depths::BCA_START, depths::BCA).unwrap();
    for r in &reports {
        assert_eq!(r.verdict, Verdict::Holds, "{r}");
    }
    assert_eq!(check_binding(&evidence, depths::BCA).unwrap().verdict, Verdict::Holds);
}

#[test]
fn enumeration_of_unanimous_inputs_validates() {
    let sc = bca(&[1, 1, 1, 1], &[4]);
    let ex = explore(&sc, &ExploreConfig::full(ProcessSet::full(4) - sc.faults, 1_000_000)).unwrap();
    let reports = check_bca(&BcaEvidence::Enumeration { scenario: &sc, exploration: &ex }, 2, 6).unwrap();
    assert!(reports.iter().all(|r| r.verdict == Verdict::Holds));
}

#[test]
fn truncated_enumeration_is_inconclusive() {
    let sc = bca(&[0, 0, 1, 0], &[4]);
    let mut cfg = ExploreConfig::full(ProcessSet::full(4) - sc.faults, 1_000_000);
    cfg.horizon = 8;
    cfg.reduce = false;
    let ex = explore(&sc, &cfg).unwrap();
    let reports = check_bca(&BcaEvidence::Enumeration { scenario: &sc, exploration: &ex }, 2, 6).unwrap();
    assert_eq!(verdict(&reports, "bca.termination"), Verdict::Inconclusive);
    assert_eq!(verdict(&reports, "bca.agreement"), Verdict::Holds);
}

// consensus

fn consensus(proposals: &[u8]) -> Scenario {
    let mut sc = threshold(4, 1, ProtocolKind::Consensus);
    sc.proposals = proposals.to_vec();
    sc.schedule = SchedulePolicy::Random;
    sc
}

#[test]
fn unanimous_consensus_decides_the_input() {
    let traces = ensemble(&consensus(&[1, 1, 1, 1]), 0..40);
    let reports =
        check_consensus(&traces, depths::CONSENSUS, Targets { termination: 1.0, mean_round: Some((1.0, 4.0)) })
            .unwrap();
    for r in &reports {
        assert_eq!(r.verdict, Verdict::Holds, "{r}");
    }
    for t in &traces {
        assert!(t
            .outputs()
            .filter(|(_, _, o)| matches!(o, Output::Decide { .. }))
            .all(|(_, _, o)| o.to_string().ends_with("(v=1)")));
    }
}

#[test]
fn split_consensus_under_adversarial_delay_agrees() {
    let mut sc = consensus(&[0, 1, 1, 0]).with_faults(set(&[4]), Strategy::Silent);
    sc.schedule = SchedulePolicy::Adversarial;
    let traces = ensemble(&sc, 0..40);
    let reports = check_consensus(&traces, depths::CONSENSUS, Targets::default()).unwrap();
    assert_eq!(verdict(&reports, "consensus.agreement"), Verdict::Holds);
    assert_eq!(verdict(&reports, "consensus.termination"), Verdict::Holds);
}

fn layered(mutate: bool) -> Scenario {
    let l = fixtures::layered(3);
    let qs = canonical_quorums(&l.fps).unwrap();
    let mut sc = Scenario::new("layered", l.fps, qs, ProtocolKind::Consensus).with_faults(l.faults, Strategy::Silent);
    sc.proposals = vec![1, 0, 1, 0, 1, 0, 1, 0];
    sc.mutations.skip_revive2 = mutate;
    sc.config.max_rounds = 4;
    sc.schedule = SchedulePolicy::Random;
    sc
}

#[test]
fn skipping_revive2_strands_shallow_processes() {
    let clean = ensemble(&layered(false), 0..10);
    let reports = check_consensus(&clean, depths::CONSENSUS, Targets::default()).unwrap();
    assert_eq!(verdict(&reports, "consensus.revival"), Verdict::Holds, "{}", find(&reports, "consensus.revival"));
    assert_eq!(verdict(&reports, "consensus.round_causality"), Verdict::Holds);

    let broken = ensemble(&layered(true), 0..10);
    let reports = check_consensus(&broken, depths::CONSENSUS, Targets::default()).unwrap();
    assert_eq!(verdict(&reports, "consensus.revival"), Verdict::Violated);
}

// report invariants

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reports_are_well_formed_and_stable(seed in 0u64..10_000, strategy in 0usize..3, d in 0u32..5) {
        let strategy = [Strategy::Silent, Strategy::Equivocate, Strategy::DelayMax][strategy];
        let mut sc = threshold(4, 1, ProtocolKind::Rb3).with_faults(set(&[1]), strategy).with_seed(seed);
        sc.sender = Some(pid(1));
        sc.schedule = SchedulePolicy::Random;
        let t = run(&sc).unwrap();
        let a = check_rb(&t, d).unwrap();
        prop_assert_eq!(&a, &check_rb(&t, d).unwrap());
        for r in a.iter().chain(&check_rb_chain(&t).unwrap()) {
            prop_assert_eq!(r.verdict == Verdict::Vacuous, r.class.is_empty());
            if r.verdict == Verdict::Violated {
                prop_assert!(!r.witnesses.is_empty());
            }
            prop_assert_eq!(r.record().lines().count(), 1);
        }
    }
}
