use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use depthlab_cli::fixtures::{bundle, write_bundle, LAYERED_CHAIN};
use depthlab_core::{
    canonical_quorums, depth_map, fixtures, parse_system, verify_availability, verify_consistency, Depth,
};

fn depthlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn bundled() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path()).unwrap();
    let root = dir.path().to_path_buf();
    (dir, root)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn committed_fixtures_match_the_generator() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (rel, text) in bundle() {
        let on_disk = std::fs::read_to_string(root.join(&rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        assert_eq!(on_disk, text, "{rel} is stale; regenerate with `depthlab fixtures`");
    }
}

#[test]
fn fixture_systems_round_trip() {
    for (rel, text) in bundle().into_iter().filter(|(r, _)| r.ends_with(".system")) {
        let sys = parse_system(&text).unwrap_or_else(|e| panic!("{rel}: {e}"));
        let again = parse_system(&depthlab_core::write_system(&sys)).unwrap();
        assert_eq!(sys.fail_prone, again.fail_prone, "{rel}");
    }
}

#[test]
fn layered_depth_comment_matches_the_fixpoint() {
    let (_d, root) = bundled();
    let text = std::fs::read_to_string(root.join(format!("layered_{LAYERED_CHAIN}.system"))).unwrap();
    let sys = parse_system(&text).unwrap();
    let qs = sys.quorum_system().unwrap();
    let l = fixtures::layered(LAYERED_CHAIN);
    let line = text.lines().find_map(|l| l.strip_prefix("# depths = ")).expect("depth comment");
    let shown: Vec<Depth> = line
        .split(',')
        .map(|d| match d {
            "inf" => Depth::Infinite,
            "bot" => Depth::Faulty,
            k => Depth::Finite(k.parse().unwrap()),
        })
        .collect();
    assert_eq!(shown, depth_map(&qs, l.faults));
    assert!(shown.contains(&Depth::Finite(0)) && shown.contains(&Depth::Finite(2)));
}

#[test]
fn threshold_7_2_quorums_are_consistent_and_available() {
    let (_d, root) = bundled();
    let sys = parse_system(&std::fs::read_to_string(root.join("threshold_7_2.system")).unwrap()).unwrap();
    let qs = canonical_quorums(&sys.fail_prone).unwrap();
    assert!(verify_consistency(&qs, &sys.fail_prone));
    assert!(verify_availability(&qs, &sys.fail_prone));
    // every quorum has exactly n - f members
    assert!(qs.distinct_quorums().iter().all(|q| q.len() == 5));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.system");
    std::fs::write(&bad, "n = 3\n[[process]]\nfail_prone = [[9]]\n").unwrap();
    let o = depthlab(&["analyze", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    assert_eq!(depthlab(&["analyze", "/nonexistent.system"]).status.code(), Some(2));
    assert_eq!(depthlab(&["run"]).status.code(), Some(2));
    let (_d, root) = bundled();
    let scn = root.join("scenarios/cc_n4.scn");
    assert_eq!(depthlab(&["run", s(&scn), "--seeds", "9..3"]).status.code(), Some(2));
}

#[test]
fn exit_codes_follow_the_verdicts() {
    let (_d, root) = bundled();
    let o = depthlab(&["run", s(&root.join("scenarios/fd_premature.scn")), "--records"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("report\trb.totality\tVIOLATED")));

    let o = depthlab(&["run", s(&root.join("scenarios/rb3_threshold7.scn")), "--seeds", "0..4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("VIOLATED"));

    // B3 failure is a negative result, not an input error
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("weak.system");
    let fears = "[[process]]\nfail_prone = [[1], [2], [3]]\n";
    std::fs::write(&sys, format!("n = 3\n{}", fears.repeat(3))).unwrap();
    let o = depthlab(&["analyze", s(&sys)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated"));
}

#[test]
fn analyze_records_are_tab_separated() {
    let (_d, root) = bundled();
    let o = depthlab(&["analyze", s(&root.join("threshold_4_1.system")), "--records"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().all(|l| l.starts_with("analyze\t")));
    let quorums: Vec<_> = out.lines().filter(|l| l.starts_with("analyze\tquorums\t")).collect();
    assert_eq!(quorums.len(), 4);
    assert!(out.contains("analyze\tb3\ttrue"));
}

#[test]
fn seed_ranges_write_one_trace_per_seed() {
    let (_d, root) = bundled();
    let out = tempfile::tempdir().unwrap();
    let o =
        depthlab(&["run", s(&root.join("scenarios/rb3_threshold7.scn")), "--seeds", "0..99", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traces = std::fs::read_dir(out.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "trace"))
        .count();
    assert_eq!(traces, 100);
    assert!(out.path().join("summary.txt").exists());
    let records = std::fs::read_to_string(out.path().join("reports.records")).unwrap();
    assert!(records.starts_with("# depthlab report v1\n"));
}

#[test]
fn replay_detects_edits() {
    let (_d, root) = bundled();
    let out = tempfile::tempdir().unwrap();
    let o = depthlab(&["run", s(&root.join("scenarios/cc_n4.scn")), "--seeds", "3", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(0));
    let trace = out.path().join("cc_n4-seed3.trace");
    let o = depthlab(&["replay", s(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&trace).unwrap();
    let (i, line) = text.lines().enumerate().find(|(_, l)| l.contains("\tsend\t") && l.contains("to=p3")).unwrap();
    let edited = text.replacen(line, &line.replace("to=p3", "to=p1"), 1);
    std::fs::write(&trace, edited).unwrap();
    let o = depthlab(&["replay", s(&trace)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("line {}", i + 1)), "{err}");
}

#[test]
fn explore_reports_binding() {
    let (_d, root) = bundled();
    let o = depthlab(&["explore", s(&root.join("scenarios/bca_split.scn")), "--records"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l.starts_with("report\tbca.binding\tHOLDS")));
    let o = depthlab(&["explore", s(&root.join("scenarios/cc_n4.scn"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fault_overrides_apply() {
    let (_d, root) = bundled();
    let o = depthlab(&["analyze", s(&root.join("fd.system")), "--faults", "5,6", "--records"]);
    let out = stdout(&o);
    assert!(out.contains("analyze\tguild\tnone"), "{out}");
    let o = depthlab(&["run", s(&root.join("scenarios/cc_n4.scn")), "--faults", "", "--records"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("class={1,2,3,4}"));
}
