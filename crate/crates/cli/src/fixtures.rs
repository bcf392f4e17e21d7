//! The bundled systems and scenarios.

use std::fmt::Write;
use std::path::Path;

use depthlab_core::{depth_map, fixtures, write_system, Depth, ProcessSet, SystemFile};

/// Chain length of the bundled layered system.
pub const LAYERED_CHAIN: usize = 3;

fn depth_text(d: Depth) -> String {
    match d {
        Depth::Faulty => "bot".into(),
        Depth::Finite(k) => k.to_string(),
        Depth::Infinite => "inf".into(),
    }
}

fn system(comment: &str, sys: SystemFile) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push('\n');
    out + &write_system(&sys)
}

fn layered_system() -> String {
    let l = fixtures::layered(LAYERED_CHAIN);
    let qs = depthlab_core::canonical_quorums(&l.fps).expect("layered system satisfies B3");
    let computed = depth_map(&qs, l.faults);
    assert_eq!(computed, l.depths, "layered generator and depth fixpoint disagree");
    let depths: Vec<String> = computed.iter().map(|d| depth_text(*d)).collect();
    let comment = format!(
        "Core p1..p4, chain p5..p{}, faulty tail p{}.\nfaults = {}\ndepths = {}",
        4 + LAYERED_CHAIN,
        5 + LAYERED_CHAIN,
        labels(l.faults),
        depths.join(",")
    );
    system(&comment, SystemFile::new(l.fps))
}

fn labels(set: ProcessSet) -> String {
    let v: Vec<String> = set.iter().map(|p| p.label().to_string()).collect();
    format!("[{}]", v.join(", "))
}

const SPLIT_VIEW_SCRIPT: &str = r#"
[adversary]
strategy = "scripted"

# p5 and p6 behave towards p2 and p4 as in the run where p1 and p2 deliver,
# and send nothing to anybody else.
[[script]]
from = 5
to = [2, 4]
msg = "SEND(m=30)"

[[script]]
from = 5
to = [2, 4]
msg = "ECHO(m=30)"

[[script]]
from = 6
to = [2, 4]
msg = "ECHO(m=30)"

[[script]]
from = 5
to = [2, 4]
msg = "READYAFTERECHO[r=1](m=30)"

[[script]]
from = 6
to = [2, 4]
msg = "READYAFTERECHO[r=1](m=30)"
"#;

fn split_view(protocol: &str) -> String {
    format!(
        "# Byzantine p5 broadcasts 0 on the fd system; p1 and p2 have depth 1.\n\
         system = \"../fd.system\"\nprotocol = \"{protocol}\"\nfaults = [5, 6]\nsender = 5\npayload = \"0\"\n{SPLIT_VIEW_SCRIPT}"
    )
}

const RB3_THRESHOLD7: &str = r#"# Equivocating sender p1 and silent p7 on the n = 7, f = 2 threshold system.
system = "../threshold_7_2.system"
protocol = "rb3"
faults = [1, 7]
sender = 1
schedule = "random"

[adversary]
strategy = "silent"
per_process = { p1 = "equivocate" }
"#;

const CC_N4: &str = r#"# Ten coin rounds released in sequence with p4 silent.
system = "../threshold_4_1.system"
protocol = "cc"
faults = [4]
rounds = 10
schedule = "random"
"#;

const BCA_SPLIT: &str = r#"# Split inputs with p4 silent; small enough to enumerate every schedule.
system = "../threshold_4_1.system"
protocol = "bca"
faults = [4]
proposals = [0, 0, 1, 0]
schedule = "random"

[protocol_config]
bca_max_counter = 2
"#;

const BCA_UNANIMOUS: &str = r#"# Every process proposes 1.
system = "../threshold_4_1.system"
protocol = "bca"
proposals = [1, 1, 1, 1]
schedule = "random"

[protocol_config]
bca_max_counter = 2
"#;

const CONSENSUS_N4: &str = r#"# Unanimous inputs, p4 silent, adversarial delays.
system = "../threshold_4_1.system"
protocol = "consensus"
faults = [4]
proposals = [1, 1, 1, 1]
schedule = "adversarial"
"#;

const CONSENSUS_N4_SPLIT: &str = r#"# Split inputs, p4 silent, adversarial delays.
system = "../threshold_4_1.system"
protocol = "consensus"
faults = [4]
proposals = [0, 1, 1, 0]
schedule = "adversarial"
"#;

const MUTANT_RB: &str = r#"# Faulty sender p4 gets p1 alone to deliver; without the
# READYAFTERREADY amplification p2 and p3 never follow.
system = "../threshold_4_1.system"
protocol = "rb3"
faults = [4]
sender = 4

[mutations]
skip_rb_amplification = true

[adversary]
strategy = "scripted"

[[script]]
from = 4
to = [1, 2]
msg = "SEND(m=6d)"

[[script]]
from = 4
to = [1, 2]
msg = "ECHO(m=6d)"

[[script]]
from = 4
to = [1]
msg = "READYAFTERECHO[r=1](m=6d)"
"#;

const MUTANT_ECHO3: &str = r#"# Split inputs without the single-ECHO3 guard.
system = "../threshold_4_1.system"
protocol = "bca"
proposals = [0, 1, 1, 0]
schedule = "random"

[protocol_config]
bca_max_counter = 2

[mutations]
bca_echo3_multi_send = true
"#;

fn mutant_revive2() -> String {
    let n = 5 + LAYERED_CHAIN;
    let proposals: Vec<String> = (0..n).map(|i| (1 - i % 2).to_string()).collect();
    format!(
        "# Consensus on the layered system with REVIVE2 quorums ignored: chain\n\
         # processes too shallow to finish a round on their own are never revived.\n\
         system = \"../layered_{LAYERED_CHAIN}.system\"\nprotocol = \"consensus\"\nfaults = [{n}]\n\
         proposals = [{}]\nschedule = \"random\"\n\n[protocol_config]\nmax_rounds = 4\n\n[mutations]\nskip_revive2 = true\n",
        proposals.join(", ")
    )
}

/// Every bundled file as (relative path, contents).
pub fn bundle() -> Vec<(String, String)> {
    let threshold = |n, f| {
        system(
            &format!("Threshold system n = {n}, f = {f}: every process fears every {f}-subset."),
            SystemFile::new(fixtures::threshold_fail_prone(n, f)),
        )
    };
    vec![
        (
            "fd.system".into(),
            system(
                "Six-process system with depth-1 processes under faults {5,6}.",
                SystemFile::new(fixtures::fd_fail_prone()),
            ),
        ),
        ("threshold_4_1.system".into(), threshold(4, 1)),
        ("threshold_7_2.system".into(), threshold(7, 2)),
        (format!("layered_{LAYERED_CHAIN}.system"), layered_system()),
        ("scenarios/fd_premature.scn".into(), split_view("rb_premature")),
        ("scenarios/fd_rb3.scn".into(), split_view("rb3")),
        ("scenarios/rb3_threshold7.scn".into(), RB3_THRESHOLD7.into()),
        ("scenarios/cc_n4.scn".into(), CC_N4.into()),
        ("scenarios/bca_split.scn".into(), BCA_SPLIT.into()),
        ("scenarios/bca_unanimous.scn".into(), BCA_UNANIMOUS.into()),
        ("scenarios/consensus_n4.scn".into(), CONSENSUS_N4.into()),
        ("scenarios/consensus_n4_split.scn".into(), CONSENSUS_N4_SPLIT.into()),
        ("scenarios/mutant_rb_amplification.scn".into(), MUTANT_RB.into()),
        ("scenarios/mutant_echo3.scn".into(), MUTANT_ECHO3.into()),
        ("scenarios/mutant_revive2.scn".into(), mutant_revive2()),
    ]
}

/// Writes the bundle under `dir`, returning the written paths.
pub fn write_bundle(dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for (rel, text) in bundle() {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
