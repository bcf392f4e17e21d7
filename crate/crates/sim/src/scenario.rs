//! Scenario files and their resolved form.
//!
//! A scenario file is TOML. The system is referenced by a path relative to
//! the scenario file; everything else is inline:
//!
//! ```toml
//! system = "../systems/fd.system"
//! faults = [5, 6]
//! protocol = "rb_premature"
//! sender = 5
//! payload = "m"
//! schedule = "fifo"
//!
//! [adversary]
//! strategy = "scripted"
//!
//! [[script]]
//! from = 5
//! to = [2, 4]
//! msg = "SEND(m=6d)"
//! ```
//!
//! The resolved [`Scenario`] embeds the system itself and is what traces
//! carry in their header, so a trace replays without the original files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use depthlab_core::format::line_column;
use depthlab_core::{
    parse_system, verify_availability, verify_consistency, FailProneSystem, ProcessId, ProcessSet, QuorumSystem,
};
use depthlab_protocols::{
    dealer_setup, CoinTable, FactoryParams, Message, Mutations, Payload, ProtocolConfig, ProtocolKind,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SimError;

/// Default horizon in delivered messages.
pub const DEFAULT_HORIZON: u64 = 100_000;

/// Fairness bound used when a scenario does not set one: 10·n².
pub fn default_max_delay(n: usize) -> u64 {
    10 * (n as u64) * (n as u64)
}

/// Behaviour of one faulty process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Sends nothing.
    Silent,
    /// Runs the protocol, but every message it sends reaches a seeded half
    /// of the processes with its value flipped or payload altered.
    Equivocate,
    /// Runs the protocol honestly; its messages are delivered only when
    /// nothing else is pending.
    DelayMax,
    /// Sends exactly what the script says.
    Scripted,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Silent => "silent",
            Strategy::Equivocate => "equivocate",
            Strategy::DelayMax => "delay_max",
            Strategy::Scripted => "scripted",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "silent" => Ok(Strategy::Silent),
            "equivocate" => Ok(Strategy::Equivocate),
            "delay_max" => Ok(Strategy::DelayMax),
            "scripted" => Ok(Strategy::Scripted),
            other => Err(format!("unknown adversary strategy {other:?}")),
        }
    }
}

/// How the next message to deliver is picked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Oldest pending message first.
    Fifo,
    /// Uniformly random pending message.
    Random,
    /// Random, except that messages from one seeded victim among the correct
    /// processes are held back as long as the fairness bound allows.
    Adversarial,
}

impl SchedulePolicy {
    pub fn name(self) -> &'static str {
        match self {
            SchedulePolicy::Fifo => "fifo",
            SchedulePolicy::Random => "random",
            SchedulePolicy::Adversarial => "adversarial",
        }
    }
}

impl FromStr for SchedulePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(SchedulePolicy::Fifo),
            "random" => Ok(SchedulePolicy::Random),
            "adversarial" => Ok(SchedulePolicy::Adversarial),
            other => Err(format!("unknown schedule {other:?} (expected fifo, random or adversarial)")),
        }
    }
}

/// When a script rule fires.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Once `n` messages have been delivered.
    At(u64),
    /// Right after the first event matching the pattern.
    After(Pattern),
}

/// Matches trace events by kind, actor and a prefix of the message text.
/// Written `kind [actor [prefix]]`, with `*` as a wildcard actor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub kind: String,
    pub actor: Option<ProcessId>,
    pub prefix: String,
}

impl FromStr for Pattern {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or("empty pattern")?.to_string();
        if !["input", "send", "adversary", "deliver", "drop", "output"].contains(&kind.as_str()) {
            return Err(format!("unknown event kind {kind:?} in pattern"));
        }
        let actor = match parts.next() {
            None | Some("*") => None,
            Some(a) => Some(parse_process(a)?),
        };
        let prefix = parts.next().unwrap_or("").to_string();
        if parts.next().is_some() {
            return Err(format!("pattern {s:?} has more than three fields"));
        }
        Ok(Pattern { kind, actor, prefix })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        match self.actor {
            Some(a) => write!(f, " {a}")?,
            None => f.write_str(" *")?,
        }
        if !self.prefix.is_empty() {
            write!(f, " {}", self.prefix)?;
        }
        Ok(())
    }
}

fn parse_process(s: &str) -> Result<ProcessId, String> {
    let digits = s.strip_prefix('p').unwrap_or(s);
    digits.parse::<usize>().ok().and_then(ProcessId::from_label).ok_or_else(|| format!("bad process {s:?}"))
}

/// One adversary action: `from` sends `msg` to every process in `to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub trigger: Trigger,
    pub from: ProcessId,
    pub to: ProcessSet,
    pub msg: Message,
}

/// A fully resolved scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub fail_prone: FailProneSystem,
    pub quorums: QuorumSystem,
    /// Skip the consistency and availability checks on `quorums`.
    pub raw: bool,
    pub faults: ProcessSet,
    pub protocol: ProtocolKind,
    pub sender: Option<ProcessId>,
    pub payload: Payload,
    /// One input bit per process; entries of faulty processes feed their
    /// adversary engines, if any.
    pub proposals: Vec<u8>,
    /// Coin rounds released in sequence (coin protocol only).
    pub rounds: u32,
    /// Strategy of every faulty process, by index.
    pub strategies: BTreeMap<u8, Strategy>,
    pub script: Vec<ScriptRule>,
    pub schedule: SchedulePolicy,
    pub seed: u64,
    pub horizon: u64,
    pub max_delay: u64,
    /// Dealer seed; the run seed when absent.
    pub dealer_seed: Option<u64>,
    pub config: ProtocolConfig,
    pub mutations: Mutations,
}

impl Scenario {
    /// A scenario with no faults, FIFO schedule and default limits.
    pub fn new(name: &str, fail_prone: FailProneSystem, quorums: QuorumSystem, protocol: ProtocolKind) -> Self {
        let n = quorums.n();
        Scenario {
            name: name.to_string(),
            fail_prone,
            quorums,
            raw: false,
            faults: ProcessSet::EMPTY,
            protocol,
            sender: None,
            payload: Payload::from_text("m"),
            proposals: vec![0; n],
            rounds: 1,
            strategies: BTreeMap::new(),
            script: Vec::new(),
            schedule: SchedulePolicy::Fifo,
            seed: 0,
            horizon: DEFAULT_HORIZON,
            max_delay: default_max_delay(n),
            dealer_seed: None,
            config: ProtocolConfig::default(),
            mutations: Mutations::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.quorums.n()
    }

    /// Makes every process in `faults` faulty with `strategy`.
    pub fn with_faults(mut self, faults: ProcessSet, strategy: Strategy) -> Self {
        self.faults = faults;
        self.strategies = faults.iter().map(|p| (p.0, strategy)).collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn strategy(&self, p: ProcessId) -> Option<Strategy> {
        self.strategies.get(&p.0).copied()
    }

    /// Canonical JSON form, as embedded in trace headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| SimError::Header(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn dealer_rounds(&self) -> u32 {
        match self.protocol {
            ProtocolKind::Cc => self.rounds,
            _ => self.config.max_rounds,
        }
    }

    /// The dealer table this scenario's runs use.
    pub fn dealer(&self) -> Option<CoinTable> {
        self.protocol
            .needs_dealer()
            .then(|| dealer_setup(&self.quorums, self.dealer_rounds(), self.dealer_seed.unwrap_or(self.seed)))
    }

    pub fn factory_params(&self) -> FactoryParams {
        FactoryParams {
            sender: self.sender,
            dealer: self.dealer(),
            config: self.config.clone(),
            mutations: self.mutations.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.n();
        let bad = |msg: String| Err(SimError::Invalid(msg));
        if self.fail_prone.n() != n {
            return bad(format!("fail-prone system has {} processes, quorum system {n}", self.fail_prone.n()));
        }
        if !self.faults.is_subset(ProcessSet::full(n)) {
            return bad(format!("faults {} outside 1..={n}", self.faults));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.max_delay == 0 {
            return bad("max_delay must be at least 1".into());
        }
        if !self.raw
            && !(verify_consistency(&self.quorums, &self.fail_prone)
                && verify_availability(&self.quorums, &self.fail_prone))
        {
            return bad("quorum system fails consistency or availability (set raw = true to run anyway)".into());
        }
        if self.protocol.is_rb() {
            match self.sender {
                None => return bad(format!("{} needs a sender", self.protocol)),
                Some(s) if s.index() >= n => return bad(format!("sender {s} outside 1..={n}")),
                _ => {}
            }
        }
        if self.proposals.len() != n || self.proposals.iter().any(|&b| b > 1) {
            return bad(format!("proposals must be {n} bits"));
        }
        if self.protocol == ProtocolKind::Cc && self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.protocol == ProtocolKind::Consensus && self.config.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        let with_strategy: ProcessSet = self.strategies.keys().map(|&i| ProcessId(i)).collect();
        if with_strategy != self.faults {
            return bad(format!("strategies given for {with_strategy} but faults are {}", self.faults));
        }
        for rule in &self.script {
            if !self.faults.contains(rule.from) {
                return bad(format!("script sends from correct process {}", rule.from));
            }
            if !rule.to.is_subset(ProcessSet::full(n)) {
                return bad(format!("script recipients {} outside 1..={n}", rule.to));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    system: String,
    #[serde(default)]
    raw: bool,
    #[serde(default)]
    faults: Vec<usize>,
    protocol: String,
    sender: Option<usize>,
    payload: Option<String>,
    proposals: Option<Vec<u8>>,
    rounds: Option<u32>,
    #[serde(default)]
    adversary: RawAdversary,
    #[serde(default)]
    script: Vec<RawRule>,
    schedule: Option<String>,
    seed: Option<u64>,
    horizon: Option<u64>,
    max_delay: Option<u64>,
    dealer_seed: Option<u64>,
    #[serde(default)]
    protocol_config: ProtocolConfig,
    #[serde(default)]
    mutations: Mutations,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    strategy: String,
    #[serde(default)]
    per_process: BTreeMap<String, String>,
}

impl Default for RawAdversary {
    fn default() -> Self {
        RawAdversary { strategy: "silent".into(), per_process: BTreeMap::new() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    from: usize,
    to: Option<Vec<usize>>,
    msg: String,
    at: Option<u64>,
    after: Option<String>,
}

fn label_set(n: usize, labels: &[usize], what: &str) -> Result<ProcessSet, SimError> {
    for &l in labels {
        if l == 0 || l > n {
            return Err(SimError::Invalid(format!("{what}: process {l} outside 1..={n}")));
        }
    }
    Ok(ProcessSet::from_labels(labels.iter().copied()))
}

fn label(n: usize, l: usize, what: &str) -> Result<ProcessId, SimError> {
    match ProcessId::from_label(l) {
        Some(p) if l <= n => Ok(p),
        _ => Err(SimError::Invalid(format!("{what}: process {l} outside 1..={n}"))),
    }
}

/// Parses scenario text. `base` is the directory the system path is relative to.
pub fn parse_scenario(text: &str, name: &str, base: &Path) -> Result<Scenario, SimError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        SimError::Syntax { line, column, message: e.message().to_string() }
    })?;
    let system_path = base.join(&raw.system);
    let system_text =
        std::fs::read_to_string(&system_path).map_err(|e| SimError::Io(format!("{}: {e}", system_path.display())))?;
    let system = parse_system(&system_text).map_err(|e| SimError::System(format!("{}: {e}", system_path.display())))?;
    let quorums = system.quorum_system().map_err(|e| SimError::System(e.to_string()))?;
    let n = system.n();
    let protocol: ProtocolKind =
        raw.protocol.parse().map_err(|e: depthlab_protocols::ProtocolError| SimError::Invalid(e.to_string()))?;

    let mut sc = Scenario::new(name, system.fail_prone, quorums, protocol);
    sc.raw = raw.raw;
    let faults = label_set(n, &raw.faults, "faults")?;
    let default: Strategy = raw.adversary.strategy.parse().map_err(SimError::Invalid)?;
    sc = sc.with_faults(faults, default);
    for (key, strategy) in &raw.adversary.per_process {
        let p = parse_process(key).map_err(SimError::Invalid)?;
        if !faults.contains(p) {
            return Err(SimError::Invalid(format!("adversary strategy given for correct process {p}")));
        }
        sc.strategies.insert(p.0, strategy.parse().map_err(SimError::Invalid)?);
    }
    sc.sender = raw.sender.map(|s| label(n, s, "sender")).transpose()?;
    if let Some(p) = raw.payload {
        sc.payload = Payload::from_text(&p);
    }
    if let Some(p) = raw.proposals {
        sc.proposals = p;
    }
    if let Some(r) = raw.rounds {
        sc.rounds = r;
    }
    for (i, rule) in raw.script.iter().enumerate() {
        let what = format!("script rule {}", i + 1);
        let trigger = match (rule.at, &rule.after) {
            (Some(_), Some(_)) => return Err(SimError::Invalid(format!("{what}: give at or after, not both"))),
            (at, None) => Trigger::At(at.unwrap_or(0)),
            (None, Some(p)) => Trigger::After(p.parse().map_err(|e| SimError::Invalid(format!("{what}: {e}")))?),
        };
        let to = match &rule.to {
            Some(to) => label_set(n, to, &what)?,
            None => ProcessSet::full(n),
        };
        let msg = rule.msg.parse().map_err(|e| SimError::Invalid(format!("{what}: {e}")))?;
        sc.script.push(ScriptRule { trigger, from: label(n, rule.from, &what)?, to, msg });
    }
    if let Some(s) = raw.schedule {
        sc.schedule = s.parse().map_err(SimError::Invalid)?;
    }
    if let Some(s) = raw.seed {
        sc.seed = s;
    }
    if let Some(h) = raw.horizon {
        sc.horizon = h;
    }
    if let Some(d) = raw.max_delay {
        sc.max_delay = d;
    }
    sc.dealer_seed = raw.dealer_seed;
    sc.config = raw.protocol_config;
    sc.mutations = raw.mutations;
    sc.validate()?;
    Ok(sc)
}

/// Loads a scenario file; its name is the file stem.
pub fn load_scenario(path: &Path) -> Result<Scenario, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, name, base)
}
