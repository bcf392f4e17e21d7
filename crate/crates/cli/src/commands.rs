//! `run`, `replay` and `explore`.

use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use depthlab_core::ProcessSet;
use depthlab_properties::{
    check_bca, check_coin, check_consensus, check_monotonicity, check_rb, check_rb_chain, depths, merge, BcaEvidence,
    PropertyReport, Targets,
};
use depthlab_protocols::ProtocolKind;
use depthlab_sim::{
    explore, first_difference, run, scenario_of, Exploration, ExploreConfig, Scenario, SchedulePolicy, Trace,
};
use rayon::prelude::*;

/// Inclusive seed range written `A..B`, or a single seed.
pub fn parse_seeds(s: &str) -> Result<RangeInclusive<u64>, String> {
    let range = match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b:?}"))?;
            a..=b
        }
        None => {
            let a: u64 = s.trim().parse().map_err(|_| format!("bad seed {s:?}"))?;
            a..=a
        }
    };
    if range.is_empty() {
        return Err(format!("empty seed range {s:?}"));
    }
    Ok(range)
}

/// Comma-separated one-based process labels; empty means no faults.
pub fn parse_faults(s: &str) -> Result<ProcessSet, String> {
    let mut set = ProcessSet::EMPTY;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let label: usize = part.trim_start_matches('p').parse().map_err(|_| format!("bad process {part:?}"))?;
        let p = depthlab_core::ProcessId::from_label(label).ok_or_else(|| format!("bad process {part:?}"))?;
        set.insert(p);
    }
    Ok(set)
}

/// Command-line overrides of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub faults: Option<ProcessSet>,
    pub horizon: Option<u64>,
    pub schedule: Option<SchedulePolicy>,
}

impl Overrides {
    pub fn apply(&self, mut sc: Scenario) -> Result<Scenario> {
        if let Some(f) = self.faults {
            let strategy = sc.strategies.values().next().copied().unwrap_or(depthlab_sim::Strategy::Silent);
            sc = sc.with_faults(f, strategy);
        }
        if let Some(h) = self.horizon {
            sc.horizon = h;
        }
        if let Some(s) = self.schedule {
            sc.schedule = s;
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Which checks to run on an ensemble.
#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    /// Replaces the protocol's default depth d.
    pub depth: Option<u32>,
    pub targets: Targets,
}

/// The checkers matching the protocol of the traces, merged over the ensemble.
pub fn check(traces: &[Trace], opts: CheckOptions) -> Result<Vec<PropertyReport>> {
    let Some(first) = traces.first() else { return Ok(Vec::new()) };
    let reports = match first.scenario.protocol {
        ProtocolKind::Rb3 | ProtocolKind::RbPremature => {
            let default = if first.scenario.protocol == ProtocolKind::Rb3 { depths::RB } else { 1 };
            let d = opts.depth.unwrap_or(default);
            let mut all = Vec::new();
            for t in traces {
                all.extend(check_rb(t, d)?);
                all.extend(check_rb_chain(t)?);
            }
            let mut reports = merge(all);
            reports.push(check_monotonicity(traces, d, d + 1)?);
            reports
        }
        ProtocolKind::Cc => {
            let (d_prime, d) = match opts.depth {
                Some(d) => (d.saturating_sub(1), d),
                None => (depths::CC_RELEASE, depths::CC),
            };
            check_coin(traces, d_prime, d, None)?
        }
        ProtocolKind::Bca => {
            check_bca(&BcaEvidence::Traces(traces), depths::BCA_START, opts.depth.unwrap_or(depths::BCA))?
        }
        ProtocolKind::Consensus => check_consensus(traces, opts.depth.unwrap_or(depths::CONSENSUS), opts.targets)?,
    };
    Ok(reports)
}

pub struct RunOutcome {
    pub traces: Vec<Trace>,
    pub reports: Vec<PropertyReport>,
}

impl RunOutcome {
    /// Seeds whose run hit the horizon.
    pub fn exhausted(&self) -> Vec<u64> {
        self.traces.iter().filter(|t| !t.complete).map(|t| t.scenario.seed).collect()
    }
}

/// Runs `sc` for every seed in parallel, in seed order.
pub fn run_seeds(sc: &Scenario, seeds: RangeInclusive<u64>, opts: CheckOptions) -> Result<RunOutcome> {
    let seeds: Vec<u64> = seeds.collect();
    let traces = seeds.par_iter().map(|&s| run(&sc.clone().with_seed(s))).collect::<Result<Vec<_>, _>>()?;
    let reports = check(&traces, opts)?;
    Ok(RunOutcome { traces, reports })
}

pub fn trace_file_name(t: &Trace) -> String {
    format!("{}-seed{}.trace", t.scenario.name, t.scenario.seed)
}

pub fn write_traces(dir: &Path, traces: &[Trace]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for t in traces {
        let path = dir.join(trace_file_name(t));
        std::fs::write(&path, t.render()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub struct ReplayOutcome {
    pub trace: Trace,
    /// First differing line, one-based, with expected and actual text.
    pub divergence: Option<(usize, String, String)>,
    pub reports: Vec<PropertyReport>,
}

/// Re-executes the scenario embedded in `text` and compares byte for byte.
pub fn replay(text: &str, opts: CheckOptions) -> Result<ReplayOutcome> {
    let sc = scenario_of(text)?;
    let trace = run(&sc)?;
    let divergence = first_difference(text, &trace.render());
    let reports = check(std::slice::from_ref(&trace), opts)?;
    Ok(ReplayOutcome { trace, divergence, reports })
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub horizon: u64,
    pub state_cap: usize,
    pub reduce: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { horizon: u64::MAX, state_cap: 5_000_000, reduce: true }
    }
}

/// Every delivery order of a crusader agreement scenario, with the checks
/// that need them.
pub fn explore_bca(sc: &Scenario, opts: ExploreOptions) -> Result<(Exploration, Vec<PropertyReport>)> {
    if sc.protocol != ProtocolKind::Bca {
        bail!("explore supports bca scenarios, not {}", sc.protocol);
    }
    let cfg = ExploreConfig {
        horizon: opts.horizon,
        state_cap: opts.state_cap,
        watch: ProcessSet::full(sc.n()) - sc.faults,
        reduce: opts.reduce,
    };
    let ex = explore(sc, &cfg)?;
    let reports =
        check_bca(&BcaEvidence::Enumeration { scenario: sc, exploration: &ex }, depths::BCA_START, depths::BCA)?;
    Ok((ex, reports))
}
