use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use depthlab_cli::analyze::analyze;
use depthlab_cli::commands::{
    explore_bca, parse_faults, parse_seeds, replay, run_seeds, write_traces, CheckOptions, ExploreOptions, Overrides,
};
use depthlab_cli::fixtures::write_bundle;
use depthlab_core::ProcessSet;
use depthlab_properties::{render_records, PropertyReport, Targets, Verdict};
use depthlab_sim::{load_scenario, SchedulePolicy};

/// Depth-characterized protocols under asymmetric trust.
#[derive(Parser)]
#[command(name = "depthlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// B3, quorums and kernels of a system; depths and guild for --faults,
    /// otherwise the tolerated system and the symmetric reduction.
    Analyze {
        system: PathBuf,
        #[arg(long, value_parser = parse_faults)]
        faults: Option<ProcessSet>,
        /// Line-delimited records instead of text.
        #[arg(long)]
        records: bool,
    },
    /// Runs a scenario over a seed range and checks the matching properties.
    Run {
        scenario: PathBuf,
        /// Inclusive range A..B, or one seed; defaults to the scenario's seed.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<std::ops::RangeInclusive<u64>>,
        #[command(flatten)]
        common: Common,
        /// Least fraction of consensus runs that must fully decide.
        #[arg(long, default_value_t = 0.99)]
        termination: f64,
        /// Band LO..HI the mean consensus decision round must fall in.
        #[arg(long, value_parser = parse_band)]
        mean_round: Option<(f64, f64)>,
        /// Directory for traces, the summary and the report records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-executes a trace, compares it byte for byte and rechecks it.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        records: bool,
    },
    /// Enumerates every delivery order of a crusader agreement scenario.
    Explore {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_faults)]
        faults: Option<ProcessSet>,
        /// Deliveries per path; unlimited by default.
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 5_000_000)]
        state_cap: usize,
        /// Expand every pending delivery in every state.
        #[arg(long)]
        no_reduce: bool,
        #[arg(long)]
        records: bool,
    },
    /// Writes the bundled systems and scenarios.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = parse_faults)]
    faults: Option<ProcessSet>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<SchedulePolicy>,
    /// Checks at this depth instead of the protocol's.
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    records: bool,
}

fn parse_schedule(s: &str) -> Result<SchedulePolicy, String> {
    s.parse()
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let lo: f64 = a.parse().map_err(|_| format!("bad number {a:?}"))?;
    let hi: f64 = b.parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((lo, hi))
}

/// How a command ended, short of an input error.
enum Status {
    Clean,
    Violation,
}

fn print_reports(reports: &[PropertyReport], records: bool) -> Status {
    if records {
        print!("{}", render_records(reports));
    } else {
        for r in reports {
            println!("{r}");
        }
    }
    if reports.iter().any(|r| r.verdict == Verdict::Violated) {
        Status::Violation
    } else {
        Status::Clean
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn execute(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Analyze { system, faults, records } => {
            let text = read(&system)?;
            let a = analyze(&text, faults).with_context(|| system.display().to_string())?;
            print!("{}", if records { a.records() } else { a.human() });
            Ok(if a.ok { Status::Clean } else { Status::Violation })
        }
        Command::Run { scenario, seeds, common, termination, mean_round, out } => {
            let overrides = Overrides { faults: common.faults, horizon: common.horizon, schedule: common.schedule };
            let sc = overrides.apply(load_scenario(&scenario)?)?;
            let seeds = seeds.unwrap_or(sc.seed..=sc.seed);
            let opts = CheckOptions { depth: common.depth, targets: Targets { termination, mean_round } };
            let outcome = run_seeds(&sc, seeds.clone(), opts)?;
            let exhausted = outcome.exhausted();
            let mut summary = format!(
                "scenario {} ({}), seeds {}..{}: {} traces, {} hit the horizon\n",
                sc.name,
                sc.protocol,
                seeds.start(),
                seeds.end(),
                outcome.traces.len(),
                exhausted.len()
            );
            for s in &exhausted {
                summary.push_str(&format!("  seed {s}: horizon exhausted\n"));
            }
            if !common.records {
                print!("{summary}");
            }
            let status = print_reports(&outcome.reports, common.records);
            if let Some(dir) = out {
                write_traces(&dir, &outcome.traces)?;
                let human: Vec<String> = outcome.reports.iter().map(|r| r.to_string()).collect();
                std::fs::write(dir.join("summary.txt"), format!("{summary}{}\n", human.join("\n")))?;
                std::fs::write(dir.join("reports.records"), render_records(&outcome.reports))?;
            }
            Ok(status)
        }
        Command::Replay { trace, depth, records } => {
            let text = read(&trace)?;
            let outcome = replay(&text, CheckOptions { depth, targets: Targets::default() })?;
            let diverged = match &outcome.divergence {
                None => {
                    if !records {
                        println!(
                            "replay identical ({} events, digest {})",
                            outcome.trace.events.len(),
                            outcome.trace.digest()
                        );
                    }
                    false
                }
                Some((line, expected, actual)) => {
                    eprintln!("replay diverges at line {line}\n  trace:  {expected}\n  replay: {actual}");
                    true
                }
            };
            let status = print_reports(&outcome.reports, records);
            Ok(if diverged { Status::Violation } else { status })
        }
        Command::Explore { scenario, faults, horizon, state_cap, no_reduce, records } => {
            let overrides = Overrides { faults, horizon: None, schedule: None };
            let sc = overrides.apply(load_scenario(&scenario)?)?;
            let opts = ExploreOptions { horizon: horizon.unwrap_or(u64::MAX), state_cap, reduce: !no_reduce };
            let (ex, reports) = explore_bca(&sc, opts)?;
            if !records {
                println!(
                    "explored {} states, {} transitions, {} interleavings, {} quiescent outcomes, {} cut off",
                    ex.states,
                    ex.transitions,
                    ex.interleavings,
                    ex.terminal_outcomes.len(),
                    ex.truncated_outcomes.len()
                );
            }
            Ok(print_reports(&reports, records))
        }
        Command::Fixtures { out } => {
            for path in write_bundle(&out).with_context(|| format!("writing fixtures to {}", out.display()))? {
                println!("{}", path.display());
            }
            Ok(Status::Clean)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
