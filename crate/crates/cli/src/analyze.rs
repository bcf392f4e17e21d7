//! `depthlab analyze`: structure of one system file.

use depthlab_core::{
    b3_violation, check_q3, parse_system, symmetric_reduction, tolerated_system, verify_reduction, Depth,
    ExecutionContext, FormatError, KernelSystem, ProcessSet, TrustError,
};

/// One finding, as a record line and a human line.
#[derive(Clone, Debug)]
pub struct Finding {
    pub fields: Vec<String>,
    pub human: String,
}

fn finding(fields: &[&str], human: String) -> Finding {
    Finding { fields: fields.iter().map(|s| s.to_string()).collect(), human }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub findings: Vec<Finding>,
    /// B3 holds and every verification passed.
    pub ok: bool,
}

impl Analysis {
    pub fn records(&self) -> String {
        self.findings.iter().map(|f| format!("analyze\t{}\n", f.fields.join("\t"))).collect()
    }

    pub fn human(&self) -> String {
        self.findings.iter().map(|f| format!("{}\n", f.human)).collect()
    }
}

fn collection(sets: &[ProcessSet]) -> String {
    let parts: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn depth_text(d: Depth) -> String {
    match d {
        Depth::Faulty => "bot".into(),
        Depth::Finite(k) => k.to_string(),
        Depth::Infinite => "inf".into(),
    }
}

pub fn analyze(text: &str, faults: Option<ProcessSet>) -> Result<Analysis, FormatError> {
    let sys = parse_system(text)?;
    let fps = &sys.fail_prone;
    let n = fps.n();
    let mut out = vec![finding(&["n", &n.to_string()], format!("n = {n}"))];
    if let Some(f) = faults {
        if !f.is_subset(ProcessSet::full(n)) {
            return Err(FormatError::Invalid(format!("faults {f} name processes outside 1..={n}")));
        }
    }
    if let Some(w) = b3_violation(fps) {
        out.push(finding(&["b3", "false", &w.to_string()], format!("B3: violated ({w})")));
        return Ok(Analysis { findings: out, ok: false });
    }
    out.push(finding(&["b3", "true"], "B3: holds".into()));

    let qs = sys.quorum_system()?;
    let origin = if sys.quorums.is_some() { "explicit" } else { "canonical" };
    out.push(finding(&["quorum_origin", origin], format!("quorums ({origin}):")));
    for p in qs.processes() {
        let text = collection(qs.of(p));
        out.push(finding(&["quorums", &p.to_string(), &text], format!("  Q{} = {text}", p.label())));
    }
    let ks = KernelSystem::from_quorums(&qs);
    out.push(finding(
        &["kernel_count", &qs.processes().map(|p| ks.of(p).len()).sum::<usize>().to_string()],
        "kernels:".into(),
    ));
    for p in qs.processes() {
        let text = collection(ks.of(p));
        out.push(finding(&["kernels", &p.to_string(), &text], format!("  K{} = {text}", p.label())));
    }

    let mut ok = true;
    match faults {
        Some(f) => {
            let ctx = ExecutionContext::new(&qs, fps, f);
            out.push(finding(&["faults", &f.to_string()], format!("execution with F = {f}:")));
            for p in qs.processes() {
                let class = ctx.classification[p.index()].to_string();
                let depth = depth_text(ctx.depth(p));
                out.push(finding(
                    &["process", &p.to_string(), &class, &depth],
                    format!("  {p}: {class}, depth {depth}"),
                ));
            }
            let guild = ctx.maximal_guild.map_or("none".to_string(), |g| g.to_string());
            let human = match ctx.maximal_guild {
                Some(g) => format!("  maximal guild: {g}"),
                None => "  no guild".into(),
            };
            out.push(finding(&["guild", &guild], human));
        }
        None => match tolerated_system(&qs, fps) {
            Err(TrustError::TooLarge(_)) => {
                out.push(finding(
                    &["tolerated", "skipped"],
                    format!("tolerated system: skipped, n = {n} is too large to enumerate"),
                ));
            }
            Err(e) => return Err(e.into()),
            Ok(tolerated) => {
                let q3 = check_q3(n, &tolerated.sets);
                ok &= q3;
                let text = collection(&tolerated.sets);
                out.push(finding(
                    &["tolerated", &text, &format!("q3={q3}")],
                    format!("tolerated system: {text} (Q3 {})", holds(q3)),
                ));
                let reduction = symmetric_reduction(fps)?;
                let report = verify_reduction(fps)?;
                ok &= report.holds();
                let text = collection(&reduction.sets);
                let uncovered = report.uncovered.map_or("none".to_string(), |f| f.to_string());
                out.push(finding(
                    &[
                        "reduction",
                        &text,
                        &format!("q3={}", report.q3_witness.is_none()),
                        &format!("guild_executions={}", report.guild_executions),
                        &format!("uncovered={uncovered}"),
                    ],
                    format!(
                        "symmetric reduction: {text}\n  Q3 {}; {} fault sets admit a guild, uncovered: {uncovered}",
                        holds(report.q3_witness.is_none()),
                        report.guild_executions
                    ),
                ));
            }
        },
    }
    Ok(Analysis { findings: out, ok })
}

fn holds(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}
