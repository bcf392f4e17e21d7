//! Verdicts, witnesses and their two renderings.

use std::fmt;

use depthlab_core::ProcessSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    /// The quantified depth class is empty.
    Vacuous,
    /// A liveness clause could not be decided on an incomplete trace.
    Inconclusive,
    Violated,
}

impl Verdict {
    /// Severity when combining: vacuous < holds < inconclusive < violated.
    pub fn severity(self) -> u8 {
        match self {
            Verdict::Vacuous => 0,
            Verdict::Holds => 1,
            Verdict::Inconclusive => 2,
            Verdict::Violated => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::Vacuous => "VACUOUS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Violated => "VIOLATED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point in the evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventRef {
    /// Event `ts` of the trace run with `seed`.
    Event { seed: u64, ts: usize },
    /// The end of the trace run with `seed`.
    End { seed: u64 },
    /// Delivery `step` on the path to decision point `point` of an exploration.
    Path { point: usize, step: usize },
}

impl fmt::Display for EventRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventRef::Event { seed, ts } => write!(f, "seed {seed} #{ts}"),
            EventRef::End { seed } => write!(f, "seed {seed} end"),
            EventRef::Path { point, step } => write!(f, "point {point} step {step}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub first: EventRef,
    pub second: EventRef,
    pub note: String,
}

impl Witness {
    pub fn new(first: EventRef, second: EventRef, note: impl Into<String>) -> Self {
        Witness { first, second, note: note.into() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Params {
    pub d: Option<u32>,
    pub d_prime: Option<u32>,
    pub tolerance: Option<f64>,
}

impl Params {
    pub fn d(d: u32) -> Self {
        Params { d: Some(d), ..Default::default() }
    }

    pub fn pair(d_prime: u32, d: u32) -> Self {
        Params { d: Some(d), d_prime: Some(d_prime), tolerance: None }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(d) = self.d_prime {
            parts.push(format!("d'={d}"));
        }
        if let Some(d) = self.d {
            parts.push(format!("d={d}"));
        }
        if let Some(t) = self.tolerance {
            parts.push(format!("tol={t:.4}"));
        }
        f.write_str(&parts.join(","))
    }
}

/// Witnesses kept per report; further ones are only counted.
pub const MAX_WITNESSES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub params: Params,
    /// The quantified depth class, as given by the execution context.
    pub class: ProcessSet,
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

impl PropertyReport {
    /// A report that holds until told otherwise; vacuous if `class` is empty.
    pub fn new(property: &str, params: Params, class: ProcessSet) -> Self {
        let verdict = if class.is_empty() { Verdict::Vacuous } else { Verdict::Holds };
        PropertyReport {
            property: property.to_string(),
            verdict,
            params,
            class,
            witnesses: Vec::new(),
            detail: String::new(),
        }
    }

    pub fn violate(&mut self, w: Witness) {
        self.verdict = Verdict::Violated;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    /// Marks a liveness clause undecided unless something is already violated.
    pub fn inconclusive(&mut self, why: &str) {
        if self.verdict != Verdict::Violated {
            self.verdict = Verdict::Inconclusive;
            self.detail = why.to_string();
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// One line of the record format.
    pub fn record(&self) -> String {
        let witnesses: Vec<String> =
            self.witnesses.iter().map(|w| format!("{}>{}:{}", w.first, w.second, clean(&w.note))).collect();
        format!(
            "report\t{}\t{}\t{}\tclass={}\twitnesses={}\t{}",
            self.property,
            self.verdict,
            self.params,
            self.class,
            witnesses.join(";"),
            clean(&self.detail)
        )
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', ';'], " ")
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<26} {:<12} [{}] class {}", self.property, self.verdict.name(), self.params, self.class)?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        for w in &self.witnesses {
            write!(f, "\n    {} / {}: {}", w.first, w.second, w.note)?;
        }
        Ok(())
    }
}

pub const REPORT_MAGIC: &str = "# depthlab report v1";

/// Reports in the line-delimited record format, with a header line.
pub fn render_records(reports: &[PropertyReport]) -> String {
    let mut out = format!("{REPORT_MAGIC}\n");
    for r in reports {
        out.push_str(&r.record());
        out.push('\n');
    }
    out
}

/// Combines per-trace reports of the same property and parameters, in
/// order of first appearance.
///
/// The result is violated if any input is, else inconclusive if any is,
/// else holds if any does, else vacuous.
pub fn merge(reports: impl IntoIterator<Item = PropertyReport>) -> Vec<PropertyReport> {
    let mut out: Vec<(PropertyReport, [usize; 4])> = Vec::new();
    for r in reports {
        let slot = out.iter().position(|(m, _)| m.property == r.property && m.params == r.params);
        let (m, counts) = match slot {
            Some(i) => &mut out[i],
            None => {
                let mut m = r.clone();
                m.witnesses.clear();
                m.verdict = Verdict::Vacuous;
                out.push((m, [0; 4]));
                out.last_mut().unwrap()
            }
        };
        counts[r.verdict as usize] += 1;
        m.class = m.class | r.class;
        if r.verdict.severity() >= m.verdict.severity() {
            if r.verdict.severity() > m.verdict.severity() || m.detail.is_empty() {
                m.detail = r.detail.clone();
            }
            m.verdict = r.verdict;
        }
        for w in r.witnesses {
            if m.witnesses.len() < MAX_WITNESSES {
                m.witnesses.push(w);
            }
        }
    }
    out.into_iter()
        .map(|(mut m, counts)| {
            let total: usize = counts.iter().sum();
            if total > 1 {
                let tally = format!(
                    "holds {}, vacuous {}, inconclusive {}, violated {} of {total}",
                    counts[0], counts[1], counts[2], counts[3]
                );
                m.detail = if m.detail.is_empty() { tally } else { format!("{tally}; {}", m.detail) };
            }
            m
        })
        .collect()
}

/// Worst verdict of a set of reports, or `None` if it is empty.
pub fn worst(reports: &[PropertyReport]) -> Option<Verdict> {
    reports.iter().map(|r| r.verdict).max_by_key(|v| v.severity())
}
