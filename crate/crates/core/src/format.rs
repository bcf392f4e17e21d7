//! TOML system files.
//!
//! ```toml
//! n = 4
//! labels = ["a", "b", "c", "d"]   # optional
//!
//! [[process]]
//! fail_prone = [[4]]
//! quorums = [[1, 2, 3]]          # optional, all processes or none
//! ```
//!
//! Process numbers in files are one-based.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::TrustError;
use crate::set::ProcessSet;
use crate::structure::canonical_quorums;
use crate::system::{FailProneSystem, QuorumOrigin, QuorumSystem};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("process {process}: {message}")]
    Process { process: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Trust(#[from] TrustError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    process: Vec<RawProcess>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcess {
    fail_prone: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quorums: Option<Vec<Vec<usize>>>,
}

/// A parsed system file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemFile {
    pub labels: Option<Vec<String>>,
    pub fail_prone: FailProneSystem,
    /// Present only when the file lists quorums explicitly.
    pub quorums: Option<QuorumSystem>,
}

impl SystemFile {
    pub fn new(fail_prone: FailProneSystem) -> Self {
        SystemFile { labels: None, fail_prone, quorums: None }
    }

    pub fn n(&self) -> usize {
        self.fail_prone.n()
    }

    /// Explicit quorums if given, canonical ones otherwise.
    pub fn quorum_system(&self) -> Result<QuorumSystem, TrustError> {
        match &self.quorums {
            Some(q) => Ok(q.clone()),
            None => canonical_quorums(&self.fail_prone),
        }
    }

    /// Display name of a zero-based process index.
    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(l) => l[index].clone(),
            None => format!("p{}", index + 1),
        }
    }
}

/// Line and column (both one-based) of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn to_set(n: usize, process: usize, labels: &[usize]) -> Result<ProcessSet, FormatError> {
    for &l in labels {
        if l == 0 || l > n {
            return Err(FormatError::Process { process, message: format!("process number {l} outside 1..={n}") });
        }
    }
    Ok(ProcessSet::from_labels(labels.iter().copied()))
}

fn to_labels(set: ProcessSet) -> Vec<usize> {
    set.iter().map(|p| p.label()).collect()
}

pub fn parse_system(text: &str) -> Result<SystemFile, FormatError> {
    let raw: RawSystem = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        FormatError::Syntax { line, column, message: e.message().to_string() }
    })?;
    let n = raw.n;
    if n == 0 || n > crate::set::MAX_PROCESSES {
        return Err(TrustError::ProcessCount(n).into());
    }
    if raw.process.len() != n {
        return Err(FormatError::Invalid(format!("n = {n} but {} [[process]] tables given", raw.process.len())));
    }
    if let Some(labels) = &raw.labels {
        if labels.len() != n {
            return Err(FormatError::Invalid(format!("n = {n} but {} labels given", labels.len())));
        }
    }
    let explicit = raw.process.iter().filter(|p| p.quorums.is_some()).count();
    if explicit != 0 && explicit != n {
        return Err(FormatError::Invalid("quorums must be given for every process or for none".into()));
    }

    let mut fail_prone = Vec::with_capacity(n);
    let mut quorums = Vec::with_capacity(n);
    for (i, p) in raw.process.iter().enumerate() {
        let label = i + 1;
        fail_prone.push(p.fail_prone.iter().map(|s| to_set(n, label, s)).collect::<Result<Vec<_>, _>>()?);
        if let Some(qs) = &p.quorums {
            quorums.push(qs.iter().map(|s| to_set(n, label, s)).collect::<Result<Vec<_>, _>>()?);
        }
    }
    let fail_prone = FailProneSystem::new(n, fail_prone)?;
    let quorums = if explicit == n { Some(QuorumSystem::new(n, quorums, QuorumOrigin::Explicit)?) } else { None };
    Ok(SystemFile { labels: raw.labels, fail_prone, quorums })
}

/// Serializes in normal form; `parse_system` of the output is the identity.
pub fn write_system(sys: &SystemFile) -> String {
    let fps = &sys.fail_prone;
    let raw = RawSystem {
        n: fps.n(),
        labels: sys.labels.clone(),
        process: fps
            .processes()
            .map(|p| RawProcess {
                fail_prone: fps.of(p).iter().map(|s| to_labels(*s)).collect(),
                quorums: sys.quorums.as_ref().map(|q| q.of(p).iter().map(|s| to_labels(*s)).collect()),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("system serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fd_round_trip() {
        let sys = SystemFile::new(fixtures::fd_fail_prone());
        let text = write_system(&sys);
        let back = parse_system(&text).unwrap();
        assert_eq!(back, sys);
        assert_eq!(back.quorum_system().unwrap(), fixtures::fd_quorums());
    }

    #[test]
    fn explicit_quorums_round_trip() {
        let mut sys = SystemFile::new(fixtures::fd_fail_prone());
        let mut q = fixtures::fd_quorums();
        q = QuorumSystem::new(6, q.processes().map(|p| q.of(p).to_vec()).collect(), QuorumOrigin::Explicit).unwrap();
        sys.quorums = Some(q);
        sys.labels = Some((1..=6).map(|i| format!("node{i}")).collect());
        assert_eq!(parse_system(&write_system(&sys)).unwrap(), sys);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_system("n = 2\n[[process]]\nfail_prone = [[1,,2]]\n").unwrap_err();
        match err {
            FormatError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn out_of_range_label() {
        let err = parse_system("n = 2\n[[process]]\nfail_prone = [[3]]\n[[process]]\nfail_prone = [[]]\n").unwrap_err();
        assert!(matches!(err, FormatError::Process { process: 1, .. }));
    }

    #[test]
    fn partial_quorums_rejected() {
        let text = "n = 2\n[[process]]\nfail_prone = [[]]\nquorums = [[1,2]]\n[[process]]\nfail_prone = [[]]\n";
        assert!(matches!(parse_system(text), Err(FormatError::Invalid(_))));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
        assert_eq!(line_column("ab", 0), (1, 1));
    }
}
