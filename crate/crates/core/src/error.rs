use thiserror::Error;

use crate::set::{ProcessId, ProcessSet, MAX_PROCESSES};
use crate::structure::B3Witness;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrustError {
    #[error("process count {0} outside 1..={max}", max = MAX_PROCESSES)]
    ProcessCount(usize),
    #[error("{what}: expected {expected} per-process collections, found {found}")]
    Arity { what: &'static str, expected: usize, found: usize },
    #[error("{what}: collection of {process} is empty")]
    EmptyCollection { what: &'static str, process: ProcessId },
    #[error("{what}: set {set} of {process} names a process outside the system")]
    OutOfRange { what: &'static str, process: ProcessId, set: ProcessSet },
    #[error("B3 violated: {0}")]
    B3Violation(B3Witness),
    #[error("exhaustive enumeration over 2^{0} fault sets refused (limit 2^{limit})", limit = crate::tolerated::EXHAUSTIVE_LIMIT)]
    TooLarge(usize),
    #[error("fail-prone and quorum systems disagree on n ({0} vs {1})")]
    Mismatch(usize, usize),
}
