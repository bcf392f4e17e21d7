//! Post-hoc checkers for the depth-characterized definitions.
//!
//! Every checker reads its depth classes from the trace's execution context
//! and returns [`PropertyReport`]s. Liveness clauses on incomplete traces
//! are [`Verdict::Inconclusive`], never violated.

mod bca;
mod coin;
mod consensus;
mod rb;
mod report;
mod view;

use depthlab_protocols::ProtocolKind;
use thiserror::Error;

pub use bca::{check_bca, check_binding, BcaEvidence, ECHO3_DEPTH};
pub use coin::{check_coin, three_sigma};
pub use consensus::{check_consensus, Targets, ANCHOR_DEPTH, FINISH_DEPTH, REVIVED_DEPTH};
pub use rb::{check_monotonicity, check_rb, check_rb_chain};
pub use report::{merge, render_records, worst, EventRef, Params, PropertyReport, Verdict, Witness, REPORT_MAGIC};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("checker expects {expected} traces, got {got}")]
    WrongProtocol { expected: ProtocolKind, got: ProtocolKind },
    #[error("binding needs an enumeration of every extension, not sampled traces")]
    BindingNeedsEnumeration,
    #[error("{0}")]
    Parameters(String),
}

/// Depths at which the protocols are claimed correct.
pub mod depths {
    pub const RB: u32 = 3;
    pub const CC_RELEASE: u32 = 6;
    pub const CC: u32 = 7;
    pub const BCA_START: u32 = 2;
    pub const BCA: u32 = 6;
    pub const CONSENSUS: u32 = 9;
}
