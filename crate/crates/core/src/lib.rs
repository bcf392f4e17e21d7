//! Asymmetric Byzantine quorum structures.
//!
//! Processes are numbered from zero internally and displayed one-based.
//! Fail-prone collections are kept as maximal antichains and quorum or kernel
//! collections as minimal antichains.

pub mod error;
pub mod execution;
pub mod fixtures;
pub mod format;
pub mod kernel;
pub mod set;
pub mod structure;
pub mod system;
pub mod tolerated;

pub use error::TrustError;
pub use execution::{classify, depth_map, maximal_guild, Class, Depth, ExecutionContext};
pub use format::{parse_system, write_system, FormatError, SystemFile};
pub use kernel::kernels;
pub use set::{ProcessId, ProcessSet, MAX_PROCESSES};
pub use structure::{
    availability_violation, b3_violation, canonical_quorums, check_b3, check_q3, consistency_violation,
    verify_availability, verify_consistency, AvailabilityWitness, B3Witness, ConsistencyWitness,
};
pub use system::{FailProneSystem, KernelSystem, QuorumOrigin, QuorumSystem};
pub use tolerated::{symmetric_reduction, tolerated_system, verify_reduction, ReductionReport, ToleratedSystem};
