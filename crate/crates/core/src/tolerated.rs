//! Tolerated systems and the symmetric reduction.
//!
//! Both operations enumerate every fault set F ⊆ 𝒫, so they are only
//! practical for small systems (n ≤ 16 or so).

use serde::Serialize;

use crate::error::TrustError;
use crate::execution::maximal_guild;
use crate::set::ProcessSet;
use crate::structure::{canonical_quorums, q3_violation};
use crate::system::{maximal_antichain, FailProneSystem, QuorumSystem};

/// Largest n accepted by the exhaustive operations.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Inclusion-maximal complements of maximal guilds over all executions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ToleratedSystem {
    pub n: usize,
    pub sets: Vec<ProcessSet>,
}

impl ToleratedSystem {
    /// Membership in the subset closure.
    pub fn covers(&self, faults: ProcessSet) -> bool {
        self.sets.iter().any(|t| faults.is_subset(*t))
    }
}

fn guard(n: usize) -> Result<(), TrustError> {
    if n > EXHAUSTIVE_LIMIT {
        Err(TrustError::TooLarge(n))
    } else {
        Ok(())
    }
}

/// Every fault set paired with its maximal guild, skipping executions without one.
pub fn guild_executions(qs: &QuorumSystem, fps: &FailProneSystem) -> Result<Vec<(ProcessSet, ProcessSet)>, TrustError> {
    if qs.n() != fps.n() {
        return Err(TrustError::Mismatch(fps.n(), qs.n()));
    }
    guard(fps.n())?;
    Ok(fps.all().subsets().filter_map(|f| maximal_guild(qs, fps, f).map(|g| (f, g))).collect())
}

pub fn tolerated_system(qs: &QuorumSystem, fps: &FailProneSystem) -> Result<ToleratedSystem, TrustError> {
    let all = fps.all();
    let executions = guild_executions(qs, fps)?;
    Ok(ToleratedSystem { n: fps.n(), sets: maximal_antichain(executions.into_iter().map(|(_, g)| all - g)) })
}

/// The tolerated system of the canonical quorums, read as one symmetric
/// fail-prone collection.
pub fn symmetric_reduction(fps: &FailProneSystem) -> Result<ToleratedSystem, TrustError> {
    tolerated_system(&canonical_quorums(fps)?, fps)
}

/// Outcome of rechecking the reduction by brute force.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub reduction: ToleratedSystem,
    /// Three tolerated sets covering 𝒫, if any.
    pub q3_witness: Option<[ProcessSet; 3]>,
    /// Number of fault sets that admit a guild.
    pub guild_executions: usize,
    /// A fault set with a guild that the reduction does not cover.
    pub uncovered: Option<ProcessSet>,
}

impl ReductionReport {
    pub fn holds(&self) -> bool {
        self.q3_witness.is_none() && self.uncovered.is_none()
    }
}

pub fn verify_reduction(fps: &FailProneSystem) -> Result<ReductionReport, TrustError> {
    let qs = canonical_quorums(fps)?;
    let executions = guild_executions(&qs, fps)?;
    let all = fps.all();
    let reduction = ToleratedSystem { n: fps.n(), sets: maximal_antichain(executions.iter().map(|(_, g)| all - *g)) };
    let uncovered = executions.iter().map(|(f, _)| *f).find(|f| !reduction.covers(*f));
    Ok(ReductionReport {
        q3_witness: q3_violation(fps.n(), &reduction.sets),
        guild_executions: executions.len(),
        uncovered,
        reduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn threshold_tolerates_singletons() {
        let fps = fixtures::threshold_fail_prone(4, 1);
        let t = symmetric_reduction(&fps).unwrap();
        let singles: Vec<ProcessSet> = (0..4).map(|i| ProcessSet::from_indices([i])).collect();
        assert_eq!(t.sets, singles);
        assert!(verify_reduction(&fps).unwrap().holds());
    }

    #[test]
    fn only_the_fault_free_execution_has_a_guild() {
        // F = ∅ makes every process wise and 𝒫 is a guild, so 𝒯 is never empty.
        let fps = FailProneSystem::symmetric(3, vec![ProcessSet::EMPTY]).unwrap();
        let t = symmetric_reduction(&fps).unwrap();
        assert_eq!(t.sets, vec![ProcessSet::EMPTY]);
        let r = verify_reduction(&fps).unwrap();
        assert_eq!(r.guild_executions, 1);
        assert!(r.holds());
    }

    #[test]
    fn fd_reduction_holds() {
        let r = verify_reduction(&fixtures::fd_fail_prone()).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn too_large() {
        let fps = FailProneSystem::symmetric(21, vec![ProcessSet::EMPTY]).unwrap();
        assert_eq!(symmetric_reduction(&fps), Err(TrustError::TooLarge(21)));
    }
}
