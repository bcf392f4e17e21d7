//! Structural predicates over fail-prone and quorum systems.
//!
//! Every failed predicate comes with a witness naming the offending
//! processes and sets.

use std::fmt;

use serde::Serialize;

use crate::error::TrustError;
use crate::set::{ProcessId, ProcessSet};
use crate::system::{FailProneSystem, QuorumOrigin, QuorumSystem};

/// 𝒫 ⊆ F_i ∪ F_j ∪ F_ij for F_i ∈ ℱ_i, F_j ∈ ℱ_j, F_ij ∈ ℱ_i* ∩ ℱ_j*.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct B3Witness {
    pub i: ProcessId,
    pub j: ProcessId,
    pub f_i: ProcessSet,
    pub f_j: ProcessSet,
    pub f_ij: ProcessSet,
}

impl fmt::Display for B3Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i={} j={} F_i={} F_j={} F_ij={} cover all processes", self.i, self.j, self.f_i, self.f_j, self.f_ij)
    }
}

/// Q_i ∩ Q_j ⊆ F_ij for some F_ij ∈ ℱ_i* ∩ ℱ_j*.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyWitness {
    pub i: ProcessId,
    pub j: ProcessId,
    pub q_i: ProcessSet,
    pub q_j: ProcessSet,
    pub f_ij: ProcessSet,
}

impl fmt::Display for ConsistencyWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i={} j={} Q_i={} Q_j={} intersect inside F_ij={}", self.i, self.j, self.q_i, self.q_j, self.f_ij)
    }
}

/// F_i ∈ ℱ_i meets every quorum of p_i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AvailabilityWitness {
    pub i: ProcessId,
    pub f_i: ProcessSet,
}

impl fmt::Display for AvailabilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i={} F_i={} meets every quorum", self.i, self.f_i)
    }
}

/// Returns a violating triple if B³(𝔽) fails.
///
/// Only maximal sets need checking: F_i and F_j range over the stored
/// antichains, and the maximal elements of ℱ_i* ∩ ℱ_j* are the pairwise
/// intersections of stored sets.
pub fn b3_violation(fps: &FailProneSystem) -> Option<B3Witness> {
    let all = fps.all();
    for i in fps.processes() {
        for j in fps.processes() {
            let common = fps.common(i, j);
            for &f_i in fps.of(i) {
                for &f_j in fps.of(j) {
                    for &f_ij in &common {
                        if all.is_subset(f_i | f_j | f_ij) {
                            return Some(B3Witness { i, j, f_i, f_j, f_ij });
                        }
                    }
                }
            }
        }
    }
    None
}

pub fn check_b3(fps: &FailProneSystem) -> bool {
    b3_violation(fps).is_none()
}

/// Returns three sets (repetition allowed) from `sets` whose union is 𝒫.
pub fn q3_violation(n: usize, sets: &[ProcessSet]) -> Option<[ProcessSet; 3]> {
    let all = ProcessSet::full(n);
    for (a_idx, &a) in sets.iter().enumerate() {
        for (b_idx, &b) in sets.iter().enumerate().skip(a_idx) {
            for &c in sets.iter().skip(b_idx) {
                if all.is_subset(a | b | c) {
                    return Some([a, b, c]);
                }
            }
        }
    }
    None
}

/// Q³ for a symmetric fail-prone collection over a system of `n` processes.
/// An empty collection satisfies Q³ vacuously.
pub fn check_q3(n: usize, sets: &[ProcessSet]) -> bool {
    q3_violation(n, sets).is_none()
}

/// 𝒬_i = { 𝒫 ∖ F : F ∈ ℱ_i }.
pub fn canonical_quorums(fps: &FailProneSystem) -> Result<QuorumSystem, TrustError> {
    if let Some(w) = b3_violation(fps) {
        return Err(TrustError::B3Violation(w));
    }
    let n = fps.n();
    let per_process = fps.processes().map(|p| fps.of(p).iter().map(|f| f.complement(n)).collect()).collect();
    QuorumSystem::new(n, per_process, QuorumOrigin::Canonical)
}

fn aligned(qs: &QuorumSystem, fps: &FailProneSystem) {
    assert_eq!(qs.n(), fps.n(), "quorum and fail-prone systems must have the same n");
}

pub fn consistency_violation(qs: &QuorumSystem, fps: &FailProneSystem) -> Option<ConsistencyWitness> {
    aligned(qs, fps);
    for i in fps.processes() {
        for j in fps.processes() {
            let common = fps.common(i, j);
            for &q_i in qs.of(i) {
                for &q_j in qs.of(j) {
                    let meet = q_i & q_j;
                    if let Some(&f_ij) = common.iter().find(|f| meet.is_subset(**f)) {
                        return Some(ConsistencyWitness { i, j, q_i, q_j, f_ij });
                    }
                }
            }
        }
    }
    None
}

pub fn verify_consistency(qs: &QuorumSystem, fps: &FailProneSystem) -> bool {
    consistency_violation(qs, fps).is_none()
}

pub fn availability_violation(qs: &QuorumSystem, fps: &FailProneSystem) -> Option<AvailabilityWitness> {
    aligned(qs, fps);
    for i in fps.processes() {
        for &f_i in fps.of(i) {
            if !qs.of(i).iter().any(|q| !q.intersects(f_i)) {
                return Some(AvailabilityWitness { i, f_i });
            }
        }
    }
    None
}

pub fn verify_availability(qs: &QuorumSystem, fps: &FailProneSystem) -> bool {
    availability_violation(qs, fps).is_none()
}
