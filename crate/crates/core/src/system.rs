//! Fail-prone, quorum and kernel systems in antichain normal form.

use serde::{Deserialize, Serialize};

use crate::error::TrustError;
use crate::set::{ProcessId, ProcessSet, MAX_PROCESSES};

/// Keeps only the inclusion-maximal sets, sorted and deduplicated.
pub fn maximal_antichain(sets: impl IntoIterator<Item = ProcessSet>) -> Vec<ProcessSet> {
    let mut all: Vec<ProcessSet> = sets.into_iter().collect();
    all.sort();
    all.dedup();
    let keep: Vec<ProcessSet> = all.iter().copied().filter(|s| !all.iter().any(|t| s.is_strict_subset(*t))).collect();
    keep
}

/// Keeps only the inclusion-minimal sets, sorted and deduplicated.
pub fn minimal_antichain(sets: impl IntoIterator<Item = ProcessSet>) -> Vec<ProcessSet> {
    let mut all: Vec<ProcessSet> = sets.into_iter().collect();
    all.sort();
    all.dedup();
    let keep: Vec<ProcessSet> = all.iter().copied().filter(|s| !all.iter().any(|t| t.is_strict_subset(*s))).collect();
    keep
}

fn check_shape(n: usize, per_process: &[Vec<ProcessSet>], what: &'static str) -> Result<(), TrustError> {
    if n == 0 || n > MAX_PROCESSES {
        return Err(TrustError::ProcessCount(n));
    }
    if per_process.len() != n {
        return Err(TrustError::Arity { what, expected: n, found: per_process.len() });
    }
    let all = ProcessSet::full(n);
    for (i, sets) in per_process.iter().enumerate() {
        if sets.is_empty() {
            return Err(TrustError::EmptyCollection { what, process: ProcessId(i as u8) });
        }
        if let Some(bad) = sets.iter().find(|s| !s.is_subset(all)) {
            return Err(TrustError::OutOfRange { what, process: ProcessId(i as u8), set: *bad });
        }
    }
    Ok(())
}

/// 𝔽 = [ℱ_1, …, ℱ_n], each ℱ_i stored as its inclusion-maximal antichain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailProneSystem {
    n: usize,
    per_process: Vec<Vec<ProcessSet>>,
}

impl FailProneSystem {
    pub fn new(n: usize, per_process: Vec<Vec<ProcessSet>>) -> Result<Self, TrustError> {
        check_shape(n, &per_process, "fail-prone system")?;
        let per_process = per_process.into_iter().map(maximal_antichain).collect();
        Ok(FailProneSystem { n, per_process })
    }

    /// The same fail-prone collection for every process.
    pub fn symmetric(n: usize, sets: Vec<ProcessSet>) -> Result<Self, TrustError> {
        FailProneSystem::new(n, vec![sets; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n).map(|i| ProcessId(i as u8))
    }

    pub fn all(&self) -> ProcessSet {
        ProcessSet::full(self.n)
    }

    /// Maximal fail-prone sets of `p`.
    pub fn of(&self, p: ProcessId) -> &[ProcessSet] {
        &self.per_process[p.index()]
    }

    /// Membership in ℱ_p*, i.e. `set` is contained in some fail-prone set of `p`.
    pub fn foresees(&self, p: ProcessId, set: ProcessSet) -> bool {
        self.of(p).iter().any(|f| set.is_subset(*f))
    }

    /// Maximal elements of ℱ_i* ∩ ℱ_j*.
    pub fn common(&self, i: ProcessId, j: ProcessId) -> Vec<ProcessSet> {
        maximal_antichain(self.of(i).iter().flat_map(|a| self.of(j).iter().map(move |b| a.intersection(*b))))
    }
}

/// Where a quorum system came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumOrigin {
    Canonical,
    Explicit,
}

/// ℚ = [𝒬_1, …, 𝒬_n], each 𝒬_i stored as its inclusion-minimal antichain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuorumSystem {
    n: usize,
    per_process: Vec<Vec<ProcessSet>>,
    origin: QuorumOrigin,
}

impl QuorumSystem {
    pub fn new(n: usize, per_process: Vec<Vec<ProcessSet>>, origin: QuorumOrigin) -> Result<Self, TrustError> {
        check_shape(n, &per_process, "quorum system")?;
        let per_process = per_process.into_iter().map(minimal_antichain).collect();
        Ok(QuorumSystem { n, per_process, origin })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> QuorumOrigin {
        self.origin
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n).map(|i| ProcessId(i as u8))
    }

    pub fn of(&self, p: ProcessId) -> &[ProcessSet] {
        &self.per_process[p.index()]
    }

    /// True if `set` contains some quorum of `p`.
    pub fn has_quorum(&self, p: ProcessId, set: ProcessSet) -> bool {
        self.of(p).iter().any(|q| q.is_subset(set))
    }

    /// Every distinct quorum set over all processes, sorted.
    pub fn distinct_quorums(&self) -> Vec<ProcessSet> {
        let mut all: Vec<ProcessSet> = self.per_process.iter().flatten().copied().collect();
        all.sort();
        all.dedup();
        all
    }
}

/// 𝕂 = [𝒦_1, …, 𝒦_n]: minimal sets hitting every quorum of each process.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSystem {
    per_process: Vec<Vec<ProcessSet>>,
}

impl KernelSystem {
    pub fn from_quorums(qs: &QuorumSystem) -> Self {
        KernelSystem { per_process: qs.processes().map(|p| crate::kernel::kernels(qs.of(p))).collect() }
    }

    pub fn of(&self, p: ProcessId) -> &[ProcessSet] {
        &self.per_process[p.index()]
    }

    /// True if `set` contains some kernel of `p`.
    pub fn has_kernel(&self, p: ProcessId, set: ProcessSet) -> bool {
        self.of(p).iter().any(|k| k.is_subset(set))
    }
}
