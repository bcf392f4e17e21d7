//! Per-execution structure: classification, depth and guilds for a fault set F.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::set::{ProcessId, ProcessSet};
use crate::system::{FailProneSystem, QuorumSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Faulty,
    Naive,
    Wise,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Faulty => "faulty",
            Class::Naive => "naive",
            Class::Wise => "wise",
        })
    }
}

pub fn classify(fps: &FailProneSystem, faults: ProcessSet) -> Vec<Class> {
    fps.processes()
        .map(|p| {
            if faults.contains(p) {
                Class::Faulty
            } else if fps.foresees(p, faults) {
                Class::Wise
            } else {
                Class::Naive
            }
        })
        .collect()
}

pub fn wise_set(fps: &FailProneSystem, faults: ProcessSet) -> ProcessSet {
    classify(fps, faults)
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == Class::Wise)
        .map(|(i, _)| ProcessId(i as u8))
        .collect()
}

/// Maximal depth of a process in one execution.
///
/// Ordered `Faulty < Finite(0) < Finite(1) < … < Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    /// Faulty processes have no depth.
    Faulty,
    Finite(u32),
    Infinite,
}

impl Depth {
    /// True if the process has depth at least `d` (and is therefore correct).
    pub fn at_least(self, d: u32) -> bool {
        match self {
            Depth::Faulty => false,
            Depth::Finite(k) => k >= d,
            Depth::Infinite => true,
        }
    }

    fn rank(self) -> (u8, u32) {
        match self {
            Depth::Faulty => (0, 0),
            Depth::Finite(k) => (1, k),
            Depth::Infinite => (2, 0),
        }
    }
}

impl PartialOrd for Depth {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Depth {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Faulty => f.write_str("bot"),
            Depth::Finite(k) => write!(f, "{k}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

/// Maximal depth of every process for the fault set `faults`.
///
/// Descending chain S_0 = 𝒫 ∖ F, S_{d+1} = {p ∈ S_0 : ∃Q ∈ 𝒬_p, Q ⊆ S_d}.
/// The chain only shrinks, so it stabilises within n steps; members of the
/// limit have infinite depth.
pub fn depth_map(qs: &QuorumSystem, faults: ProcessSet) -> Vec<Depth> {
    let n = qs.n();
    let correct = ProcessSet::full(n).difference(faults);
    let mut depths: Vec<Depth> =
        (0..n).map(|i| if correct.contains(ProcessId(i as u8)) { Depth::Finite(0) } else { Depth::Faulty }).collect();
    let mut level = correct;
    let mut d = 0u32;
    loop {
        let next: ProcessSet = correct.iter().filter(|p| qs.has_quorum(*p, level)).collect();
        if next == level {
            for p in level {
                depths[p.index()] = Depth::Infinite;
            }
            return depths;
        }
        d += 1;
        for p in next {
            depths[p.index()] = Depth::Finite(d);
        }
        level = next;
    }
}

/// The union of all guilds: greatest fixpoint of
/// G ↦ {p ∈ G : ∃Q ∈ 𝒬_p, Q ⊆ G} starting from the wise processes.
pub fn maximal_guild(qs: &QuorumSystem, fps: &FailProneSystem, faults: ProcessSet) -> Option<ProcessSet> {
    let mut guild = wise_set(fps, faults);
    loop {
        let next: ProcessSet = guild.iter().filter(|p| qs.has_quorum(*p, guild)).collect();
        if next == guild {
            break;
        }
        guild = next;
    }
    (!guild.is_empty()).then_some(guild)
}

/// Everything an outside observer derives from the actual fault set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionContext {
    pub faults: ProcessSet,
    pub classification: Vec<Class>,
    pub depths: Vec<Depth>,
    pub maximal_guild: Option<ProcessSet>,
}

impl ExecutionContext {
    pub fn new(qs: &QuorumSystem, fps: &FailProneSystem, faults: ProcessSet) -> Self {
        ExecutionContext {
            faults,
            classification: classify(fps, faults),
            depths: depth_map(qs, faults),
            maximal_guild: maximal_guild(qs, fps, faults),
        }
    }

    pub fn n(&self) -> usize {
        self.depths.len()
    }

    pub fn depth(&self, p: ProcessId) -> Depth {
        self.depths[p.index()]
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        !self.faults.contains(p)
    }

    pub fn correct(&self) -> ProcessSet {
        ProcessSet::full(self.n()).difference(self.faults)
    }

    /// Processes with depth at least `d`.
    pub fn depth_class(&self, d: u32) -> ProcessSet {
        self.depths.iter().enumerate().filter(|(_, depth)| depth.at_least(d)).map(|(i, _)| ProcessId(i as u8)).collect()
    }

    /// Largest finite depth present, or `Infinite` if some process lies in
    /// the fixpoint.
    pub fn max_depth(&self) -> Depth {
        self.depths.iter().copied().max().unwrap_or(Depth::Faulty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::structure::canonical_quorums;

    fn s(labels: &[usize]) -> ProcessSet {
        ProcessSet::from_labels(labels.iter().copied())
    }

    #[test]
    fn fd_classification_with_five_six_faulty() {
        let classes = classify(&fixtures::fd_fail_prone(), s(&[5, 6]));
        use Class::*;
        assert_eq!(classes, vec![Wise, Wise, Naive, Naive, Faulty, Faulty]);
    }

    #[test]
    fn empty_fault_set_makes_everyone_wise() {
        let classes = classify(&fixtures::fd_fail_prone(), ProcessSet::EMPTY);
        assert!(classes.iter().all(|c| *c == Class::Wise));
    }

    #[test]
    fn threshold_single_fault_classification() {
        let classes = classify(&fixtures::threshold_fail_prone(4, 1), s(&[4]));
        assert_eq!(&classes[..3], &[Class::Wise; 3]);
        assert_eq!(classes[3], Class::Faulty);
    }

    #[test]
    fn fd_depths() {
        let depths = depth_map(&fixtures::fd_quorums(), s(&[5, 6]));
        use Depth::*;
        assert_eq!(depths, vec![Finite(1), Finite(1), Finite(0), Finite(0), Faulty, Faulty]);
    }

    #[test]
    fn everyone_faulty() {
        let qs = fixtures::fd_quorums();
        let depths = depth_map(&qs, ProcessSet::full(6));
        assert!(depths.iter().all(|d| *d == Depth::Faulty));
        assert_eq!(maximal_guild(&qs, &fixtures::fd_fail_prone(), ProcessSet::full(6)), None);
    }

    #[test]
    fn threshold_depths_are_infinite() {
        let fps = fixtures::threshold_fail_prone(4, 1);
        let qs = canonical_quorums(&fps).unwrap();
        let depths = depth_map(&qs, s(&[4]));
        assert_eq!(&depths[..3], &[Depth::Infinite; 3]);
        assert_eq!(maximal_guild(&qs, &fps, s(&[4])), Some(s(&[1, 2, 3])));
    }

    #[test]
    fn fd_has_no_guild() {
        assert_eq!(maximal_guild(&fixtures::fd_quorums(), &fixtures::fd_fail_prone(), s(&[5, 6])), None);
    }

    #[test]
    fn depth_order() {
        assert!(Depth::Faulty < Depth::Finite(0));
        assert!(Depth::Finite(9) < Depth::Infinite);
        assert!(Depth::Infinite.at_least(1000));
        assert!(!Depth::Faulty.at_least(0));
    }

    #[test]
    fn context_depth_classes() {
        let ctx = ExecutionContext::new(&fixtures::fd_quorums(), &fixtures::fd_fail_prone(), s(&[5, 6]));
        assert_eq!(ctx.depth_class(0), s(&[1, 2, 3, 4]));
        assert_eq!(ctx.depth_class(1), s(&[1, 2]));
        assert!(ctx.depth_class(3).is_empty());
        assert_eq!(ctx.max_depth(), Depth::Finite(1));
    }
}
