//! Process identifiers and process sets.
//!
//! A system has at most [`MAX_PROCESSES`] processes, so every subset of
//! 𝒫 fits in one 64-bit mask and all set algebra is exact.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

use serde::{Deserialize, Serialize};

/// Hard cap on the number of processes in a system.
pub const MAX_PROCESSES: usize = 64;

/// Zero-based process index. Displayed one-based (`p1`, `p2`, ...).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessId(pub u8);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Builds an id from a one-based label as used in files and on the
    /// command line.
    pub fn from_label(label: usize) -> Option<Self> {
        if label == 0 || label > MAX_PROCESSES {
            None
        } else {
            Some(ProcessId((label - 1) as u8))
        }
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.label())
    }
}

/// A subset of 𝒫 stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessSet(u64);

impl ProcessSet {
    pub const EMPTY: ProcessSet = ProcessSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        ProcessSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// 𝒫 for a system of `n` processes.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES, "at most {MAX_PROCESSES} processes supported");
        if n == MAX_PROCESSES {
            ProcessSet(u64::MAX)
        } else {
            ProcessSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(p: ProcessId) -> Self {
        ProcessSet(1u64 << p.index())
    }

    /// Set from zero-based indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(ProcessSet::EMPTY, |acc, i| {
            assert!(i < MAX_PROCESSES, "process index {i} out of range");
            ProcessSet(acc.0 | (1u64 << i))
        })
    }

    /// Set from one-based labels (`{3, 4}` means p3 and p4).
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        ProcessSet::from_indices(labels.into_iter().map(|l| {
            assert!(l >= 1, "process labels are one-based");
            l - 1
        }))
    }

    pub fn contains(self, p: ProcessId) -> bool {
        self.0 & (1u64 << p.index()) != 0
    }

    pub fn insert(&mut self, p: ProcessId) {
        self.0 |= 1u64 << p.index();
    }

    pub fn remove(&mut self, p: ProcessId) {
        self.0 &= !(1u64 << p.index());
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: ProcessSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset(self, other: ProcessSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn intersects(self, other: ProcessSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: ProcessSet) -> ProcessSet {
        ProcessSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ProcessSet) -> ProcessSet {
        ProcessSet(self.0 & other.0)
    }

    pub fn difference(self, other: ProcessSet) -> ProcessSet {
        ProcessSet(self.0 & !other.0)
    }

    /// 𝒫 ∖ self for a system of `n` processes.
    pub fn complement(self, n: usize) -> ProcessSet {
        ProcessSet::full(n).difference(self)
    }

    /// Members in ascending index order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    /// All subsets of this set, in increasing mask order (starting with ∅).
    pub fn subsets(self) -> impl Iterator<Item = ProcessSet> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == mask { None } else { Some((current.wrapping_sub(mask)) & mask) };
            Some(ProcessSet(current))
        })
    }
}

impl BitOr for ProcessSet {
    type Output = ProcessSet;
    fn bitor(self, rhs: ProcessSet) -> ProcessSet {
        self.union(rhs)
    }
}

impl BitAnd for ProcessSet {
    type Output = ProcessSet;
    fn bitand(self, rhs: ProcessSet) -> ProcessSet {
        self.intersection(rhs)
    }
}

impl Sub for ProcessSet {
    type Output = ProcessSet;
    fn sub(self, rhs: ProcessSet) -> ProcessSet {
        self.difference(rhs)
    }
}

impl Not for ProcessSet {
    type Output = ProcessSet;
    fn not(self) -> ProcessSet {
        ProcessSet(!self.0)
    }
}

impl FromIterator<ProcessId> for ProcessSet {
    fn from_iter<I: IntoIterator<Item = ProcessId>>(iter: I) -> Self {
        let mut set = ProcessSet::EMPTY;
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl IntoIterator for ProcessSet {
    type Item = ProcessId;
    type IntoIter = Members;
    fn into_iter(self) -> Members {
        self.iter()
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = ProcessId;

    fn next(&mut self) -> Option<ProcessId> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(ProcessId(i as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Formats as `{1,2,5}` using one-based labels.
impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", p.label())?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
