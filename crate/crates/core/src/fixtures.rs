//! Bundled systems and generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::execution::Depth;
use crate::set::{ProcessId, ProcessSet};
use crate::structure::{canonical_quorums, check_b3};
use crate::system::{FailProneSystem, QuorumSystem};

fn s(labels: &[usize]) -> ProcessSet {
    ProcessSet::from_labels(labels.iter().copied())
}

/// The six-process system used for the RB[1] impossibility argument.
pub fn fd_fail_prone() -> FailProneSystem {
    let f12 = vec![s(&[1, 2, 5, 6]), s(&[1, 2, 3])];
    let f124 = vec![s(&[1, 2, 4])];
    FailProneSystem::new(6, vec![f12.clone(), f12, f124.clone(), vec![s(&[1, 2, 3])], f124.clone(), f124])
        .expect("fd system is well formed")
}

pub fn fd_quorums() -> QuorumSystem {
    canonical_quorums(&fd_fail_prone()).expect("fd system satisfies B3")
}

/// Every process fears every `f`-subset of 𝒫, written out explicitly per process.
pub fn threshold_fail_prone(n: usize, f: usize) -> FailProneSystem {
    let sets: Vec<ProcessSet> = ProcessSet::full(n).subsets().filter(|x| x.len() == f).collect();
    FailProneSystem::symmetric(n, sets).expect("threshold system is well formed")
}

/// A system whose depths are known by construction.
#[derive(Clone, Debug)]
pub struct Layered {
    pub fps: FailProneSystem,
    pub faults: ProcessSet,
    /// Expected depth of every process under `faults`.
    pub depths: Vec<Depth>,
}

/// Core of four processes (p1..p4) trusting any three of themselves, then a
/// chain c_1..c_k where the quorums of c_i are {c_{i+1}} ∪ T for a 3-subset T
/// of the core, and a faulty tail process that closes the chain.
///
/// With the tail faulty the core has infinite depth, c_i has depth k − i and
/// the tail has none. Every fail-prone set holds exactly one core process, so
/// B3 holds.
pub fn layered(chain: usize) -> Layered {
    let core = 4;
    let n = core + chain + 1;
    let tail = ProcessId((n - 1) as u8);
    let core_set = ProcessSet::full(core);
    let triples: Vec<ProcessSet> = core_set.subsets().filter(|x| x.len() == 3).collect();
    let all = ProcessSet::full(n);

    let mut per_process = Vec::with_capacity(n);
    let mut depths = Vec::with_capacity(n);
    for _ in 0..core {
        per_process.push(triples.iter().map(|t| all - *t).collect());
        depths.push(Depth::Infinite);
    }
    for i in 0..chain {
        let next = ProcessId((core + i + 1) as u8);
        let quorums = triples.iter().map(|t| *t | ProcessSet::singleton(next));
        per_process.push(quorums.map(|q| all - q).collect());
        depths.push(Depth::Finite((chain - 1 - i) as u32));
    }
    per_process.push(triples.iter().map(|t| all - *t).collect());
    depths.push(Depth::Faulty);

    Layered {
        fps: FailProneSystem::new(n, per_process).expect("layered system is well formed"),
        faults: ProcessSet::singleton(tail),
        depths,
    }
}

/// Random asymmetric fail-prone system on `n` processes satisfying B3.
///
/// Each process fears one to three random sets of size at most ⌈n/4⌉;
/// candidates are redrawn until B3 holds.
pub fn random_b3(n: usize, seed: u64) -> FailProneSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_size = n.div_ceil(4).max(1);
    let indices: Vec<usize> = (0..n).collect();
    loop {
        let per_process = (0..n)
            .map(|_| {
                let count = rng.gen_range(1..=3);
                (0..count)
                    .map(|_| {
                        let size = rng.gen_range(0..=max_size);
                        ProcessSet::from_indices(indices.choose_multiple(&mut rng, size).copied())
                    })
                    .collect()
            })
            .collect();
        let fps = FailProneSystem::new(n, per_process).expect("generated sets are in range");
        if check_b3(&fps) {
            return fps;
        }
    }
}
