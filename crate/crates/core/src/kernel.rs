//! Kernels: the minimal transversals of a quorum collection.

use crate::set::ProcessSet;
use crate::system::minimal_antichain;

/// All inclusion-minimal sets that intersect every quorum in `quorums`.
///
/// Incremental transversal construction: after each quorum `Q` is added,
/// every partial transversal that misses `Q` is extended by one member of
/// `Q`, and the result is pruned back to its minimal elements. The final
/// antichain is exactly the set of minimal hitting sets.
pub fn kernels(quorums: &[ProcessSet]) -> Vec<ProcessSet> {
    let mut partial = vec![ProcessSet::EMPTY];
    for &q in quorums {
        let mut next = Vec::with_capacity(partial.len() * 2);
        for &t in &partial {
            if t.intersects(q) {
                next.push(t);
            } else {
                next.extend(q.iter().map(|p| t.union(ProcessSet::singleton(p))));
            }
        }
        partial = minimal_antichain(next);
    }
    partial
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(labels: &[usize]) -> ProcessSet {
        ProcessSet::from_labels(labels.iter().copied())
    }

    /// Brute force over every subset of the union of quorums.
    fn oracle(quorums: &[ProcessSet]) -> Vec<ProcessSet> {
        let universe = quorums.iter().fold(ProcessSet::EMPTY, |a, q| a | *q);
        let hitting: Vec<ProcessSet> =
            universe.subsets().filter(|k| quorums.iter().all(|q| k.intersects(*q))).collect();
        let mut minimal: Vec<ProcessSet> =
            hitting.iter().copied().filter(|k| !hitting.iter().any(|h| h.is_strict_subset(*k))).collect();
        minimal.sort();
        minimal
    }

    #[test]
    fn fd_first_process_kernels() {
        let k = kernels(&[s(&[3, 4]), s(&[4, 5, 6])]);
        assert_eq!(k, vec![s(&[4]), s(&[3, 5]), s(&[3, 6])]);
    }

    #[test]
    fn single_quorum_gives_singletons() {
        assert_eq!(kernels(&[s(&[2, 5, 7])]), vec![s(&[2]), s(&[5]), s(&[7])]);
    }

    #[test]
    fn threshold_four_kernels_are_pairs() {
        let quorums: Vec<ProcessSet> = ProcessSet::full(4).subsets().filter(|q| q.len() == 3).collect();
        let k = kernels(&quorums);
        assert_eq!(k.len(), 6);
        assert!(k.iter().all(|x| x.len() == 2));
        assert_eq!(k, oracle(&quorums));
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(raw in proptest::collection::vec(1u64..256, 1..6)) {
            let quorums: Vec<ProcessSet> = raw.into_iter().map(ProcessSet::from_bits).collect();
            let got = kernels(&quorums);
            proptest::prop_assert_eq!(&got, &oracle(&quorums));
            for k in &got {
                proptest::prop_assert!(quorums.iter().all(|q| k.intersects(*q)));
                for p in k.iter() {
                    let smaller = k.difference(ProcessSet::singleton(p));
                    proptest::prop_assert!(quorums.iter().any(|q| !smaller.intersects(*q)));
                }
            }
        }
    }
}
