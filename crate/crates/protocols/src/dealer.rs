//! Trusted dealer for the common coin.
//!
//! For every round r the dealer draws a coin c_r and, for every distinct
//! quorum Q of the system, an additive sharing of c_r over Q: the first
//! |Q| − 1 members get uniform bits and the last member gets whatever makes
//! the sum mod 2 equal c_r. Each share carries a provenance tag that receivers
//! check against the dealer; Byzantine processes cannot produce valid tags for
//! bits they were not dealt.

use std::collections::BTreeMap;

use depthlab_core::{ProcessId, ProcessSet, QuorumSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::message::Tag;
use crate::value::Bit;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoinTable {
    seed: u64,
    secret: [u8; 32],
    coins: Vec<Bit>,
    shares: BTreeMap<(u32, ProcessSet), BTreeMap<ProcessId, Bit>>,
    quorums: Vec<ProcessSet>,
}

pub fn dealer_setup(qs: &QuorumSystem, max_rounds: u32, seed: u64) -> CoinTable {
    assert!(max_rounds >= 1, "the dealer needs at least one round");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut secret = [0u8; 32];
    rng.fill(&mut secret);
    let quorums: Vec<ProcessSet> = qs.distinct_quorums().into_iter().filter(|q| !q.is_empty()).collect();
    let mut coins = Vec::with_capacity(max_rounds as usize);
    let mut shares = BTreeMap::new();
    for r in 1..=max_rounds {
        let c = if rng.gen::<bool>() { Bit::One } else { Bit::Zero };
        coins.push(c);
        for &q in &quorums {
            let members: Vec<ProcessId> = q.iter().collect();
            let mut sum = 0u8;
            let mut dealt = BTreeMap::new();
            for &p in &members[..members.len() - 1] {
                let b: u8 = rng.gen_range(0..=1);
                sum ^= b;
                dealt.insert(p, Bit::from_u8(b).unwrap());
            }
            let last = Bit::from_u8(sum ^ c.as_u8()).unwrap();
            dealt.insert(*members.last().unwrap(), last);
            shares.insert((r, q), dealt);
        }
    }
    CoinTable { seed, secret, coins, shares, quorums }
}

impl CoinTable {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_rounds(&self) -> u32 {
        self.coins.len() as u32
    }

    /// c_r, or `None` past the last dealt round.
    pub fn coin(&self, round: u32) -> Option<Bit> {
        round.checked_sub(1).and_then(|i| self.coins.get(i as usize)).copied()
    }

    /// Distinct nonempty quorums the coin is shared over.
    pub fn quorums(&self) -> &[ProcessSet] {
        &self.quorums
    }

    /// Every (Q, share) dealt to `p` for `round`.
    pub fn shares_of(&self, round: u32, p: ProcessId) -> Vec<(ProcessSet, Bit)> {
        self.quorums
            .iter()
            .filter(|q| q.contains(p))
            .filter_map(|q| self.share(round, *q, p).map(|s| (*q, s)))
            .collect()
    }

    pub fn share(&self, round: u32, q: ProcessSet, p: ProcessId) -> Option<Bit> {
        self.shares.get(&(round, q)).and_then(|m| m.get(&p)).copied()
    }

    pub fn tag(&self, round: u32, q: ProcessSet, owner: ProcessId, s: Bit) -> Tag {
        let mut h = Sha256::new();
        h.update(self.secret);
        h.update(round.to_le_bytes());
        h.update(q.bits().to_le_bytes());
        h.update([owner.0, s.as_u8()]);
        let digest = h.finalize();
        let mut out = [0u8; 8];
        out.copy_from_slice(&digest[..8]);
        Tag(out)
    }

    /// True iff `s` is the bit dealt to `owner` for (round, Q) and `tag` matches it.
    pub fn verify(&self, round: u32, q: ProcessSet, owner: ProcessId, s: Bit, tag: Tag) -> bool {
        self.share(round, q, owner) == Some(s) && self.tag(round, q, owner, s) == tag
    }
}
