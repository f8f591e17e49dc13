//! Brute-force Hamming matching with mutual-nearest-neighbor cross-check.

use super::Descriptor;

/// Hamming distance: popcount of the bitwise XOR, in `[0, 256]`.
pub fn hamming(a: &Descriptor, b: &Descriptor) -> u32 {
    a.words()
        .iter()
        .zip(b.words())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum()
}

/// One cross-checked match: descriptor `a` in the first set and `b` in the
/// second are mutual nearest neighbors at the given Hamming distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairMatch {
    pub a: usize,
    pub b: usize,
    pub hamming: u32,
}

/// The cross-checked result of brute-force matching; each index appears on
/// its side at most once. Pairs are ordered by ascending `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchSet {
    pairs: Vec<PairMatch>,
}

impl MatchSet {
    pub fn pairs(&self) -> &[PairMatch] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Index of the nearest descriptor in `set` (ties to the lowest index), or
/// `None` for an empty set.
fn nearest(query: &Descriptor, set: &[Descriptor]) -> Option<(usize, u32)> {
    let mut best: Option<(usize, u32)> = None;
    for (j, d) in set.iter().enumerate() {
        let dist = hamming(query, d);
        if best.is_none_or(|(_, bd)| dist < bd) {
            best = Some((j, dist));
        }
    }
    best
}

/// Exhaustive all-pairs matching: keeps `(i, j)` iff `j` is `i`'s nearest
/// neighbor in `b` and `i` is `j`'s nearest in `a`, ties broken toward the
/// lowest index on both sides. Empty inputs yield an empty set.
pub fn match_bf(a: &[Descriptor], b: &[Descriptor]) -> MatchSet {
    if a.is_empty() || b.is_empty() {
        return MatchSet::default();
    }
    let forward: Vec<(usize, u32)> = a.iter().map(|d| nearest(d, b).expect("b nonempty")).collect();
    let backward: Vec<usize> = b
        .iter()
        .map(|d| nearest(d, a).expect("a nonempty").0)
        .collect();
    let pairs = forward
        .into_iter()
        .enumerate()
        .filter(|&(i, (j, _))| backward[j] == i)
        .map(|(i, (j, dist))| PairMatch { a: i, b: j, hamming: dist })
        .collect();
    MatchSet { pairs }
}
