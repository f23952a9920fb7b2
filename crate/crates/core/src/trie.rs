//! Binary trie over a finite id set.
//!
//! The trie is stored implicitly as the sorted leaf array. Every trie node is
//! the set of leaves sharing a prefix, which is a contiguous range of that
//! array, so a node's leaf count is the length of its range and a child split
//! is one binary search on the next bit. Depths and counts are those of the
//! plain (uncompressed) trie of height `d`.

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::idspace::{same_dim, NodeId};

/// Binary trie of height `d` holding `n` distinct leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdTrie {
    leaves: Vec<NodeId>,
    bits: usize,
}

/// A nonempty subtree: the leaves below one trie node at `depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubtreeRef {
    depth: usize,
    start: usize,
    end: usize,
}

impl SubtreeRef {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Leaf count.
    pub fn size(&self) -> usize {
        self.end - self.start
    }

    /// Positions of the subtree's leaves in [`IdTrie::leaves`].
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Walks down the path of `z`, yielding for each depth `j` the subtree hanging
/// off the path at depth `j + 1` (the side of bit `j` that `z` does not take),
/// when it is nonempty. That subtree is `𝒟_{d-j}(z)`.
pub struct Siblings<'a> {
    trie: &'a IdTrie,
    z: NodeId,
    lo: usize,
    hi: usize,
    depth: usize,
}

impl Iterator for Siblings<'_> {
    /// `(z_bit, sibling)`: the bit `z` takes at this depth and the other side.
    type Item = (bool, SubtreeRef);

    fn next(&mut self) -> Option<Self::Item> {
        let d = self.trie.bits;
        while self.depth < d && self.lo < self.hi {
            let j = self.depth;
            let split = self.trie.split_at(self.lo, self.hi, j);
            let zbit = self.z.bit(j);
            let (own, other) = if zbit {
                ((split, self.hi), (self.lo, split))
            } else {
                ((self.lo, split), (split, self.hi))
            };
            self.lo = own.0;
            self.hi = own.1;
            self.depth += 1;
            if other.0 < other.1 {
                return Some((
                    zbit,
                    SubtreeRef {
                        depth: j + 1,
                        start: other.0,
                        end: other.1,
                    },
                ));
            }
        }
        None
    }
}

impl IdTrie {
    /// Builds the trie; ids must be nonempty, distinct and of equal length.
    pub fn build<I: IntoIterator<Item = NodeId>>(ids: I) -> Result<Self> {
        let mut leaves: Vec<NodeId> = ids.into_iter().collect();
        let first = *leaves.first().ok_or(Error::EmptyIdSet)?;
        for id in &leaves {
            same_dim(&first, id)?;
        }
        leaves.sort_unstable();
        if let Some(w) = leaves.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0]));
        }
        Ok(IdTrie {
            leaves,
            bits: first.len(),
        })
    }

    /// Number of leaves `n`.
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Height `d`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf(&self, pos: usize) -> NodeId {
        self.leaves[pos]
    }

    /// Left-to-right position of a leaf.
    pub fn position(&self, id: &NodeId) -> Option<usize> {
        if id.len() != self.bits {
            return None;
        }
        self.leaves.binary_search(id).ok()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.position(id).is_some()
    }

    pub(crate) fn require_leaf(&self, id: &NodeId) -> Result<usize> {
        self.check_dim(id)?;
        self.position(id).ok_or(Error::MissingLeaf(*id))
    }

    fn check_dim(&self, id: &NodeId) -> Result<()> {
        same_dim(&self.leaves[0], id)
    }

    pub fn root(&self) -> SubtreeRef {
        SubtreeRef {
            depth: 0,
            start: 0,
            end: self.leaves.len(),
        }
    }

    fn split_at(&self, lo: usize, hi: usize, bit: usize) -> usize {
        lo + self.leaves[lo..hi].partition_point(|id| !id.bit(bit))
    }

    /// Left (`0`) and right (`1`) children of a subtree; absent when empty or at depth `d`.
    pub fn children(&self, s: &SubtreeRef) -> (Option<SubtreeRef>, Option<SubtreeRef>) {
        if s.depth >= self.bits {
            return (None, None);
        }
        let split = self.split_at(s.start, s.end, s.depth);
        let make = |start, end| {
            (start < end).then_some(SubtreeRef {
                depth: s.depth + 1,
                start,
                end,
            })
        };
        (make(s.start, split), make(split, s.end))
    }

    /// The subtree of leaves whose first `depth` bits agree with `prefix`.
    pub fn subtree_at(&self, prefix: &NodeId, depth: usize) -> Result<Option<SubtreeRef>> {
        self.check_dim(prefix)?;
        if depth > self.bits {
            return Err(Error::BadLength {
                got: depth,
                max: self.bits,
            });
        }
        let lo = prefix.with_suffix(depth, false);
        let hi = prefix.with_suffix(depth, true);
        let start = self.leaves.partition_point(|id| *id < lo);
        let end = self.leaves.partition_point(|id| *id <= hi);
        Ok((start < end).then_some(SubtreeRef { depth, start, end }))
    }

    /// Leaf count below the node at `prefix[..depth]`, zero when empty.
    pub fn count_with_prefix(&self, prefix: &NodeId, depth: usize) -> Result<usize> {
        Ok(self.subtree_at(prefix, depth)?.map_or(0, |s| s.size()))
    }

    /// The leaves of a subtree, left to right.
    pub fn subtree_leaves(&self, s: &SubtreeRef) -> Result<&[NodeId]> {
        self.check_ref(s)?;
        Ok(&self.leaves[s.range()])
    }

    fn check_ref(&self, s: &SubtreeRef) -> Result<()> {
        if s.start >= s.end || s.end > self.leaves.len() {
            return Err(Error::EmptySubtree);
        }
        Ok(())
    }

    /// The rightmost leaf of `within`; for the root this is `y′`, the leaf closest to `1̄`.
    pub fn rightmost_leaf(&self, within: &SubtreeRef) -> Result<NodeId> {
        self.check_ref(within)?;
        Ok(self.leaves[within.end - 1])
    }

    /// The leaf closest to `target` (rightmost leaf once `target` is rotated to `1̄`).
    pub fn closest_to(&self, target: &NodeId) -> Result<NodeId> {
        self.check_dim(target)?;
        let (mut lo, mut hi) = (0, self.leaves.len());
        for j in 0..self.bits {
            if hi - lo == 1 {
                break;
            }
            let split = self.split_at(lo, hi, j);
            let (toward, away) = if target.bit(j) {
                ((split, hi), (lo, split))
            } else {
                ((lo, split), (split, hi))
            };
            (lo, hi) = if toward.0 < toward.1 { toward } else { away };
        }
        Ok(self.leaves[lo])
    }

    /// Nonempty subtrees hanging off the path of `z`, shallowest first.
    /// `z` need not be a leaf.
    pub fn siblings(&self, z: &NodeId) -> Result<Siblings<'_>> {
        self.check_dim(z)?;
        Ok(Siblings {
            trie: self,
            z: *z,
            lo: 0,
            hi: self.leaves.len(),
            depth: 0,
        })
    }

    /// `S` for leaf `z` with target `1̄`: the shallowest nonempty subtree strictly
    /// to the right of `z`; `None` iff `z` is the rightmost leaf.
    pub fn highest_right_subtree(&self, z: &NodeId) -> Result<Option<SubtreeRef>> {
        self.highest_subtree_toward(z, &NodeId::ones(self.bits))
    }

    /// [`IdTrie::highest_right_subtree`] evaluated in the frame where `target`
    /// is rotated to `1̄`: the shallowest nonempty sibling subtree of `z` lying on
    /// `target`'s side of the bit where it branches off.
    pub fn highest_subtree_toward(
        &self,
        z: &NodeId,
        target: &NodeId,
    ) -> Result<Option<SubtreeRef>> {
        self.require_leaf(z)?;
        self.check_dim(target)?;
        Ok(self
            .siblings(z)?
            .find(|(zbit, s)| *zbit != target.bit(s.depth - 1))
            .map(|(_, s)| s))
    }

    /// `𝒟_i(x)` restricted to the leaves, for `i` in `1..=d`.
    pub fn distance_class(&self, x: &NodeId, i: usize) -> Result<Option<SubtreeRef>> {
        self.check_dim(x)?;
        if i == 0 || i > self.bits {
            return Err(Error::BadLength {
                got: i,
                max: self.bits,
            });
        }
        let branch = self.bits - i;
        let prefix = x.with_bit(branch, !x.bit(branch));
        self.subtree_at(&prefix, branch + 1)
    }

    /// Up to `m` distinct leaves of `s`, uniform over subsets of size `min(m, |s|)`.
    pub fn sample_leaves<R: Rng + ?Sized>(
        &self,
        s: &SubtreeRef,
        m: usize,
        rng: &mut R,
    ) -> Result<Vec<NodeId>> {
        self.check_ref(s)?;
        Ok(sample_range(s.range(), m, rng)
            .map(|p| self.leaves[p])
            .collect())
    }

    /// The trie of `u XOR complement(y)` over all leaves `u`.
    pub fn rotated(&self, y: &NodeId) -> Result<IdTrie> {
        self.check_dim(y)?;
        let mask = y.complement();
        IdTrie::build(self.leaves.iter().map(|u| u.xor(&mask)))
    }
}

/// `min(m, len)` distinct positions drawn uniformly from `range`.
pub(crate) fn sample_range<R: Rng + ?Sized>(
    range: Range<usize>,
    m: usize,
    rng: &mut R,
) -> impl Iterator<Item = usize> {
    let size = range.len();
    let start = range.start;
    let picked = if m >= size {
        None
    } else {
        Some(rand::seq::index::sample(rng, size, m))
    };
    let all = picked.is_none().then_some(range);
    picked
        .into_iter()
        .flat_map(move |iv| iv.into_iter().map(move |p| start + p))
        .chain(all.into_iter().flatten())
}

/// Depth of the lowest common ancestor of two leaves, i.e. `ℓ(x, y)`.
pub fn lca_depth(x: &NodeId, y: &NodeId) -> Result<usize> {
    crate::idspace::common_prefix_len(x, y)
}

/// `u XOR complement(y)`: maps `y` to `1̄`, an involution for fixed `y`.
pub fn rotate_by_target(u: &NodeId, y: &NodeId) -> Result<NodeId> {
    u.rotate_by_target(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idspace::{bucket_index, compare_by_distance, xor_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::cmp::Ordering;
    use std::collections::HashMap;

    fn id(s: &str) -> NodeId {
        NodeId::parse_binary(s).unwrap()
    }

    fn ids(list: &[&str]) -> Vec<NodeId> {
        list.iter().map(|s| id(s)).collect()
    }

    fn full(d: usize) -> IdTrie {
        IdTrie::build((0..1u64 << d).map(|v| NodeId::from_u64(v, d).unwrap())).unwrap()
    }

    /// Five leaves with `d = 5`; `z0 = 10010` shares one bit with `y′ = 11110`.
    pub(crate) fn first_hop_example() -> Vec<NodeId> {
        ids(&["00110", "01011", "10010", "11001", "11110"])
    }

    fn random_trie(n: usize, d: usize, seed: u64) -> IdTrie {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = std::collections::BTreeSet::new();
        while set.len() < n {
            set.insert(NodeId::random(d, &mut rng));
        }
        IdTrie::build(set).unwrap()
    }

    #[test]
    fn build_examples() {
        let t = IdTrie::build(ids(&["100"])).unwrap();
        assert_eq!((t.len(), t.bits()), (1, 3));
        assert_eq!(t.root().size(), 1);
        let f = full(3);
        assert_eq!(f.len(), 8);
        let fig = IdTrie::build(first_hop_example()).unwrap();
        assert_eq!(fig.rightmost_leaf(&fig.root()).unwrap(), id("11110"));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(IdTrie::build(vec![]), Err(Error::EmptyIdSet)));
        assert!(matches!(
            IdTrie::build(ids(&["101", "011", "101"])),
            Err(Error::Duplicate(_))
        ));
        assert!(matches!(
            IdTrie::build(ids(&["101", "0110"])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn counts_match_recount() {
        let t = random_trie(200, 12, 3);
        let mut stack = vec![t.root()];
        while let Some(s) = stack.pop() {
            let prefix = t.leaf(s.start);
            let brute = t
                .leaves()
                .iter()
                .filter(|u| u.prefix_len_with(&prefix) >= s.depth())
                .count();
            assert_eq!(s.size(), brute);
            assert_eq!(t.count_with_prefix(&prefix, s.depth()).unwrap(), brute);
            let (l, r) = t.children(&s);
            let child_total = l.map_or(0, |c| c.size()) + r.map_or(0, |c| c.size());
            if s.depth() < t.bits() {
                assert_eq!(child_total, s.size());
            }
            stack.extend(l);
            stack.extend(r);
        }
    }

    #[test]
    fn rightmost_is_closest_to_ones() {
        for seed in 0..20 {
            let t = random_trie(50, 10, seed);
            let ones = NodeId::ones(10);
            let brute = *t
                .leaves()
                .iter()
                .min_by_key(|u| xor_distance(u, &ones).unwrap())
                .unwrap();
            assert_eq!(t.rightmost_leaf(&t.root()).unwrap(), brute);
            assert_eq!(t.closest_to(&ones).unwrap(), brute);
        }
        let single = IdTrie::build(ids(&["0110"])).unwrap();
        assert_eq!(single.rightmost_leaf(&single.root()).unwrap(), id("0110"));
        assert_eq!(full(3).rightmost_leaf(&full(3).root()).unwrap(), id("111"));
    }

    #[test]
    fn closest_to_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..10 {
            let t = random_trie(40, 9, seed);
            for _ in 0..50 {
                let y = NodeId::random(9, &mut rng);
                let brute = *t
                    .leaves()
                    .iter()
                    .min_by(|a, b| compare_by_distance(a, b, &y).unwrap())
                    .unwrap();
                assert_eq!(t.closest_to(&y).unwrap(), brute);
            }
        }
    }

    #[test]
    fn highest_right_subtree_examples() {
        let fig = IdTrie::build(first_hop_example()).unwrap();
        let z0 = id("10010");
        let y1 = fig.rightmost_leaf(&fig.root()).unwrap();
        assert_eq!(fig.bits() - lca_depth(&z0, &y1).unwrap(), 4);
        let s0 = fig.highest_right_subtree(&z0).unwrap().unwrap();
        assert_eq!(s0.depth(), 2);
        assert_eq!(fig.distance_class(&z0, 4).unwrap(), Some(s0));
        assert_eq!(
            fig.subtree_leaves(&s0).unwrap(),
            &ids(&["11001", "11110"])[..]
        );
        // from the far left the whole right half is the first pool
        let s = fig.highest_right_subtree(&id("00110")).unwrap().unwrap();
        assert_eq!((s.depth(), s.size()), (1, 3));
        assert_eq!(fig.highest_right_subtree(&y1).unwrap(), None);

        let t2 = full(2);
        let s = t2.highest_right_subtree(&id("01")).unwrap().unwrap();
        assert_eq!(t2.subtree_leaves(&s).unwrap(), &ids(&["10", "11"])[..]);
        assert!(matches!(
            t2.highest_right_subtree(&NodeId::zeros(3)),
            Err(Error::Dimension { .. })
        ));
        let t3 = IdTrie::build(ids(&["000", "110"])).unwrap();
        assert!(matches!(
            t3.highest_right_subtree(&id("010")),
            Err(Error::MissingLeaf(_))
        ));
    }

    #[test]
    fn highest_right_subtree_properties() {
        let ones = NodeId::ones(8);
        for seed in 0..20 {
            let t = random_trie(60, 8, seed);
            let last = t.rightmost_leaf(&t.root()).unwrap();
            for z in t.leaves() {
                let s = t.highest_right_subtree(z).unwrap();
                assert_eq!(s.is_none(), *z == last);
                if let Some(s) = s {
                    for u in t.subtree_leaves(&s).unwrap() {
                        assert!(u > z);
                        assert_eq!(u.cmp_distance(z, &ones), Ordering::Less);
                    }
                    // no leaf outside s is closer to 1̄ than every leaf of s
                    let worst_in_s = t.leaf(s.range().start);
                    for u in t.leaves() {
                        if !s.range().contains(&t.position(u).unwrap()) {
                            assert_eq!(u.cmp_distance(&worst_in_s, &ones), Ordering::Greater);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frame_walk_matches_rotated_trie() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let t = random_trie(30, 7, seed);
            for _ in 0..10 {
                let y = NodeId::random(7, &mut rng);
                let rt = t.rotated(&y).unwrap();
                for z in t.leaves() {
                    let framed = t.highest_subtree_toward(z, &y).unwrap();
                    let rz = z.rotate_by_target(&y).unwrap();
                    let direct = rt.highest_right_subtree(&rz).unwrap();
                    let mut a: Vec<NodeId> = framed
                        .map(|s| t.subtree_leaves(&s).unwrap().to_vec())
                        .unwrap_or_default()
                        .iter()
                        .map(|u| u.rotate_by_target(&y).unwrap())
                        .collect();
                    a.sort();
                    let b = direct
                        .map(|s| rt.subtree_leaves(&s).unwrap().to_vec())
                        .unwrap_or_default();
                    assert_eq!(a, b);
                }
                assert_eq!(
                    t.closest_to(&y).unwrap().rotate_by_target(&y).unwrap(),
                    rt.rightmost_leaf(&rt.root()).unwrap()
                );
            }
        }
    }

    #[test]
    fn rotation_examples() {
        let t = random_trie(20, 6, 1);
        assert_eq!(t.rotated(&NodeId::ones(6)).unwrap(), t);
        let y = id("010011");
        assert_eq!(t.rotated(&y).unwrap().rotated(&y).unwrap(), t);
        assert_eq!(rotate_by_target(&y, &y).unwrap(), NodeId::ones(6));
    }

    #[test]
    fn rotation_turns_distance_order_into_right_order() {
        let all: Vec<NodeId> = (0..16).map(|v| NodeId::from_u64(v, 4).unwrap()).collect();
        for u in &all {
            for v in &all {
                for y in &all {
                    let by_distance = compare_by_distance(u, v, y).unwrap();
                    let ru = rotate_by_target(u, y).unwrap();
                    let rv = rotate_by_target(v, y).unwrap();
                    // further right = closer
                    assert_eq!(by_distance, rv.cmp(&ru));
                }
            }
        }
    }

    #[test]
    fn distance_classes_match_both_definitions() {
        for d in 1..=5 {
            let t = full(d);
            let sparse = random_trie((1 << d) / 2 + 1, d, d as u64);
            for trie in [&t, &sparse] {
                for x in t.leaves() {
                    for i in 1..=d {
                        let got: Vec<NodeId> = trie
                            .distance_class(x, i)
                            .unwrap()
                            .map(|s| trie.subtree_leaves(&s).unwrap().to_vec())
                            .unwrap_or_default();
                        let by_index: Vec<NodeId> = trie
                            .leaves()
                            .iter()
                            .filter(|u| *u != x && bucket_index(x, u).unwrap() == i)
                            .copied()
                            .collect();
                        let by_distance: Vec<NodeId> = trie
                            .leaves()
                            .iter()
                            .filter(|u| xor_distance(x, u).unwrap().bit_length() == i as u64)
                            .copied()
                            .collect();
                        assert_eq!(got, by_index);
                        assert_eq!(got, by_distance);
                    }
                }
            }
        }
    }

    #[test]
    fn siblings_enumerate_distance_classes() {
        let t = random_trie(100, 10, 9);
        for x in t.leaves().iter().step_by(7) {
            let mut seen = 0;
            for (_, s) in t.siblings(x).unwrap() {
                let i = t.bits() - (s.depth() - 1);
                assert_eq!(t.distance_class(x, i).unwrap(), Some(s));
                seen += s.size();
            }
            assert_eq!(seen, t.len() - 1);
        }
    }

    #[test]
    fn sample_exhaustive_when_m_large() {
        let t = full(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut got = t.sample_leaves(&t.root(), 8, &mut rng).unwrap();
        got.sort();
        assert_eq!(got, t.leaves());
        let mut got = t.sample_leaves(&t.root(), 100, &mut rng).unwrap();
        got.sort();
        assert_eq!(got, t.leaves());
    }

    #[test]
    fn sample_single_leaf_is_uniform() {
        let t = full(3);
        let s = t.children(&t.root()).1.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 1_000_000;
        let mut freq: HashMap<NodeId, usize> = HashMap::new();
        for _ in 0..draws {
            let v = t.sample_leaves(&s, 1, &mut rng).unwrap();
            assert_eq!(v.len(), 1);
            *freq.entry(v[0]).or_default() += 1;
        }
        assert_eq!(freq.len(), 4);
        let p = 0.25;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in freq.values() {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn sample_pairs_are_uniform() {
        let t = full(2);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let draws = 600_000;
        let mut freq: HashMap<Vec<NodeId>, usize> = HashMap::new();
        for _ in 0..draws {
            let mut v = t.sample_leaves(&t.root(), 2, &mut rng).unwrap();
            v.sort();
            assert_ne!(v[0], v[1]);
            *freq.entry(v).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in freq.values() {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn sample_whole_trie_is_permutation() {
        let t = random_trie(64, 9, 77);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got = t.sample_leaves(&t.root(), t.len(), &mut rng).unwrap();
        got.sort();
        assert_eq!(got, t.leaves());
    }

    #[test]
    fn lca_delegates() {
        assert_eq!(lca_depth(&id("100"), &id("111")).unwrap(), 1);
        assert_eq!(lca_depth(&id("01100"), &id("01101")).unwrap(), 4);
        assert_eq!(lca_depth(&id("010"), &id("010")).unwrap(), 3);
    }

    #[test]
    fn stale_subtree_ref_is_rejected() {
        let big = full(3);
        let small = IdTrie::build(ids(&["000"])).unwrap();
        assert!(matches!(
            small.rightmost_leaf(&big.root()),
            Err(Error::EmptySubtree)
        ));
    }
}
