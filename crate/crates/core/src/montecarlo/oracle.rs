//! Exact routing-time law by enumeration, for tiny ID sets.
//!
//! Kept independent of the trie code: distance classes come from the bit
//! length of the big-integer XOR distance, and next hops from a linear scan.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::idspace::{xor_distance, NodeId};

/// Largest enumeration [`brute_force_t_distribution`] accepts.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

fn dist(a: &NodeId, b: &NodeId) -> BigUint {
    xor_distance(a, b).expect("same width").into_inner()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k >= n {
        return 1;
    }
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}

struct Enumerator<'a> {
    ids: &'a [NodeId],
    k: usize,
    y: NodeId,
    memo: HashMap<NodeId, Vec<f64>>,
}

impl Enumerator<'_> {
    /// Nonempty distance classes of `u`, keyed by class index.
    fn classes(&self, u: &NodeId) -> Vec<Vec<NodeId>> {
        let mut by_class: HashMap<u64, Vec<NodeId>> = HashMap::new();
        for v in self.ids.iter().filter(|v| *v != u) {
            by_class.entry(dist(u, v).bits()).or_default().push(*v);
        }
        by_class.into_values().collect()
    }

    fn candidates(&self, class: &[NodeId]) -> Vec<Vec<NodeId>> {
        if class.len() <= self.k {
            vec![class.to_vec()]
        } else {
            class.iter().copied().combinations(self.k).collect()
        }
    }

    /// Next hop from `u` for one realization of its buckets, `None` when `u` stops.
    fn next_hop(&self, u: &NodeId, chosen: &[&Vec<NodeId>]) -> Option<NodeId> {
        let best = chosen
            .iter()
            .flat_map(|b| b.iter())
            .min_by_key(|v| dist(v, &self.y))?;
        (dist(best, &self.y) < dist(u, &self.y)).then_some(*best)
    }

    fn pmf(&mut self, u: NodeId) -> Vec<f64> {
        if let Some(p) = self.memo.get(&u) {
            return p.clone();
        }
        let options: Vec<Vec<Vec<NodeId>>> = self
            .classes(&u)
            .iter()
            .map(|c| self.candidates(c))
            .collect();
        let mut counts: HashMap<Option<NodeId>, u64> = HashMap::new();
        let mut total = 0u64;
        if options.is_empty() {
            counts.insert(None, 1);
            total = 1;
        } else {
            for chosen in options.iter().map(|o| o.iter()).multi_cartesian_product() {
                *counts.entry(self.next_hop(&u, &chosen)).or_default() += 1;
                total += 1;
            }
        }
        let mut out = vec![0.0];
        for (next, c) in counts.into_iter().sorted_by_key(|(n, _)| *n) {
            let w = c as f64 / total as f64;
            match next {
                None => out[0] += w,
                Some(v) => {
                    let sub = self.pmf(v);
                    if out.len() < sub.len() + 1 {
                        out.resize(sub.len() + 1, 0.0);
                    }
                    for (t, p) in sub.iter().enumerate() {
                        out[t + 1] += w * p;
                    }
                }
            }
        }
        self.memo.insert(u, out.clone());
        out
    }

    /// Every node some realization can route through, starting from `x`.
    fn reachable(&self, x: NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::from([x]);
        let mut stack = vec![x];
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            out.push(u);
            let du = dist(&u, &self.y);
            for v in self.ids {
                if dist(v, &self.y) < du && seen.insert(*v) {
                    stack.push(*v);
                }
            }
        }
        out
    }
}

/// Exact `P{T_xy = t}` for `t = 0, 1, …` by enumerating every uniform
/// `k`-subset of every bucket of every node the route can reach.
///
/// Fails with [`Error::Infeasible`] when the product of subset counts over
/// those buckets exceeds [`ENUMERATION_LIMIT`].
pub fn brute_force_t_distribution(
    ids: &[NodeId],
    k: usize,
    x: &NodeId,
    y: &NodeId,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Domain { what: "k" });
    }
    if ids.is_empty() {
        return Err(Error::EmptyIdSet);
    }
    let mut seen = HashSet::new();
    for id in ids {
        crate::idspace::same_dim(id, y)?;
        if !seen.insert(*id) {
            return Err(Error::Duplicate(*id));
        }
    }
    if !seen.contains(x) {
        return Err(Error::MissingLeaf(*x));
    }
    let mut e = Enumerator {
        ids,
        k,
        y: *y,
        memo: HashMap::new(),
    };
    let mut needed: u128 = 1;
    for u in e.reachable(*x) {
        for class in e.classes(&u) {
            needed = needed.saturating_mul(binomial(class.len(), k));
        }
    }
    if needed > ENUMERATION_LIMIT {
        return Err(Error::Infeasible {
            needed,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut p = e.pmf(*x);
    while p.len() > 1 && p[p.len() - 1] == 0.0 {
        p.pop();
    }
    Ok(p)
}

/// `½ Σ |p_t - q_t|`, padding the shorter vector with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    (0..len)
        .map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / 2.0
}

/// Normalized histogram of hop counts.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut counts: Vec<u64> = Vec::new();
    let mut total = 0u64;
    for v in values {
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// A small ID set with a source and a target.
#[derive(Clone, Debug)]
pub struct OracleCase {
    pub ids: Vec<NodeId>,
    pub x: NodeId,
    pub y: NodeId,
}

const CATALOG: [(&str, &str, &str); 20] = [
    ("0000 1111", "0000", "1111"),
    ("000 011 101", "000", "111"),
    ("000 001 010 011 100", "000", "111"),
    ("0001 0010 0100 1000 1111", "0001", "1111"),
    ("0000 0001 0010 0011 1100 1110", "0000", "1111"),
    ("0000 0101 1010 1111", "0101", "0000"),
    ("0000 0011 0110 1001 1100 1111", "0000", "1010"),
    ("0010 0111 1011 1101", "0010", "1111"),
    ("000 001 010 100 110 111", "000", "111"),
    ("001 010 100 111", "001", "110"),
    ("0000 1000 1100 1110 1111", "0000", "1111"),
    ("0000 0001 0011 0111 1111", "0000", "1111"),
    ("1111 1110 1100 1000 0000", "1111", "0000"),
    ("0100 0101 0110 0111 1000 1001", "0100", "1111"),
    ("000 010 011 101 110 111", "000", "100"),
    ("0011 0100 0101 1010 1011 1100", "0011", "1110"),
    ("00 01 10 11", "00", "11"),
    ("0000 0110 1001 1110 1111", "0000", "0111"),
    ("010 011 100 101 110", "010", "111"),
    ("0001 0011 0101 0111 1001 1011", "0001", "1110"),
];

/// Twenty fixed cases with `n ≤ 6` and `d ≤ 4`.
pub fn catalog() -> Vec<OracleCase> {
    let parse = |s: &str| NodeId::parse_binary(s).expect("catalog id");
    CATALOG
        .iter()
        .map(|(ids, x, y)| OracleCase {
            ids: ids.split_whitespace().map(parse).collect(),
            x: parse(x),
            y: parse(y),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;
    use crate::network::simulate_routing_time;
    use crate::trie::IdTrie;

    fn id(s: &str) -> NodeId {
        NodeId::parse_binary(s).unwrap()
    }

    #[test]
    fn two_nodes() {
        let ids = [id("0101"), id("1100")];
        let p = brute_force_t_distribution(&ids, 1, &ids[0], &id("1111")).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
        let p = brute_force_t_distribution(&ids, 1, &ids[1], &id("1111")).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn full_buckets_are_deterministic() {
        let ids: Vec<NodeId> = (0..8).map(|v| NodeId::from_u64(v, 3).unwrap()).collect();
        let p = brute_force_t_distribution(&ids, 8, &ids[0], &id("111")).unwrap();
        assert_eq!(p.iter().filter(|&&q| q > 0.0).count(), 1);
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn hand_computed_case() {
        // x = 000, y = 111, k = 1. Classes of 000: {100, 110} (i=3) and {010} (i=2).
        // From 000 the bucket for i=3 holds 100 or 110 equally likely.
        // 110 is y* (distance 1): T = 1.
        // From 100 the class {110} (i=2) gives 110: T = 2.
        let ids = [id("000"), id("010"), id("100"), id("110")];
        let p = brute_force_t_distribution(&ids, 1, &ids[0], &id("111")).unwrap();
        assert_eq!(p, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn sums_to_one_on_catalog() {
        for case in catalog() {
            assert!(case.ids.len() <= 6 && case.x.len() <= 4);
            for k in [1, 2] {
                let p = brute_force_t_distribution(&case.ids, k, &case.x, &case.y).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_simulation_on_catalog() {
        let mut rng = trial_rng(99, 0);
        for case in catalog() {
            let trie = IdTrie::build(case.ids.clone()).unwrap();
            for k in [1, 2] {
                let exact = brute_force_t_distribution(&case.ids, k, &case.x, &case.y).unwrap();
                let sim =
                    histogram((0..40_000).map(|_| {
                        simulate_routing_time(&trie, &case.x, &case.y, k, &mut rng).unwrap()
                    }));
                assert!(tv_distance(&exact, &sim) < 0.02, "{case:?} k={k}");
            }
        }
    }

    #[test]
    fn infeasible_and_invalid() {
        let ids: Vec<NodeId> = (0..64).map(|v| NodeId::from_u64(v, 6).unwrap()).collect();
        assert!(matches!(
            brute_force_t_distribution(&ids, 3, &ids[0], &id("111111")),
            Err(Error::Infeasible { .. })
        ));
        assert!(brute_force_t_distribution(&ids[..2], 0, &ids[0], &ids[1]).is_err());
        assert!(brute_force_t_distribution(&ids[..2], 1, &ids[5], &ids[1]).is_err());
    }

    #[test]
    fn tv_and_histogram() {
        assert_eq!(tv_distance(&[1.0], &[0.0, 1.0]), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(histogram([0, 2, 2, 1]), vec![0.25, 0.25, 0.5]);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 5), 1);
    }
}
