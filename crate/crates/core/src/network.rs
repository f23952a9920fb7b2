//! The random graph `𝒦`: k-bucket tables, greedy routing and routing traces.

use std::cmp::Ordering;
use std::fmt::Write as _;

use petgraph::graph::DiGraph;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::idspace::{same_dim, NodeId};
use crate::trie::{sample_range, IdTrie};

/// Ids plus filled routing tables.
///
/// Bucket `ℬ_i(x)` of the node at leaf position `p` is
/// `entries[offsets[p*d + i - 1]..offsets[p*d + i]]`, stored as leaf positions.
#[derive(Clone, Debug)]
pub struct Network {
    trie: IdTrie,
    k: usize,
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

/// The routing path `ρ_xy` and the per-hop quantities derived from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoutingTrace {
    pub target: NodeId,
    /// `y*`, the node closest to `target`.
    pub closest: NodeId,
    /// `z_0 = x, z_1, ..., z_T = y*`.
    pub hops: Vec<NodeId>,
    /// `|S_0|, ..., |S_T|`; the last entry is 0.
    pub subtree_sizes: Vec<usize>,
    /// Depth of the lowest common ancestor of each `z_t` with `y*`.
    pub hop_depths: Vec<usize>,
}

impl RoutingTrace {
    fn from_hops(
        trie: &IdTrie,
        target: NodeId,
        closest: NodeId,
        hops: Vec<NodeId>,
    ) -> Result<Self> {
        let mut subtree_sizes = Vec::with_capacity(hops.len());
        let mut hop_depths = Vec::with_capacity(hops.len());
        for z in &hops {
            subtree_sizes.push(
                trie.highest_subtree_toward(z, &target)?
                    .map_or(0, |s| s.size()),
            );
            hop_depths.push(z.prefix_len_with(&closest));
        }
        Ok(RoutingTrace {
            target,
            closest,
            hops,
            subtree_sizes,
            hop_depths,
        })
    }

    /// `T_xy`, the number of hops.
    pub fn routing_time(&self) -> usize {
        self.hops.len() - 1
    }

    /// `|S_0|, |S_1|, ...` ending with 0.
    pub fn s_sequence(&self) -> &[usize] {
        &self.subtree_sizes
    }

    /// Hop lengths `R_t = L_t - L_{t-1}` along the path to `y*`.
    pub fn depth_increments(&self) -> Vec<usize> {
        self.hop_depths.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Checks the structural invariants every trace must satisfy.
    pub fn check(&self) -> std::result::Result<(), String> {
        let d = self.target.len();
        for (t, w) in self.hops.windows(2).enumerate() {
            if w[1].cmp_distance(&w[0], &self.target) != Ordering::Less {
                return Err(format!("hop {} does not move closer to the target", t + 1));
            }
        }
        if self.hops.last() != Some(&self.closest) {
            return Err("trace does not end at the closest node".into());
        }
        if self.routing_time() > d {
            return Err(format!("{} hops exceed d = {d}", self.routing_time()));
        }
        if self.subtree_sizes.len() != self.hops.len() || self.subtree_sizes.last() != Some(&0) {
            return Err("subtree sizes must end with 0".into());
        }
        if self.subtree_sizes[..self.subtree_sizes.len() - 1].contains(&0) {
            return Err("empty pool before the last hop".into());
        }
        if self.subtree_sizes.windows(2).any(|w| w[1] > w[0]) {
            return Err("subtree sizes increase".into());
        }
        if self.hop_depths.windows(2).any(|w| w[1] < w[0]) {
            return Err("hop depths decrease".into());
        }
        Ok(())
    }

    /// One line per hop: index, id, LCA depth with `y*`, `|S_t|`.
    /// Ids of at most 64 bits print in binary, longer ones as [`NodeId`]'s `Display`.
    pub fn dump(&self) -> String {
        let mut out = String::from("# hop\tid\tlca_depth\tsubtree_size\n");
        for (t, z) in self.hops.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t}\t{}\t{}\t{}",
                render_id(z),
                self.hop_depths[t],
                self.subtree_sizes[t]
            );
        }
        out
    }
}

pub(crate) fn render_id(id: &NodeId) -> String {
    if id.len() <= 64 {
        id.to_binary_string()
    } else {
        id.to_string()
    }
}

impl Network {
    /// Builds the trie and fills every bucket uniformly at random without replacement.
    pub fn build<I, R>(ids: I, k: usize, rng: &mut R) -> Result<Self>
    where
        I: IntoIterator<Item = NodeId>,
        R: Rng + ?Sized,
    {
        Network::from_trie(IdTrie::build(ids)?, k, rng)
    }

    pub fn from_trie<R: Rng + ?Sized>(trie: IdTrie, k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain { what: "k" });
        }
        let n = trie.len();
        let d = trie.bits();
        let mut offsets = Vec::with_capacity(n * d + 1);
        let mut entries = Vec::new();
        offsets.push(0u32);
        let mut by_class = vec![None; d + 1];
        for p in 0..n {
            by_class.iter_mut().for_each(|c| *c = None);
            for (_, s) in trie.siblings(&trie.leaf(p))? {
                by_class[d - s.depth() + 1] = Some(s.range());
            }
            for class in by_class.iter().skip(1) {
                if let Some(range) = class {
                    entries.extend(sample_range(range.clone(), k, rng).map(|q| q as u32));
                }
                offsets.push(entries.len() as u32);
            }
        }
        Ok(Network {
            trie,
            k,
            offsets,
            entries,
        })
    }

    pub fn trie(&self) -> &IdTrie {
        &self.trie
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.trie.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trie.is_empty()
    }

    pub fn bits(&self) -> usize {
        self.trie.bits()
    }

    fn bucket_positions(&self, p: usize, i: usize) -> &[u32] {
        let d = self.bits();
        let at = p * d + i - 1;
        &self.entries[self.offsets[at] as usize..self.offsets[at + 1] as usize]
    }

    fn neighbor_positions(&self, p: usize) -> &[u32] {
        let d = self.bits();
        &self.entries[self.offsets[p * d] as usize..self.offsets[(p + 1) * d] as usize]
    }

    /// `ℬ_i(x)` in insertion order.
    pub fn bucket(&self, x: &NodeId, i: usize) -> Result<Vec<NodeId>> {
        let p = self
            .trie
            .require_leaf(x)
            .map_err(|_| Error::MissingNode(*x))?;
        if i == 0 || i > self.bits() {
            return Err(Error::BadLength {
                got: i,
                max: self.bits(),
            });
        }
        Ok(self
            .bucket_positions(p, i)
            .iter()
            .map(|&q| self.trie.leaf(q as usize))
            .collect())
    }

    /// Out-neighbours of `x` in `𝒦`: the union of its buckets.
    pub fn neighbors(&self, x: &NodeId) -> Result<Vec<NodeId>> {
        let p = self
            .trie
            .require_leaf(x)
            .map_err(|_| Error::MissingNode(*x))?;
        Ok(self
            .neighbor_positions(p)
            .iter()
            .map(|&q| self.trie.leaf(q as usize))
            .collect())
    }

    /// Directed edges `(u, v)` as leaf positions.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len()).flat_map(move |p| {
            self.neighbor_positions(p)
                .iter()
                .map(move |&q| (p as u32, q))
        })
    }

    pub fn is_strongly_connected(&self) -> bool {
        let mut g = DiGraph::<(), ()>::with_capacity(self.len(), self.entries.len());
        for _ in 0..self.len() {
            g.add_node(());
        }
        g.extend_with_edges(self.edges());
        petgraph::algo::kosaraju_scc(&g).len() == 1
    }

    /// `y*`: the unique node minimizing the XOR distance to `y`.
    pub fn closest_node(&self, y: &NodeId) -> Result<NodeId> {
        self.trie.closest_to(y)
    }

    /// Greedy walk from leaf position `from` toward `y`; returns visited positions.
    fn walk(&self, from: usize, y: &NodeId, mut visit: impl FnMut(usize)) {
        let leaves = self.trie.leaves();
        let mut cur = from;
        visit(cur);
        loop {
            let mut best = cur;
            for &q in self.neighbor_positions(cur) {
                let q = q as usize;
                match leaves[q].cmp_distance(&leaves[best], y) {
                    Ordering::Less => best = q,
                    Ordering::Equal => {
                        debug_assert_eq!(q, best, "distance tie between distinct ids")
                    }
                    Ordering::Greater => {}
                }
            }
            if best == cur {
                return;
            }
            cur = best;
            visit(cur);
        }
    }

    fn source_position(&self, x: &NodeId, y: &NodeId) -> Result<usize> {
        same_dim(x, y)?;
        self.trie.require_leaf(x).map_err(|e| match e {
            Error::MissingLeaf(id) => Error::MissingNode(id),
            other => other,
        })
    }

    /// The routing path from `x` toward `y` with per-hop pool sizes and depths.
    pub fn route(&self, x: &NodeId, y: &NodeId) -> Result<RoutingTrace> {
        let from = self.source_position(x, y)?;
        let mut hops = Vec::new();
        self.walk(from, y, |p| hops.push(self.trie.leaf(p)));
        let closest = self.closest_node(y)?;
        RoutingTrace::from_hops(&self.trie, *y, closest, hops)
    }

    /// `T_xy` only.
    pub fn routing_time(&self, x: &NodeId, y: &NodeId) -> Result<usize> {
        let from = self.source_position(x, y)?;
        let mut visited = 0usize;
        self.walk(from, y, |_| visited += 1);
        Ok(visited - 1)
    }
}

/// Runs the hop recursion directly on the trie: from `z_t`, take the highest
/// subtree `S_t` toward `y`, draw up to `k` of its leaves and jump to the one
/// closest to `y`. Each hop consults a bucket that no earlier hop consulted,
/// so fresh draws give the same law as routing on a built network.
pub fn simulate_routing_process<R: Rng + ?Sized>(
    trie: &IdTrie,
    x: &NodeId,
    y: &NodeId,
    k: usize,
    rng: &mut R,
) -> Result<RoutingTrace> {
    if k == 0 {
        return Err(Error::Domain { what: "k" });
    }
    let hops = simulate_hops(trie, x, y, k, rng, |_| {})?;
    let closest = trie.closest_to(y)?;
    RoutingTrace::from_hops(trie, *y, closest, hops)
}

/// Hop sequence of the recursion; `on_pool` sees each `|S_t|` including the final 0.
pub(crate) fn simulate_hops<R: Rng + ?Sized>(
    trie: &IdTrie,
    x: &NodeId,
    y: &NodeId,
    k: usize,
    rng: &mut R,
    mut on_pool: impl FnMut(usize),
) -> Result<Vec<NodeId>> {
    same_dim(x, y)?;
    trie.require_leaf(x)?;
    let leaves = trie.leaves();
    let mut z = *x;
    let mut hops = vec![z];
    while let Some(s) = trie.highest_subtree_toward(&z, y)? {
        on_pool(s.size());
        let pick = sample_range(s.range(), k, rng)
            .min_by(|&a, &b| leaves[a].cmp_distance(&leaves[b], y))
            .expect("nonempty pool");
        z = leaves[pick];
        hops.push(z);
    }
    on_pool(0);
    Ok(hops)
}

/// `T_xy` from the recursion, without building a trace.
pub fn simulate_routing_time<R: Rng + ?Sized>(
    trie: &IdTrie,
    x: &NodeId,
    y: &NodeId,
    k: usize,
    rng: &mut R,
) -> Result<usize> {
    if k == 0 {
        return Err(Error::Domain { what: "k" });
    }
    Ok(simulate_hops(trie, x, y, k, rng, |_| {})?.len() - 1)
}
