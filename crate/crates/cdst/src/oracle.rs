//! Brute-force ground truth for desk-scale verification: the exact optimum
//! of the routing objective, the exhaustive minimum Steiner connection
//! length, spanning-tree enumeration, a spanning-tree minimality
//! certificate, and quadratic reference implementations of the subtree
//! summaries and port costs.
//!
//! The search model is pair-restricted: candidate connections are point
//! pairs priced by the instance metric. On instances with at most 12 points
//! the candidate set is the complete closure (every pair), which covers
//! everything the solver can emit; larger graph instances fall back to
//! their explicit edge list when it has at most 20 edges.

use std::collections::HashMap;

use crate::aggregates::SubtreeAggregates;
use crate::arborescence::{Arborescence, NodeId};
use crate::error::{Error, Result};
use crate::model::{Instance, Solution};

/// Complete-closure search is offered up to this many points.
pub const VERTEX_GUARD: usize = 12;
/// Sparse graph instances are searched over their own edges up to this many.
pub const EDGE_GUARD: usize = 20;
/// Spanning-tree enumeration is offered up to this many required points.
pub const ENUMERATION_GUARD: usize = 8;

#[derive(Clone, Copy)]
struct Cand {
    u: usize,
    v: usize,
    len: f64,
}

/// Candidate pairs, sorted by (length, endpoints) for deterministic search.
///
/// Graph instances search their own (deduplicated) edge list when it fits
/// the edge cap; everything else uses the complete closure over at most 12
/// points. Both sets dominate the solver's output: any tree of metric pairs
/// expands into shortest paths, and the shortest-path tree of that subgraph
/// is a candidate-edge tree that costs no more.
fn candidate_pairs(instance: &Instance) -> Result<Vec<Cand>> {
    let n = instance.point_count();
    let mut out = Vec::new();
    if let Some(edges) = instance.graph_edges() {
        let mut seen = std::collections::HashSet::new();
        for &(u, v, _) in edges {
            let key = (u.min(v), u.max(v));
            if u != v && seen.insert(key) {
                out.push(Cand {
                    u: key.0,
                    v: key.1,
                    len: instance.distance(key.0, key.1),
                });
            }
        }
        if out.len() > EDGE_GUARD {
            if n > VERTEX_GUARD {
                return Err(Error::TooLarge {
                    what: "exhaustive search over a graph (edge cap; too many points for the closure fallback)",
                    limit: EDGE_GUARD,
                    actual: out.len(),
                });
            }
            out.clear();
        }
    }
    if out.is_empty() {
        if n > VERTEX_GUARD {
            return Err(Error::TooLarge {
                what: "exhaustive search over a dense metric (point cap)",
                limit: VERTEX_GUARD,
                actual: n,
            });
        }
        for u in 0..n {
            for v in u + 1..n {
                out.push(Cand {
                    u,
                    v,
                    len: instance.distance(u, v),
                });
            }
        }
    }
    out.sort_unstable_by(|a, b| {
        a.len
            .total_cmp(&b.len)
            .then(a.u.cmp(&b.u))
            .then(a.v.cmp(&b.v))
    });
    Ok(out)
}

/// Union-find with an undo trail, no path compression so rollbacks are exact.
struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
    trail: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            trail: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.trail.push(rb as u32);
        true
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let rb = self.trail.pop().unwrap() as usize;
            let ra = self.parent[rb] as usize;
            self.parent[rb] = rb as u32;
            self.size[ra] -= self.size[rb];
        }
    }
}

struct Search<'a> {
    cands: &'a [Cand],
    n_points: usize,
    root: usize,
    weights: Vec<f64>,
    required: Vec<usize>,
    is_required: Vec<bool>,
    all_required: bool,
    root_dist: Vec<f64>,
    dsu: Dsu,
    included: Vec<usize>,
    best_value: f64,
    best_edges: Vec<(usize, usize)>,
}

impl Search<'_> {
    /// Objective value of a tree given as point pairs priced by `cands`'
    /// metric (connection sum plus weighted root-path delays).
    fn eval_edges(&self, edges: &[(usize, usize)], lens: &HashMap<(usize, usize), f64>) -> f64 {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_points];
        let mut conn = 0.0;
        for &(u, v) in edges {
            let len = lens[&(u.min(v), u.max(v))];
            conn += len;
            adj[u].push((v, len));
            adj[v].push((u, len));
        }
        let mut depth = vec![f64::NAN; self.n_points];
        let mut stack = vec![self.root];
        depth[self.root] = 0.0;
        let mut delay = 0.0;
        while let Some(x) = stack.pop() {
            delay += self.weights[x] * depth[x];
            for &(y, len) in &adj[x] {
                if depth[y].is_nan() {
                    depth[y] = depth[x] + len;
                    stack.push(y);
                }
            }
        }
        conn + delay
    }

    /// Lower bound for every completion of the current node, and whether all
    /// required points already sit in the root component.
    fn bound(&mut self, pos: usize) -> (bool, f64) {
        let root_comp = self.dsu.find(self.root);
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_points];
        let mut conn = 0.0;
        for &ei in &self.included {
            let e = &self.cands[ei];
            if self.dsu.find(e.u) == root_comp {
                conn += e.len;
                adj[e.u].push((e.v, e.len));
                adj[e.v].push((e.u, e.len));
            }
        }
        let mut depth = vec![f64::NAN; self.n_points];
        depth[self.root] = 0.0;
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            for &(y, len) in &adj[x] {
                if depth[y].is_nan() {
                    depth[y] = depth[x] + len;
                    stack.push(y);
                }
            }
        }

        let mut delay = 0.0;
        let mut pending_comps: Vec<usize> = Vec::new();
        let mut all_connected = true;
        for &t in &self.required {
            let c = self.dsu.find(t);
            if c == root_comp {
                delay += self.weights[t] * depth[t];
            } else {
                all_connected = false;
                delay += self.weights[t] * self.root_dist[t];
                if !pending_comps.contains(&c) {
                    pending_comps.push(c);
                }
            }
        }
        if all_connected {
            return (true, conn + delay);
        }

        // When every point is required, any completion must merge all
        // current components, so the cheapest forest doing that — Kruskal on
        // the undecided edges over contracted components — is a valid bound.
        if self.all_required {
            let cands = self.cands;
            let mark = self.dsu.mark();
            let mut merges_needed = (0..self.n_points)
                .filter(|&x| self.dsu.find(x) == x)
                .count()
                - 1;
            let mut extra = 0.0;
            for e in &cands[pos..] {
                if merges_needed == 0 {
                    break;
                }
                if self.dsu.union(e.u, e.v) {
                    extra += e.len;
                    merges_needed -= 1;
                }
            }
            self.dsu.rollback(mark);
            if merges_needed > 0 {
                return (false, f64::INFINITY);
            }
            return (false, conn + delay + extra);
        }

        // Otherwise each component holding a required point (the root's
        // included) still needs at least one outgoing candidate edge; each
        // undecided edge can serve at most two such components.
        pending_comps.push(root_comp);
        let mut cheapest: Vec<f64> = vec![f64::INFINITY; pending_comps.len()];
        for e in &self.cands[pos..] {
            let (cu, cv) = (self.dsu.find(e.u), self.dsu.find(e.v));
            if cu == cv {
                continue;
            }
            for (slot, &c) in pending_comps.iter().enumerate() {
                if (c == cu || c == cv) && e.len < cheapest[slot] {
                    cheapest[slot] = e.len;
                }
            }
        }
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for &c in &cheapest {
            if c.is_infinite() {
                return (false, f64::INFINITY);
            }
            sum += c;
            worst = worst.max(c);
        }
        (false, conn + delay + (sum / 2.0).max(worst))
    }

    /// The solution this node already determines: the root component of the
    /// included edges, iteratively pruned of leaves that are not required.
    fn extract_candidate(&self) -> (f64, Vec<(usize, usize)>) {
        let root_comp = self.dsu.find(self.root);
        let mut edges: Vec<(usize, usize, f64)> = self
            .included
            .iter()
            .map(|&ei| &self.cands[ei])
            .filter(|e| self.dsu.find(e.u) == root_comp)
            .map(|e| (e.u, e.v, e.len))
            .collect();
        loop {
            let mut degree = vec![0u32; self.n_points];
            for &(u, v, _) in &edges {
                degree[u] += 1;
                degree[v] += 1;
            }
            let before = edges.len();
            edges.retain(|&(u, v, _)| {
                let drop_u = degree[u] == 1 && !self.is_required[u];
                let drop_v = degree[v] == 1 && !self.is_required[v];
                !(drop_u || drop_v)
            });
            if edges.len() == before {
                break;
            }
        }

        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_points];
        let mut conn = 0.0;
        for &(u, v, len) in &edges {
            conn += len;
            adj[u].push((v, len));
            adj[v].push((u, len));
        }
        let mut depth = vec![f64::NAN; self.n_points];
        depth[self.root] = 0.0;
        let mut stack = vec![self.root];
        let mut delay = 0.0;
        while let Some(x) = stack.pop() {
            delay += self.weights[x] * depth[x];
            for &(y, len) in &adj[x] {
                if depth[y].is_nan() {
                    depth[y] = depth[x] + len;
                    stack.push(y);
                }
            }
        }
        (
            conn + delay,
            edges
                .into_iter()
                .map(|(u, v, _)| (u.min(v), u.max(v)))
                .collect(),
        )
    }

    fn dfs(&mut self, pos: usize) {
        let (connected, lb) = self.bound(pos);
        if connected {
            let (value, edges) = self.extract_candidate();
            if value < self.best_value - 1e-12 {
                self.best_value = value;
                self.best_edges = edges;
            }
            return;
        }
        if lb >= self.best_value - 1e-12 || pos == self.cands.len() {
            return;
        }
        let e = self.cands[pos];
        if self.dsu.find(e.u) != self.dsu.find(e.v) {
            let mark = self.dsu.mark();
            self.dsu.union(e.u, e.v);
            self.included.push(pos);
            self.dfs(pos + 1);
            self.included.pop();
            self.dsu.rollback(mark);
        }
        self.dfs(pos + 1);
    }
}

/// Shared search core: exact minimum of connection + Σ weights[t]·(tree
/// path root→t) over candidate-pair trees spanning root and all points
/// flagged required.
fn exact_search(instance: &Instance, weights: Vec<f64>) -> Result<(Vec<(usize, usize)>, f64)> {
    let n = instance.point_count();
    let root = instance.root();
    let mut required: Vec<usize> = vec![root];
    required.extend(instance.terminals().iter().map(|&(i, _)| i));
    required.sort_unstable();
    required.dedup();
    if required.len() <= 1 {
        return Ok((Vec::new(), 0.0));
    }

    let cands = candidate_pairs(instance)?;
    let mut is_required = vec![false; n];
    for &t in &required {
        is_required[t] = true;
    }
    let all_required = required.len() == n;
    let root_dist: Vec<f64> = (0..n).map(|v| instance.root_distance(v)).collect();

    let lens: HashMap<(usize, usize), f64> =
        cands.iter().map(|e| ((e.u, e.v), e.len)).collect();
    let pairs: Vec<(usize, usize)> = cands.iter().map(|e| (e.u, e.v)).collect();
    let incumbent = crate::reconnect::repair_spanning_tree(instance, &pairs)?;

    let mut search = Search {
        cands: &cands,
        n_points: n,
        root,
        weights,
        required,
        is_required,
        all_required,
        root_dist,
        dsu: Dsu::new(n),
        included: Vec::new(),
        best_value: f64::INFINITY,
        best_edges: Vec::new(),
    };
    search.best_value = search.eval_edges(&incumbent.edges, &lens);
    search.best_edges = incumbent
        .edges
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    search.dfs(0);

    let mut edges = search.best_edges;
    edges.sort_unstable();
    Ok((edges, search.best_value))
}

/// Exact optimum of the routing objective by branch and bound over
/// candidate pairs. Guarded: at most 12 points, or a graph instance with at
/// most 20 distinct edges.
pub fn brute_force_opt(instance: &Instance) -> Result<(Solution, f64)> {
    let weights: Vec<f64> = (0..instance.point_count())
        .map(|v| instance.weight_of(v))
        .collect();
    let (edges, value) = exact_search(instance, weights)?;
    Ok((Solution { edges }, value))
}

/// Exact minimum Steiner connection length: the cheapest candidate-pair
/// tree spanning the root and all terminals, ignoring weights. Same size
/// guard as [`brute_force_opt`].
pub fn exhaustive_smt(instance: &Instance) -> Result<f64> {
    let weights = vec![0.0; instance.point_count()];
    let (_, value) = exact_search(instance, weights)?;
    Ok(value)
}

// ---------------------------------------------------------------------------
// Quadratic reference implementations
// ---------------------------------------------------------------------------

/// Subtree summaries by direct summation (quadratic), for cross-checking
/// the constant-time recurrences. Indexed by `NodeId` like
/// `compute_aggregates`; nodes outside the tree keep default values.
pub fn naive_aggregates(arb: &Arborescence) -> Vec<SubtreeAggregates> {
    let n = arb.len();
    let mut out = vec![SubtreeAggregates::default(); n];
    // Independent per-subtree weight sums (used by the cross term).
    let mut subtree_weight = vec![0.0; n];
    for v in 0..n as NodeId {
        subtree_weight[v as usize] = arb
            .post_order(v)
            .iter()
            .map(|&u| arb.node(u).weight)
            .sum();
    }
    for v in 0..n as NodeId {
        let nodes = arb.post_order(v);
        let mut agg = SubtreeAggregates::default();
        for &u in &nodes {
            let nu = arb.node(u);
            agg.weight += nu.weight;
            agg.direct_delay += nu.weight * nu.root_dist;
            if u != v {
                agg.edge_cost += nu.edge_cost;
            }
        }
        for &u in &nodes {
            if u == v {
                continue;
            }
            let w_below = subtree_weight[u as usize];
            let ce = arb.node(u).edge_cost;
            agg.cross_weight_cost += ce * w_below * (agg.weight - w_below);
        }
        // below_weight_cost: weights times tree distance from v, walking
        // top-down (post_order reversed yields parents before children).
        let mut down = vec![0.0; n];
        for &u in nodes.iter().rev() {
            if u != v {
                down[u as usize] = down[arb.node(u).parent as usize] + arb.node(u).edge_cost;
            }
            agg.below_weight_cost += arb.node(u).weight * down[u as usize];
        }
        out[v as usize] = agg;
    }
    out
}

/// Port costs by direct summation: for every node `v` of the component,
/// the cost of serving the whole component through `v` — the root link
/// `c(r,v)` paid `1 + W` times, the component's edges, and every terminal's
/// tree path from `v`. Quadratic; root distances ride on the nodes.
pub fn naive_port_costs(arb: &Arborescence, comp_root: NodeId) -> Vec<(NodeId, f64)> {
    let nodes = arb.pre_order(comp_root);
    let in_comp: std::collections::HashSet<NodeId> = nodes.iter().copied().collect();
    let total_weight: f64 = nodes.iter().map(|&u| arb.node(u).weight).sum();
    let edge_cost: f64 = nodes
        .iter()
        .filter(|&&u| u != comp_root)
        .map(|&u| arb.node(u).edge_cost)
        .sum();

    // Undirected adjacency restricted to the component.
    let mut adj: HashMap<NodeId, Vec<(NodeId, f64)>> = HashMap::new();
    for &u in &nodes {
        if u == comp_root {
            continue;
        }
        let p = arb.node(u).parent;
        let ce = arb.node(u).edge_cost;
        adj.entry(u).or_default().push((p, ce));
        adj.entry(p).or_default().push((u, ce));
    }

    nodes
        .iter()
        .map(|&v| {
            let mut dist: HashMap<NodeId, f64> = HashMap::new();
            dist.insert(v, 0.0);
            let mut stack = vec![v];
            let mut spread = 0.0;
            while let Some(x) = stack.pop() {
                spread += arb.node(x).weight * dist[&x];
                if let Some(nbrs) = adj.get(&x) {
                    for &(y, len) in nbrs {
                        if in_comp.contains(&y) && !dist.contains_key(&y) {
                            dist.insert(y, dist[&x] + len);
                            stack.push(y);
                        }
                    }
                }
            }
            let cost = arb.node(v).root_dist * (1.0 + total_weight) + edge_cost + spread;
            (v, cost)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Spanning-tree enumeration and certificate
// ---------------------------------------------------------------------------

/// Minimum spanning length over the required points (root + terminals) by
/// enumerating every labeled tree via Prüfer sequences. Guarded at 8 points.
pub fn prufer_min_spanning(instance: &Instance) -> Result<f64> {
    let mut pts: Vec<usize> = vec![instance.root()];
    pts.extend(instance.terminals().iter().map(|&(i, _)| i));
    pts.sort_unstable();
    pts.dedup();
    let m = pts.len();
    if m > ENUMERATION_GUARD {
        return Err(Error::TooLarge {
            what: "labeled-tree enumeration",
            limit: ENUMERATION_GUARD,
            actual: m,
        });
    }
    if m < 2 {
        return Ok(0.0);
    }
    if m == 2 {
        return Ok(instance.distance(pts[0], pts[1]));
    }

    let d = |a: usize, b: usize| instance.distance(pts[a], pts[b]);
    let seq_len = m - 2;
    let total: u64 = (m as u64).pow(seq_len as u32);
    let mut best = f64::INFINITY;
    let mut seq = vec![0usize; seq_len];
    for code in 0..total {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = (c % m as u64) as usize;
            c /= m as u64;
        }
        let mut degree = vec![1u32; m];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut used = vec![false; m];
        let mut cost = 0.0;
        for &s in &seq {
            let leaf = (0..m)
                .find(|&i| degree[i] == 1 && !used[i])
                .expect("a leaf always exists while decoding");
            used[leaf] = true;
            degree[s] -= 1;
            cost += d(leaf, s);
        }
        let mut last = (0..m).filter(|&i| degree[i] == 1 && !used[i]);
        let (a, b) = (last.next().unwrap(), last.next().unwrap());
        cost += d(a, b);
        if cost < best {
            best = cost;
        }
    }
    Ok(best)
}

/// Certifies that `edges` is a minimum spanning tree of the metric over its
/// own vertex set: for every vertex pair, the largest edge on the tree path
/// must not exceed the direct distance (within tolerance). Sound for ties.
pub fn mst_cycle_certificate(instance: &Instance, edges: &[(usize, usize)]) -> bool {
    let mut verts: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != edges.len() + 1 {
        return false;
    }
    let mut adj: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for &(u, v) in edges {
        let len = instance.distance(u, v);
        adj.entry(u).or_default().push((v, len));
        adj.entry(v).or_default().push((u, len));
    }
    for &s in &verts {
        // Max edge length along the tree path from s to every other vertex.
        let mut bottleneck: HashMap<usize, f64> = HashMap::new();
        bottleneck.insert(s, 0.0);
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            let bx = bottleneck[&x];
            if let Some(nbrs) = adj.get(&x) {
                for &(y, len) in nbrs {
                    if !bottleneck.contains_key(&y) {
                        bottleneck.insert(y, bx.max(len));
                        stack.push(y);
                    }
                }
            }
        }
        if bottleneck.len() != verts.len() {
            return false; // disconnected
        }
        for &t in &verts {
            if t > s && bottleneck[&t] > instance.distance(s, t) + 1e-9 {
                return false;
            }
        }
    }
    true
}
