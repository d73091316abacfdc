//! Initial-tree construction (spanning-tree heuristic and exact dynamic
//! programming) and normalization of any tree into a binary arborescence
//! with all weight carried by leaves.

use crate::arborescence::{Arborescence, NodeId, NO_PARENT};
use crate::error::{Error, Result};
use crate::model::Instance;

/// Largest required-vertex count (terminals plus root) accepted by
/// [`exact_steiner`].
pub const EXACT_TERMINAL_LIMIT: usize = 16;

/// Work guard for the exact dynamic program: 2^k · n² table-relaxation
/// steps beyond this are refused.
const EXACT_WORK_LIMIT: u128 = 2_000_000_000;

struct Dsu(Vec<u32>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n as u32).collect())
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let up = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra as usize] = rb;
        true
    }
}

/// Sorted, deduplicated point indices of the root plus all terminals.
fn required_points(instance: &Instance) -> Vec<usize> {
    let mut pts: Vec<usize> = Vec::with_capacity(instance.terminals().len() + 1);
    pts.push(instance.root());
    pts.extend(instance.terminals().iter().map(|&(t, _)| t));
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Spanning tree over the metric closure of the terminals plus root — a
/// 2-approximate minimum Steiner tree. Candidate pairs are taken in order of
/// (length, smaller point index, larger point index), so the result is
/// deterministic even under ties; the returned edges are sorted.
pub fn mst_steiner(instance: &Instance) -> Result<Vec<(usize, usize)>> {
    let pts = required_points(instance);
    if pts.len() <= 1 {
        return Ok(Vec::new());
    }
    let mut cand = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for (i, &u) in pts.iter().enumerate() {
        for &v in pts.iter().skip(i + 1) {
            cand.push((instance.distance(u, v), u, v));
        }
    }
    cand.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut dsu = Dsu::new(pts.len());
    let local = |p: usize| pts.binary_search(&p).expect("candidate point") as u32;
    let mut edges = Vec::with_capacity(pts.len() - 1);
    for (_, u, v) in cand {
        if dsu.union(local(u), local(v)) {
            edges.push((u, v));
            if edges.len() == pts.len() - 1 {
                break;
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Exact minimum Steiner tree over the instance's points spanning the
/// terminals plus root, by dynamic programming over required-vertex subsets
/// in the metric closure. Any point may serve as a branching vertex.
///
/// Guarded: at most [`EXACT_TERMINAL_LIMIT`] required vertices, and the
/// table-relaxation work must stay within a fixed budget, otherwise a
/// too-large error names the limit.
pub fn exact_steiner(instance: &Instance) -> Result<Vec<(usize, usize)>> {
    let req = required_points(instance);
    let k = req.len();
    if k > EXACT_TERMINAL_LIMIT {
        return Err(Error::TooLarge {
            what: "exact initial-tree required vertex set (terminals plus root)".into(),
            limit: EXACT_TERMINAL_LIMIT,
            actual: k,
        });
    }
    if k <= 1 {
        return Ok(Vec::new());
    }
    let n = instance.point_count();
    let work = (1u128 << k) * (n as u128) * (n as u128);
    if work > EXACT_WORK_LIMIT {
        return Err(Error::TooLarge {
            what: "exact initial-tree dynamic program (2^required · points²)".into(),
            limit: EXACT_WORK_LIMIT as usize,
            actual: work.min(usize::MAX as u128) as usize,
        });
    }

    // Distances are consulted n² times per subset; cache them flat when the
    // point count allows it.
    let cached: Option<Vec<f64>> = if n <= 2048 {
        let mut d = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                d[u * n + v] = instance.distance(u, v);
            }
        }
        Some(d)
    } else {
        None
    };
    let dist = |u: usize, v: usize| -> f64 {
        match &cached {
            Some(d) => d[u * n + v],
            None => instance.distance(u, v),
        }
    };

    let full: usize = (1 << k) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * n];
    for (i, &r) in req.iter().enumerate() {
        let base = (1 << i) * n;
        for v in 0..n {
            dp[base + v] = dist(r, v);
        }
    }
    // Best way to join two complementary required subsets at each vertex,
    // for the subset currently being finalized.
    let combine_row = |dp: &[f64], mask: usize, out: &mut [f64]| {
        out.fill(f64::INFINITY);
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut s = rest;
        loop {
            let sub = s | low;
            if sub != mask {
                let other = mask ^ sub;
                let (a, b) = (sub * n, other * n);
                for v in 0..n {
                    let c = dp[a + v] + dp[b + v];
                    if c < out[v] {
                        out[v] = c;
                    }
                }
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & rest;
        }
    };
    let mut joined = vec![f64::INFINITY; n];
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        combine_row(&dp, mask, &mut joined);
        // One metric relaxation step suffices in the metric closure: any
        // optimal tree for the subset is two joined halves at some vertex u
        // plus a direct connection u—v.
        let base = mask * n;
        for v in 0..n {
            let mut best = joined[v];
            for (u, &ju) in joined.iter().enumerate() {
                let c = ju + dist(u, v);
                if c < best {
                    best = c;
                }
            }
            dp[base + v] = best;
        }
    }

    // Reconstruct by replaying the minimizations.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut agenda = vec![(full, req[0])];
    let mut scratch = vec![f64::INFINITY; n];
    while let Some((mask, v)) = agenda.pop() {
        if mask.count_ones() == 1 {
            let r = req[mask.trailing_zeros() as usize];
            if r != v {
                edges.push((r.min(v), r.max(v)));
            }
            continue;
        }
        combine_row(&dp, mask, &mut scratch);
        let target = dp[mask * n + v];
        let mut via = v;
        // Prefer joining in place; otherwise take the first vertex that
        // reproduces the stored optimum (same arithmetic as the forward
        // pass, so a match always exists).
        if scratch[v] != target {
            via = (0..n)
                .find(|&u| scratch[u] + dist(u, v) == target)
                .expect("relaxation source must exist");
            edges.push((via.min(v), via.max(v)));
        }
        let joined_cost = scratch[via];
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut s = rest;
        let mut split = None;
        loop {
            let sub = s | low;
            if sub != mask && dp[sub * n + via] + dp[(mask ^ sub) * n + via] == joined_cost {
                split = Some(sub);
                break;
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & rest;
        }
        let sub = split.expect("joining split must exist");
        agenda.push((sub, via));
        agenda.push((mask ^ sub, via));
    }

    edges.sort_unstable();
    edges.dedup();
    // Defensive cleanup: drop any cycle-closing duplicates the replay could
    // produce through coincident vertices, then strip branches that serve no
    // required vertex.
    let keep = spanning_subset(&edges, &req, dist_closure(instance, &cached, n));
    Ok(keep)
}

fn dist_closure<'a>(
    instance: &'a Instance,
    cached: &'a Option<Vec<f64>>,
    n: usize,
) -> impl Fn(usize, usize) -> f64 + 'a {
    move |u: usize, v: usize| match cached {
        Some(d) => d[u * n + v],
        None => instance.distance(u, v),
    }
}

/// Kruskal over the candidate edges followed by iterative removal of
/// non-required leaves: returns a tree over exactly the vertices that still
/// serve a required point.
fn spanning_subset(
    edges: &[(usize, usize)],
    req: &[usize],
    dist: impl Fn(usize, usize) -> f64,
) -> Vec<(usize, usize)> {
    let mut verts: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.extend_from_slice(req);
    verts.sort_unstable();
    verts.dedup();
    let local = |p: usize| verts.binary_search(&p).expect("known vertex");
    let mut cand: Vec<(f64, usize, usize)> =
        edges.iter().map(|&(a, b)| (dist(a, b), a, b)).collect();
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut dsu = Dsu::new(verts.len());
    let mut tree: Vec<(usize, usize)> = Vec::new();
    for (_, a, b) in cand {
        if dsu.union(local(a) as u32, local(b) as u32) {
            tree.push((a, b));
        }
    }
    // Prune leaves that are not required.
    let mut required = vec![false; verts.len()];
    for &r in req {
        required[local(r)] = true;
    }
    loop {
        let mut degree = vec![0usize; verts.len()];
        for &(a, b) in &tree {
            degree[local(a)] += 1;
            degree[local(b)] += 1;
        }
        let before = tree.len();
        tree.retain(|&(a, b)| {
            let (la, lb) = (local(a), local(b));
            !((degree[la] == 1 && !required[la]) || (degree[lb] == 1 && !required[lb]))
        });
        if tree.len() == before {
            break;
        }
    }
    tree.sort_unstable();
    tree
}

/// Normalizes a tree over instance points into the working arborescence:
/// branches serving no terminal are removed, pass-through connector nodes
/// are contracted (edge costs add), every weighted or terminal node becomes
/// a leaf (internal ones hand their role to a co-located zero-cost child),
/// and every non-root node has at most two children (wider nodes expand
/// into chains of co-located zero-cost copies). Total edge cost and every
/// root-terminal path length are preserved exactly by construction.
pub fn binarize(instance: &Instance, edges: &[(usize, usize)]) -> Result<Arborescence> {
    let mut arb = Arborescence::from_tree_edges(instance, edges)?;
    prune_steiner_leaves(&mut arb);
    suppress_pass_through(&mut arb);

    // Internal terminals hand their weight and flag to a co-located
    // zero-cost leaf child.
    let internal_terminals: Vec<NodeId> = arb
        .pre_order(arb.root())
        .into_iter()
        .filter(|&v| v != arb.root() && arb.node(v).terminal && arb.out_degree(v) > 0)
        .collect();
    for v in internal_terminals {
        let (point, weight, root_dist) = {
            let n = arb.node(v);
            (n.point as usize, n.weight, n.root_dist)
        };
        arb.add_child(v, point, 0.0, weight, root_dist, true);
        let n = arb.node_mut(v);
        n.terminal = false;
        n.weight = 0.0;
    }

    // Expand non-root nodes with more than two children into chains of
    // co-located zero-cost copies, two children each.
    let wide: Vec<NodeId> = arb
        .pre_order(arb.root())
        .into_iter()
        .filter(|&v| v != arb.root() && arb.out_degree(v) > 2)
        .collect();
    for v in wide {
        let kids = std::mem::take(&mut arb.node_mut(v).children);
        let (point, root_dist) = {
            let n = arb.node(v);
            (n.point as usize, n.root_dist)
        };
        arb.node_mut(v).children.push(kids[0]);
        let mut tail = v;
        for window in 1..kids.len() - 1 {
            let copy = arb.add_child(tail, point, 0.0, 0.0, root_dist, false);
            let moved = kids[window];
            arb.node_mut(moved).parent = copy;
            arb.node_mut(copy).children.push(moved);
            tail = copy;
        }
        let last = kids[kids.len() - 1];
        arb.node_mut(last).parent = tail;
        arb.node_mut(tail).children.push(last);
    }

    Ok(rebuild_compact(&arb))
}

/// Repeatedly removes non-terminal leaves (they serve nothing).
fn prune_steiner_leaves(arb: &mut Arborescence) {
    let root = arb.root();
    let mut stack: Vec<NodeId> = arb
        .pre_order(root)
        .into_iter()
        .filter(|&v| v != root && arb.out_degree(v) == 0 && !arb.node(v).terminal)
        .collect();
    while let Some(v) = stack.pop() {
        if v == root || arb.out_degree(v) > 0 || arb.node(v).terminal {
            continue;
        }
        let parent = arb.node(v).parent;
        arb.detach(v);
        if parent != root && arb.out_degree(parent) == 0 && !arb.node(parent).terminal {
            stack.push(parent);
        }
    }
}

/// Contracts every non-root, non-terminal node with exactly one child: the
/// child takes its place with the two edge costs added. Bottom-up order
/// collapses whole chains in one pass.
fn suppress_pass_through(arb: &mut Arborescence) {
    let root = arb.root();
    for v in arb.post_order(root) {
        if v == root || arb.node(v).terminal || arb.out_degree(v) != 1 {
            continue;
        }
        let child = arb.node(v).children[0];
        let parent = arb.node(v).parent;
        let add = arb.node(v).edge_cost;
        {
            let c = arb.node_mut(child);
            c.parent = parent;
            c.edge_cost += add;
        }
        let slot = arb
            .node(parent)
            .children
            .iter()
            .position(|&c| c == v)
            .expect("child listed under parent");
        arb.node_mut(parent).children[slot] = child;
        let dead = arb.node_mut(v);
        dead.parent = NO_PARENT;
        dead.children.clear();
    }
}

/// Copies the live structure into a fresh arborescence with contiguous ids,
/// preserving child order.
fn rebuild_compact(old: &Arborescence) -> Arborescence {
    let old_root = old.node(old.root());
    let mut fresh = Arborescence::with_root(old_root.point as usize);
    {
        let r = fresh.node_mut(fresh.root());
        r.weight = old_root.weight;
        r.terminal = old_root.terminal;
    }
    let mut stack: Vec<(NodeId, NodeId)> = old_root
        .children
        .iter()
        .rev()
        .map(|&c| (c, fresh.root()))
        .collect();
    while let Some((v, new_parent)) = stack.pop() {
        let n = old.node(v);
        let id = fresh.add_child(
            new_parent,
            n.point as usize,
            n.edge_cost,
            n.weight,
            n.root_dist,
            n.terminal,
        );
        for &c in n.children.iter().rev() {
            stack.push((c, id));
        }
    }
    fresh
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Instance {
        Instance::euclidean(
            vec![
                ("r".into(), vec![0.0, 0.0]),
                ("a".into(), vec![1.0, 0.0]),
                ("b".into(), vec![0.0, 1.0]),
                ("c".into(), vec![1.0, 1.0]),
            ],
            "r",
            vec![("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn mst_is_deterministic_under_ties() {
        let instance = unit_square();
        let edges = mst_steiner(&instance).unwrap();
        // Unit edges r-a, r-b, then the (a,c)/(b,c) tie resolves to the
        // lexicographically smaller pair (a,c).
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn mst_without_terminals_is_empty() {
        let instance = Instance::euclidean(
            vec![("r".into(), vec![0.0]), ("x".into(), vec![1.0])],
            "r",
            vec![],
        )
        .unwrap();
        assert!(mst_steiner(&instance).unwrap().is_empty());
    }

    #[test]
    fn exact_uses_branching_vertex_when_cheaper() {
        // Hub h sits 0.6 from r, a, b; direct pairwise routes cost 1.
        let instance = Instance::graph(
            vec!["r".into(), "a".into(), "b".into(), "h".into()],
            vec![
                ("r".into(), "h".into(), 0.6),
                ("a".into(), "h".into(), 0.6),
                ("b".into(), "h".into(), 0.6),
                ("r".into(), "a".into(), 1.0),
                ("r".into(), "b".into(), 1.0),
                ("a".into(), "b".into(), 1.0),
            ],
            "r",
            vec![("a".into(), 1.0), ("b".into(), 1.0)],
        )
        .unwrap();
        let exact = exact_steiner(&instance).unwrap();
        let total: f64 = exact.iter().map(|&(u, v)| instance.distance(u, v)).sum();
        assert!((total - 1.8).abs() < 1e-9, "expected hub tree, got {total}");
        let mst = mst_steiner(&instance).unwrap();
        let mst_total: f64 = mst.iter().map(|&(u, v)| instance.distance(u, v)).sum();
        assert!((mst_total - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exact_guard_names_the_limit() {
        let n = 18usize;
        let ids: Vec<String> = (0..n)
            .map(|i| if i == 0 { "r".into() } else { format!("t{i}") })
            .collect();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let terminals = (1..n).map(|i| (format!("t{i}"), 1.0)).collect();
        let instance = Instance::with_matrix(ids, matrix, "r", terminals).unwrap();
        match exact_steiner(&instance) {
            Err(Error::TooLarge { limit, actual, .. }) => {
                assert_eq!(limit, EXACT_TERMINAL_LIMIT);
                assert_eq!(actual, 18);
            }
            other => panic!("expected a guard error, got {other:?}"),
        }
    }

    fn normalization_instance() -> (Instance, Vec<(usize, usize)>) {
        // Tree: r-s1; s1 fans out to t1, t2, t3 and a dead steiner leaf s3;
        // t1 continues through pass-through s2 to t4.
        let ids = ["r", "s1", "s2", "s3", "t1", "t2", "t3", "t4"];
        let edges = vec![
            ("r", "s1", 1.0),
            ("s1", "t1", 1.0),
            ("s1", "t2", 1.0),
            ("s1", "t3", 1.0),
            ("s1", "s3", 1.0),
            ("t1", "s2", 1.0),
            ("s2", "t4", 1.0),
        ];
        let instance = Instance::graph(
            ids.iter().map(|s| s.to_string()).collect(),
            edges
                .iter()
                .map(|&(a, b, l)| (a.to_string(), b.to_string(), l))
                .collect(),
            "r",
            vec![
                ("t1".into(), 1.0),
                ("t2".into(), 2.0),
                ("t3".into(), 3.0),
                ("t4".into(), 4.0),
            ],
        )
        .unwrap();
        let idx = |s: &str| ids.iter().position(|&x| x == s).unwrap();
        let tree = vec![
            (idx("r"), idx("s1")),
            (idx("s1"), idx("t1")),
            (idx("s1"), idx("t2")),
            (idx("s1"), idx("t3")),
            (idx("s1"), idx("s3")),
            (idx("t1"), idx("s2")),
            (idx("s2"), idx("t4")),
        ];
        (instance, tree)
    }

    #[test]
    fn binarize_normalizes_structure() {
        let (instance, tree) = normalization_instance();
        let arb = binarize(&instance, &tree).unwrap();
        arb.validate().unwrap();
        let root = arb.root();
        let mut weight_sum = 0.0;
        let mut spanned = std::collections::HashSet::new();
        for v in arb.pre_order(root) {
            let n = arb.node(v);
            weight_sum += n.weight;
            spanned.insert(n.point as usize);
            if v != root {
                assert!(n.children.len() <= 2, "node has {} children", n.children.len());
            }
            if n.terminal {
                assert!(n.children.is_empty(), "terminal must be a leaf");
            }
            if n.weight > 0.0 {
                assert!(n.terminal);
            }
        }
        assert!((weight_sum - 10.0).abs() < 1e-12);
        for &(t, _) in instance.terminals() {
            assert!(spanned.contains(&t), "terminal {t} lost in normalization");
        }
        // Dead branch s3 is gone; pass-through s2 contracted away.
        assert!(!spanned.contains(&3));
        assert!(!spanned.contains(&2));
        // Original cost 7 minus the pruned unit edge; the contracted
        // t1—t4 route keeps its full length 2.
        assert!((arb.total_edge_cost() - 6.0).abs() < 1e-12);
        // t1 is internal on the way to t4, so its weight moved to a
        // co-located zero-cost leaf copy.
        let t1_nodes: Vec<_> = arb
            .pre_order(root)
            .into_iter()
            .filter(|&v| arb.node(v).point == 4)
            .collect();
        assert_eq!(t1_nodes.len(), 2);
        let leaf = t1_nodes
            .iter()
            .find(|&&v| arb.node(v).children.is_empty())
            .copied()
            .unwrap();
        assert_eq!(arb.node(leaf).weight, 1.0);
        assert_eq!(arb.node(leaf).edge_cost, 0.0);
    }

    #[test]
    fn binarize_keeps_root_fanout() {
        let instance = Instance::with_matrix(
            vec!["r".into(), "a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 1.0, 1.0, 1.0],
                vec![1.0, 0.0, 2.0, 2.0],
                vec![1.0, 2.0, 0.0, 2.0],
                vec![1.0, 2.0, 2.0, 0.0],
            ],
            "r",
            vec![("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 1.0)],
        )
        .unwrap();
        let arb = binarize(&instance, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(arb.out_degree(arb.root()), 3);
        assert_eq!(arb.len(), 4);
    }

    #[test]
    fn binarize_rejects_non_tree_input() {
        let (instance, mut tree) = normalization_instance();
        tree.push((4, 7)); // closes a cycle t1—t4
        assert!(binarize(&instance, &tree).is_err());
    }
}
