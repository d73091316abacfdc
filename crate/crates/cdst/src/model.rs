//! Core problem model: metric spaces over a finite point table, instances
//! (root, weighted terminals), candidate solutions, and cost evaluation.
//!
//! A solution is a tree over points of the instance; an edge `{u, v}` always
//! costs the metric distance between its endpoints. The objective adds the
//! total edge length (connection cost) to the weighted root-to-terminal path
//! lengths (delay cost).

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Absolute tolerance for cost comparisons and metric audits.
///
/// All cost arithmetic is plain `f64`; equality of recomputed costs, bound
/// checks, and the triangle-inequality audit use this slack.
pub const COST_TOL: f64 = 1e-9;

/// Relative tolerance for exact-preservation checks (tree rewrites that must
/// not change total cost, e.g. arborescence normalization).
pub const PRESERVE_REL_TOL: f64 = 1e-12;

/// How distances between points are defined.
#[derive(Debug, Clone)]
pub enum MetricSpec {
    /// Explicit symmetric distance matrix, indexed like the point table.
    Matrix { distances: Vec<Vec<f64>> },
    /// Points carry coordinates; distance is the Euclidean norm.
    Euclidean { dimension: usize },
    /// Distances are shortest paths in an undirected weighted graph whose
    /// vertices are the points.
    Graph { edges: Vec<(usize, usize, f64)> },
}

enum MetricData {
    Matrix {
        d: Vec<f64>,
        n: usize,
    },
    Euclidean {
        dim: usize,
        coords: Vec<f64>,
    },
    Graph {
        adj: Vec<Vec<(u32, f64)>>,
        rows: Vec<OnceLock<Box<[f64]>>>,
    },
}

/// A problem instance: a finite metric over named points, a root point, and
/// weighted terminals. Immutable after construction; all operations taking
/// `&Instance` are pure and safe to call concurrently.
pub struct Instance {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    metric: MetricData,
    spec: MetricSpec,
    root: usize,
    /// `(point index, weight)` pairs, in input order.
    terminals: Vec<(usize, f64)>,
    /// Weight per point (0.0 for non-terminals), plus a terminal flag.
    weight_of: Vec<f64>,
    is_terminal: Vec<bool>,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("points", &self.ids.len())
            .field("root", &self.ids[self.root])
            .field("terminals", &self.terminals.len())
            .field(
                "metric",
                &match self.metric {
                    MetricData::Matrix { .. } => "matrix",
                    MetricData::Euclidean { .. } => "euclidean",
                    MetricData::Graph { .. } => "graph",
                },
            )
            .finish()
    }
}

impl Instance {
    /// Builds an instance over an explicit distance matrix. The matrix must
    /// be square, symmetric, zero on the diagonal, non-negative, and satisfy
    /// the triangle inequality within [`COST_TOL`].
    pub fn with_matrix(
        ids: Vec<String>,
        distances: Vec<Vec<f64>>,
        root: &str,
        terminals: Vec<(String, f64)>,
    ) -> Result<Self> {
        let n = ids.len();
        if distances.len() != n {
            return Err(Error::InvalidInstance(format!(
                "distance matrix has {} rows for {} points",
                distances.len(),
                n
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in distances.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "distance matrix row {i} has {} entries for {} points",
                    row.len(),
                    n
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "distance[{i}][{j}] = {v} is not a finite non-negative number"
                    )));
                }
                flat.push(v);
            }
        }
        for i in 0..n {
            if flat[i * n + i] != 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "distance[{i}][{i}] = {} must be 0",
                    flat[i * n + i]
                )));
            }
            for j in 0..i {
                if (flat[i * n + j] - flat[j * n + i]).abs() > COST_TOL {
                    return Err(Error::InvalidInstance(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        flat[i * n + j],
                        flat[j * n + i]
                    )));
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                let dik = flat[i * n + k];
                for j in 0..n {
                    if flat[i * n + j] > dik + flat[k * n + j] + COST_TOL {
                        return Err(Error::InvalidInstance(format!(
                            "triangle inequality fails: d({},{}) = {} > d({},{}) + d({},{}) = {}",
                            ids[i],
                            ids[j],
                            flat[i * n + j],
                            ids[i],
                            ids[k],
                            ids[k],
                            ids[j],
                            dik + flat[k * n + j]
                        )));
                    }
                }
            }
        }
        let spec = MetricSpec::Matrix {
            distances: distances.clone(),
        };
        Self::assemble(ids, MetricData::Matrix { d: flat, n }, spec, root, terminals)
    }

    /// Builds an instance over points with coordinates; distances are
    /// Euclidean. All points must share `dimension`.
    pub fn euclidean(
        points: Vec<(String, Vec<f64>)>,
        root: &str,
        terminals: Vec<(String, f64)>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInstance("no points".into()));
        }
        let dim = points[0].1.len();
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (id, c) in points {
            if c.len() != dim {
                return Err(Error::InvalidInstance(format!(
                    "point {id} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "point {id} has a non-finite coordinate"
                )));
            }
            ids.push(id);
            coords.extend_from_slice(&c);
        }
        Self::assemble(
            ids,
            MetricData::Euclidean { dim, coords },
            MetricSpec::Euclidean { dimension: dim },
            root,
            terminals,
        )
    }

    /// Builds an instance whose metric is shortest-path distance in a
    /// connected undirected graph over the points. Edge lengths must be
    /// finite and non-negative.
    pub fn graph(
        ids: Vec<String>,
        edges: Vec<(String, String, f64)>,
        root: &str,
        terminals: Vec<(String, f64)>,
    ) -> Result<Self> {
        let index: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        let mut edge_idx = Vec::with_capacity(edges.len());
        for (u, v, len) in &edges {
            let (&ui, &vi) = match (index.get(u.as_str()), index.get(v.as_str())) {
                (Some(a), Some(b)) => (a, b),
                (None, _) => {
                    return Err(Error::InvalidInstance(format!("edge endpoint {u} is not a point")))
                }
                (_, None) => {
                    return Err(Error::InvalidInstance(format!("edge endpoint {v} is not a point")))
                }
            };
            if !len.is_finite() || *len < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "edge ({u},{v}) has length {len}; lengths must be finite and non-negative"
                )));
            }
            if ui == vi {
                return Err(Error::InvalidInstance(format!("self-loop at {u}")));
            }
            adj[ui].push((vi as u32, *len));
            adj[vi].push((ui as u32, *len));
            edge_idx.push((ui, vi, *len));
        }
        // The metric must be total: require one connected component.
        let n = ids.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w as usize);
                }
            }
        }
        if count != n {
            let missing = seen.iter().position(|s| !s).unwrap();
            return Err(Error::InvalidInstance(format!(
                "graph is disconnected: {} is unreachable from {}",
                ids[missing], ids[0]
            )));
        }
        let rows = (0..n).map(|_| OnceLock::new()).collect();
        Self::assemble(
            ids,
            MetricData::Graph { adj, rows },
            MetricSpec::Graph { edges: edge_idx },
            root,
            terminals,
        )
    }

    fn assemble(
        ids: Vec<String>,
        metric: MetricData,
        spec: MetricSpec,
        root: &str,
        terminals: Vec<(String, f64)>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate point id {id}")));
            }
        }
        let root_ix = *index
            .get(root)
            .ok_or_else(|| Error::InvalidInstance(format!("root {root} is not a point")))?;
        let mut term_ix = Vec::with_capacity(terminals.len());
        let mut weight_of = vec![0.0; ids.len()];
        let mut is_terminal = vec![false; ids.len()];
        for (id, w) in &terminals {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::InvalidInstance(format!("terminal {id} is not a point")))?;
            if i == root_ix {
                return Err(Error::InvalidInstance(format!(
                    "root {id} cannot also be a terminal"
                )));
            }
            if is_terminal[i] {
                return Err(Error::InvalidInstance(format!("duplicate terminal {id}")));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "terminal {id} has weight {w}; weights must be finite and non-negative"
                )));
            }
            is_terminal[i] = true;
            weight_of[i] = *w;
            term_ix.push((i, *w));
        }
        Ok(Instance {
            ids,
            index,
            metric,
            spec,
            root: root_ix,
            terminals: term_ix,
            weight_of,
            is_terminal,
        })
    }

    /// Number of points in the table.
    pub fn point_count(&self) -> usize {
        self.ids.len()
    }

    /// The id of point `i`.
    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    /// Index of the point with the given id, if present.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Point index of the root.
    pub fn root(&self) -> usize {
        self.root
    }

    /// Terminals as `(point index, weight)`, in input order.
    pub fn terminals(&self) -> &[(usize, f64)] {
        &self.terminals
    }

    /// The delay weight of point `i` (0 for non-terminals).
    pub fn weight_of(&self, i: usize) -> f64 {
        self.weight_of[i]
    }

    /// Whether point `i` is a terminal.
    pub fn is_terminal(&self, i: usize) -> bool {
        self.is_terminal[i]
    }

    /// The metric description this instance was built from.
    pub fn metric_spec(&self) -> &MetricSpec {
        &self.spec
    }

    /// Distance between two points. For graph metrics the row of shortest
    /// paths from `u` is computed on first use and cached.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        match &self.metric {
            MetricData::Matrix { d, n } => d[u * n + v],
            MetricData::Euclidean { dim, coords } => {
                let a = &coords[u * dim..(u + 1) * dim];
                let b = &coords[v * dim..(v + 1) * dim];
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
            MetricData::Graph { adj, rows } => {
                if u == v {
                    return 0.0;
                }
                rows[u].get_or_init(|| dijkstra(adj, u))[v]
            }
        }
    }

    /// Distance from the root to `v`.
    pub fn root_distance(&self, v: usize) -> f64 {
        self.distance(self.root, v)
    }

    /// Graph edges `(u, v, length)` when the metric is graph-based.
    pub fn graph_edges(&self) -> Option<&[(usize, usize, f64)]> {
        match &self.spec {
            MetricSpec::Graph { edges } => Some(edges),
            _ => None,
        }
    }

    /// Coordinates of point `v` when the metric is Euclidean.
    pub fn coordinates(&self, v: usize) -> Option<&[f64]> {
        match &self.metric {
            MetricData::Euclidean { dim, coords } => Some(&coords[v * dim..(v + 1) * dim]),
            _ => None,
        }
    }
}

fn dijkstra(adj: &[Vec<(u32, f64)>], src: usize) -> Box<[f64]> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64, u32);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .partial_cmp(&other.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.1.cmp(&other.1))
        }
    }

    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Key(0.0, src as u32)));
    while let Some(Reverse(Key(d, v))) = heap.pop() {
        let v = v as usize;
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Reverse(Key(nd, w)));
            }
        }
    }
    dist.into_boxed_slice()
}

/// A candidate solution: an undirected edge set over point indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub edges: Vec<(usize, usize)>,
}

/// The two cost terms of the objective and their sum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostBreakdown {
    /// Total edge length of the tree.
    pub connection: f64,
    /// Sum over terminals of weight times root-to-terminal path length.
    pub delay: f64,
    /// `connection + delay`.
    pub total: f64,
}

/// Validates that `solution` is a tree spanning the root and every terminal,
/// then returns its connection cost, delay cost, and total.
///
/// Structural failures (cycle, disconnection, unreachable terminal,
/// duplicate edge) name the offending vertex in the error.
pub fn evaluate_cost(instance: &Instance, solution: &Solution) -> Result<CostBreakdown> {
    let n = instance.point_count();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut touched = vec![false; n];
    let mut connection = 0.0;
    for &(u, v) in &solution.edges {
        if u >= n || v >= n {
            return Err(Error::NotATree(format!(
                "edge endpoint index {} is out of range",
                u.max(v)
            )));
        }
        if u == v {
            return Err(Error::NotATree(format!(
                "self-loop at {}",
                instance.id(u)
            )));
        }
        let c = instance.distance(u, v);
        adj[u].push((v as u32, c));
        adj[v].push((u as u32, c));
        touched[u] = true;
        touched[v] = true;
        connection += c;
    }
    let root = instance.root();
    touched[root] = true;

    // One BFS from the root both checks the tree shape and yields the
    // root-to-vertex path lengths used for the delay term.
    let mut depth = vec![f64::NEG_INFINITY; n];
    let mut parent = vec![u32::MAX; n];
    depth[root] = 0.0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root as u32);
    let mut visited = 1usize;
    while let Some(v) = queue.pop_front() {
        let vu = v as usize;
        for &(w, c) in &adj[vu] {
            if w == parent[vu] {
                parent[vu] = u32::MAX - 1; // consume one back-edge to the parent
                continue;
            }
            let wu = w as usize;
            if depth[wu] != f64::NEG_INFINITY {
                return Err(Error::NotATree(format!(
                    "cycle through {}",
                    instance.id(wu)
                )));
            }
            depth[wu] = depth[vu] + c;
            parent[wu] = v;
            visited += 1;
            queue.push_back(w);
        }
    }
    let touched_count = touched.iter().filter(|&&t| t).count();
    if visited != touched_count {
        let stray = (0..n)
            .find(|&i| touched[i] && depth[i] == f64::NEG_INFINITY)
            .unwrap();
        return Err(Error::NotATree(format!(
            "{} is not connected to the root",
            instance.id(stray)
        )));
    }

    let mut delay = 0.0;
    for &(t, w) in instance.terminals() {
        if depth[t] == f64::NEG_INFINITY {
            return Err(Error::NotATree(format!(
                "terminal {} is not spanned",
                instance.id(t)
            )));
        }
        delay += w * depth[t];
    }
    Ok(CostBreakdown {
        connection,
        delay,
        total: connection + delay,
    })
}

/// Sum over terminals of weight times metric distance from the root: a lower
/// bound on the delay cost of any solution.
pub fn delay_lower_bound(instance: &Instance) -> f64 {
    instance
        .terminals()
        .iter()
        .map(|&(t, w)| w * instance.root_distance(t))
        .sum()
}

/// `smt_cost + delay_lower_bound`: no solution can cost less than the
/// minimum Steiner tree length plus the direct-path delay term.
pub fn lower_bound(instance: &Instance, smt_cost: f64) -> f64 {
    smt_cost + delay_lower_bound(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(id: &str, w: f64) -> (String, f64) {
        (id.to_string(), w)
    }

    /// Complete unit-distance metric on `n` points named by `names`.
    pub(crate) fn unit_matrix(names: &[&str]) -> Vec<Vec<f64>> {
        let n = names.len();
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect()
    }

    #[test]
    fn single_edge_costs() {
        let inst = Instance::with_matrix(
            vec!["r".into(), "t".into()],
            vec![vec![0.0, 5.0], vec![5.0, 0.0]],
            "r",
            vec![term("t", 2.0)],
        )
        .unwrap();
        let sol = Solution { edges: vec![(0, 1)] };
        let costs = evaluate_cost(&inst, &sol).unwrap();
        assert_eq!(costs.connection, 5.0);
        assert_eq!(costs.delay, 10.0);
        assert_eq!(costs.total, 15.0);
    }

    #[test]
    fn empty_terminal_set_allows_empty_solution() {
        let inst = Instance::with_matrix(
            vec!["r".into()],
            vec![vec![0.0]],
            "r",
            vec![],
        )
        .unwrap();
        let costs = evaluate_cost(&inst, &Solution { edges: vec![] }).unwrap();
        assert_eq!(costs.total, 0.0);
    }

    #[test]
    fn cycle_is_rejected_with_vertex_name() {
        let names = ["r", "a", "b"];
        let inst = Instance::with_matrix(
            names.iter().map(|s| s.to_string()).collect(),
            unit_matrix(&names),
            "r",
            vec![term("a", 1.0), term("b", 1.0)],
        )
        .unwrap();
        let sol = Solution {
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        let err = evaluate_cost(&inst, &sol).unwrap_err();
        assert!(matches!(err, Error::NotATree(_)), "{err}");
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn unreachable_terminal_is_named() {
        let names = ["r", "a", "b", "c"];
        let inst = Instance::with_matrix(
            names.iter().map(|s| s.to_string()).collect(),
            unit_matrix(&names),
            "r",
            vec![term("a", 1.0), term("c", 1.0)],
        )
        .unwrap();
        // "c" and "b" form their own component.
        let sol = Solution {
            edges: vec![(0, 1), (2, 3)],
        };
        let err = evaluate_cost(&inst, &sol).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('b') || msg.contains('c'), "{msg}");
    }

    #[test]
    fn triangle_violation_is_rejected() {
        let err = Instance::with_matrix(
            vec!["r".into(), "a".into(), "b".into()],
            vec![
                vec![0.0, 1.0, 5.0],
                vec![1.0, 0.0, 1.0],
                vec![5.0, 1.0, 0.0],
            ],
            "r",
            vec![term("a", 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("triangle"), "{err}");
    }

    #[test]
    fn graph_metric_shortest_paths() {
        let inst = Instance::graph(
            vec!["r".into(), "a".into(), "t".into()],
            vec![
                ("r".into(), "a".into(), 1.0),
                ("a".into(), "t".into(), 1.0),
                ("r".into(), "t".into(), 5.0),
            ],
            "r",
            vec![term("t", 1.0)],
        )
        .unwrap();
        assert_eq!(inst.distance(0, 2), 2.0);
        assert_eq!(inst.distance(2, 0), 2.0);
        assert_eq!(inst.root_distance(1), 1.0);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = Instance::graph(
            vec!["r".into(), "a".into(), "b".into()],
            vec![("r".into(), "a".into(), 1.0)],
            "r",
            vec![term("a", 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
    }

    #[test]
    fn delay_bound_sums_direct_distances() {
        let names = ["r", "a", "b"];
        let inst = Instance::with_matrix(
            names.iter().map(|s| s.to_string()).collect(),
            vec![
                vec![0.0, 2.0, 3.0],
                vec![2.0, 0.0, 4.0],
                vec![3.0, 4.0, 0.0],
            ],
            "r",
            vec![term("a", 1.5), term("b", 0.5)],
        )
        .unwrap();
        assert_eq!(delay_lower_bound(&inst), 1.5 * 2.0 + 0.5 * 3.0);
        assert_eq!(lower_bound(&inst, 10.0), 10.0 + 4.5);
    }
}
