//! Rooted trees (arborescences) over instance points.
//!
//! The splitting pipeline works on rooted trees whose nodes reference points
//! of an [`Instance`](crate::model::Instance). Several nodes may share one
//! point (co-located copies joined by zero-cost edges, introduced when a
//! tree is normalized to binary shape), so nodes and points are distinct
//! notions throughout.
//!
//! Each node caches the metric distance from the instance root to its point
//! (`root_dist`) and the delay weight it carries (`weight`, nonzero only on
//! the canonical terminal occurrence). This makes every downstream
//! computation — subtree aggregates, port costs, reconnection — a pure
//! function of the arborescence alone.

use crate::error::{Error, Result};
use crate::model::Instance;

/// Index of a node within an [`Arborescence`].
pub type NodeId = u32;

/// Sentinel parent value for the root node.
pub const NO_PARENT: NodeId = NodeId::MAX;

/// One node of an arborescence.
#[derive(Debug, Clone)]
pub struct ArbNode {
    /// Index into the instance point table.
    pub point: u32,
    /// Parent node, or [`NO_PARENT`] for the root (and for subtree roots
    /// that have been detached by the splitter).
    pub parent: NodeId,
    /// Cost of the edge to the parent; 0 for the root.
    pub edge_cost: f64,
    /// Delay weight carried at this node. Nonzero only on the canonical
    /// occurrence of a terminal.
    pub weight: f64,
    /// Metric distance from the instance root to this node's point.
    pub root_dist: f64,
    /// Whether this node is the canonical occurrence of a terminal.
    pub terminal: bool,
    /// Child nodes, in construction order.
    pub children: Vec<NodeId>,
}

/// A rooted tree with parent/child structure and per-edge costs.
#[derive(Debug, Clone)]
pub struct Arborescence {
    nodes: Vec<ArbNode>,
    root: NodeId,
}

impl Arborescence {
    /// Creates an arborescence containing only a root node for `point`.
    pub fn with_root(point: usize) -> Self {
        Arborescence {
            nodes: vec![ArbNode {
                point: point as u32,
                parent: NO_PARENT,
                edge_cost: 0.0,
                weight: 0.0,
                root_dist: 0.0,
                terminal: false,
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    /// Adds a child of `parent` and returns its id.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        point: usize,
        edge_cost: f64,
        weight: f64,
        root_dist: f64,
        terminal: bool,
    ) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(ArbNode {
            point: point as u32,
            parent,
            edge_cost,
            weight,
            root_dist,
            terminal,
            children: Vec::new(),
        });
        self.nodes[parent as usize].children.push(id);
        id
    }

    /// Orients an undirected edge set over points into an arborescence
    /// rooted at the instance root. Weights, terminal flags, edge costs,
    /// and root distances are taken from the instance.
    ///
    /// Fails unless the edges form a tree whose vertex set contains the
    /// root and every terminal, with each point used at most once.
    pub fn from_tree_edges(instance: &Instance, edges: &[(usize, usize)]) -> Result<Self> {
        let n = instance.point_count();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NotATree(format!(
                    "edge endpoint index {} is out of range",
                    u.max(v)
                )));
            }
            if u == v {
                return Err(Error::NotATree(format!("self-loop at {}", instance.id(u))));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        let rp = instance.root();
        if !edges.is_empty() && adj[rp].is_empty() {
            return Err(Error::NotATree(format!(
                "root {} is not covered by any edge",
                instance.id(rp)
            )));
        }
        let mut arb = Arborescence::with_root(rp);
        arb.nodes[0].weight = instance.weight_of(rp);
        arb.nodes[0].terminal = instance.is_terminal(rp);
        let mut node_of: Vec<NodeId> = vec![NO_PARENT; n];
        node_of[rp] = 0;
        let mut stack = vec![rp];
        let mut visited = 1usize;
        while let Some(p) = stack.pop() {
            let pn = node_of[p];
            // Clone the adjacency row to avoid holding a borrow across the
            // mutation below; rows are short for trees.
            let row = adj[p].clone();
            for q in row {
                let q = q as usize;
                if node_of[q] != NO_PARENT {
                    if node_of[q] != arb.nodes[pn as usize].parent {
                        return Err(Error::NotATree(format!(
                            "cycle through {}",
                            instance.id(q)
                        )));
                    }
                    continue;
                }
                let id = arb.add_child(
                    pn,
                    q,
                    instance.distance(p, q),
                    instance.weight_of(q),
                    instance.root_distance(q),
                    instance.is_terminal(q),
                );
                node_of[q] = id;
                visited += 1;
                stack.push(q);
            }
        }
        // A tree on E edges spans exactly E + 1 vertices; anything less
        // reachable from the root means a disconnected piece remains.
        if visited != edges.len() + 1 {
            // Some touched vertex never became reachable from the root.
            let stray = (0..n)
                .find(|&p| node_of[p] == NO_PARENT && adj[p].iter().len() > 0)
                .map(|p| instance.id(p).to_string())
                .unwrap_or_else(|| "?".into());
            return Err(Error::NotATree(format!(
                "{stray} is not connected to the root"
            )));
        }
        for &(t, _) in instance.terminals() {
            if node_of[t] == NO_PARENT {
                return Err(Error::NotATree(format!(
                    "terminal {} is not spanned",
                    instance.id(t)
                )));
            }
        }
        Ok(arb)
    }

    /// The root node id.
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Whether the arborescence has no nodes (never true: there is always a root).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Immutable access to a node.
    pub fn node(&self, id: NodeId) -> &ArbNode {
        &self.nodes[id as usize]
    }

    /// Mutable access to a node.
    pub fn node_mut(&mut self, id: NodeId) -> &mut ArbNode {
        &mut self.nodes[id as usize]
    }

    /// All nodes, indexable by `NodeId`.
    pub fn nodes(&self) -> &[ArbNode] {
        &self.nodes
    }

    /// Number of children of `id`.
    pub fn out_degree(&self, id: NodeId) -> usize {
        self.nodes[id as usize].children.len()
    }

    /// Detaches `child` from its parent, returning the severed edge cost.
    /// The child becomes the root of its own component (parent set to
    /// [`NO_PARENT`]); its subtree is untouched.
    pub fn detach(&mut self, child: NodeId) -> f64 {
        let parent = self.nodes[child as usize].parent;
        debug_assert_ne!(parent, NO_PARENT, "cannot detach the root");
        let siblings = &mut self.nodes[parent as usize].children;
        let pos = siblings
            .iter()
            .position(|&c| c == child)
            .expect("child/parent link out of sync");
        siblings.remove(pos);
        self.nodes[child as usize].parent = NO_PARENT;
        self.nodes[child as usize].edge_cost
    }

    /// Post-order traversal of the subtree rooted at `start` (children in
    /// child-list order, parents after all descendants). Iterative, so it
    /// handles million-node path-shaped trees without stack overflow.
    pub fn post_order(&self, start: NodeId) -> Vec<NodeId> {
        let mut order = Vec::new();
        // (node, next child cursor)
        let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut cursor)) = stack.last_mut() {
            let kids = &self.nodes[v as usize].children;
            if *cursor < kids.len() {
                let c = kids[*cursor];
                *cursor += 1;
                stack.push((c, 0));
            } else {
                order.push(v);
                stack.pop();
            }
        }
        order
    }

    /// Pre-order traversal of the subtree rooted at `start` (each parent
    /// before its children, children in child-list order).
    pub fn pre_order(&self, start: NodeId) -> Vec<NodeId> {
        let mut order = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in self.nodes[v as usize].children.iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    /// Total edge cost of the subtree rooted at `start` (edge to the parent
    /// of `start` excluded).
    pub fn subtree_edge_cost(&self, start: NodeId) -> f64 {
        self.pre_order(start)
            .iter()
            .filter(|&&v| v != start)
            .map(|&v| self.nodes[v as usize].edge_cost)
            .sum()
    }

    /// Total edge cost of the whole arborescence.
    pub fn total_edge_cost(&self) -> f64 {
        self.subtree_edge_cost(self.root)
    }

    /// Checks parent/child consistency and reachability of every node from
    /// the root. Intended for tests and debug assertions.
    pub fn validate(&self) -> Result<()> {
        if self.nodes[self.root as usize].parent != NO_PARENT {
            return Err(Error::Invariant("root has a parent".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        for v in self.pre_order(self.root) {
            if seen[v as usize] {
                return Err(Error::Invariant(format!("node {v} visited twice")));
            }
            seen[v as usize] = true;
            for &c in &self.nodes[v as usize].children {
                if self.nodes[c as usize].parent != v {
                    return Err(Error::Invariant(format!(
                        "child {c} does not point back to parent {v}"
                    )));
                }
            }
        }
        if let Some(unreached) = seen.iter().position(|&s| !s) {
            return Err(Error::Invariant(format!(
                "node {unreached} unreachable from the root"
            )));
        }
        Ok(())
    }

    /// The point-pair form of every parent edge in the subtree at `start`.
    /// Co-located copies yield self-pairs; callers filter as needed.
    pub fn subtree_point_edges(&self, start: NodeId) -> Vec<(usize, usize)> {
        self.pre_order(start)
            .iter()
            .filter(|&&v| v != start)
            .map(|&v| {
                let n = &self.nodes[v as usize];
                (
                    self.nodes[n.parent as usize].point as usize,
                    n.point as usize,
                )
            })
            .collect()
    }
}
