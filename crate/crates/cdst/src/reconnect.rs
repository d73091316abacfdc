//! Re-attachment of cut components through cost-optimal ports, the two-case
//! rule for the root component's children, the delay/connection trade-off
//! parameter choice, and the end-to-end solve pipeline.

use std::collections::HashMap;
use std::time::Instant;

use crate::aggregates::SubtreeAggregates;
use crate::arborescence::{Arborescence, NodeId};
use crate::error::{Error, Result};
use crate::model::{delay_lower_bound, evaluate_cost, Instance, Solution, COST_TOL};
use crate::report::{
    BoundCheck, ComponentReport, PipelineStats, RootChildReport, RootComponentReport, RunReport,
};
use crate::split::{split, SplitRule};

/// Cost of re-attaching a whole component to the root through each of its
/// nodes: the component's own edges, the candidate's direct link to the
/// root, and the delay of every terminal in the component routed that way.
///
/// The component root's cost is evaluated directly from its aggregates; every
/// other node's cost follows from its parent by a constant-time update, so
/// the whole scan is linear in component size.
pub fn port_costs(
    arb: &Arborescence,
    comp_root: NodeId,
    agg: &[SubtreeAggregates],
) -> Vec<(NodeId, f64)> {
    let top = agg[comp_root as usize];
    let total_weight = top.weight;
    let comp_edges = top.edge_cost;
    let mut out = Vec::new();
    // `reach` is the weighted distance from the candidate to every terminal
    // of the component; at the component root it is exactly the
    // below-weight-cost aggregate. Walking an edge of cost `ce` toward a
    // child moves weight `w_child` closer and the rest farther.
    let mut stack = vec![(comp_root, top.below_weight_cost)];
    while let Some((v, reach)) = stack.pop() {
        let node = arb.node(v);
        out.push((v, node.root_dist * (1.0 + total_weight) + comp_edges + reach));
        for &ch in &node.children {
            let ce = arb.node(ch).edge_cost;
            let w_child = agg[ch as usize].weight;
            stack.push((ch, reach + ce * (total_weight - 2.0 * w_child)));
        }
    }
    out
}

/// Picks the cheapest port for the component rooted at `comp_root`.
/// Candidates are the component's terminals, or every node when
/// `allow_steiner` is set; exact cost ties go to the smallest point id.
pub fn select_port(
    arb: &Arborescence,
    comp_root: NodeId,
    agg: &[SubtreeAggregates],
    instance: &Instance,
    allow_steiner: bool,
) -> Result<(NodeId, f64)> {
    let mut best: Option<(NodeId, f64, &str)> = None;
    for (v, cost) in port_costs(arb, comp_root, agg) {
        let node = arb.node(v);
        if !node.terminal && !allow_steiner {
            continue;
        }
        let id = instance.id(node.point as usize);
        let better = match &best {
            None => true,
            Some((_, best_cost, best_id)) => {
                cost < *best_cost || (cost == *best_cost && id < *best_id)
            }
        };
        if better {
            best = Some((v, cost, id));
        }
    }
    best.map(|(v, c, _)| (v, c)).ok_or_else(|| {
        Error::Invariant(format!(
            "component rooted at point {} contains no terminal to serve as a port",
            instance.id(arb.node(comp_root).point as usize)
        ))
    })
}

/// What to do with one child subtree of the root component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildAction {
    /// Leave the subtree attached through its original root edge.
    Keep,
    /// Sever the root edge and re-attach through this port node.
    Port(NodeId),
    /// The subtree serves no terminal; it is omitted from the solution.
    Drop,
}

/// Outcome of the two-case rule for one root child.
#[derive(Debug, Clone)]
pub struct RootChildDecision {
    pub child: NodeId,
    pub action: ChildAction,
    /// Cost charged to keeping: (1 + W)·(C_x + c(r,x)).
    pub keep_cost: f64,
    /// Cheapest port re-attachment cost, when it was evaluated.
    pub port_cost: Option<f64>,
    /// Cost of the action actually taken (0 for Drop).
    pub chosen_cost: f64,
}

/// Decides keep-vs-reattach for every child subtree of the root.
///
/// The refined rule evaluates both options and takes the cheaper (ties keep
/// the original edge); the weight-threshold rule always keeps. Subtrees
/// without any terminal are dropped under both rules. Requires the split
/// invariant that every child subtree weight is at most `mu`.
pub fn reconnect_root_component(
    arb: &Arborescence,
    agg: &[SubtreeAggregates],
    instance: &Instance,
    mu: f64,
    rule: SplitRule,
    allow_steiner: bool,
) -> Result<Vec<RootChildDecision>> {
    let mut out = Vec::new();
    for &x in &arb.node(arb.root()).children {
        let a = agg[x as usize];
        if a.weight > mu + COST_TOL * (1.0 + mu) {
            return Err(Error::Invariant(format!(
                "root child subtree at point {} has weight {} exceeding the splitting threshold {mu}",
                instance.id(arb.node(x).point as usize),
                a.weight
            )));
        }
        let link = arb.node(x).edge_cost;
        let keep_cost = (1.0 + a.weight) * (a.edge_cost + link);
        if !subtree_has_terminal(arb, x) {
            out.push(RootChildDecision {
                child: x,
                action: ChildAction::Drop,
                keep_cost,
                port_cost: None,
                chosen_cost: 0.0,
            });
            continue;
        }
        let decision = match rule {
            SplitRule::WeightThreshold => RootChildDecision {
                child: x,
                action: ChildAction::Keep,
                keep_cost,
                port_cost: None,
                chosen_cost: keep_cost,
            },
            SplitRule::Refined => {
                let (port, port_cost) = select_port(arb, x, agg, instance, allow_steiner)?;
                if port_cost < keep_cost {
                    RootChildDecision {
                        child: x,
                        action: ChildAction::Port(port),
                        keep_cost,
                        port_cost: Some(port_cost),
                        chosen_cost: port_cost,
                    }
                } else {
                    RootChildDecision {
                        child: x,
                        action: ChildAction::Keep,
                        keep_cost,
                        port_cost: Some(port_cost),
                        chosen_cost: keep_cost,
                    }
                }
            }
        };
        out.push(decision);
    }
    Ok(out)
}

fn subtree_has_terminal(arb: &Arborescence, start: NodeId) -> bool {
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        let node = arb.node(v);
        if node.terminal {
            return true;
        }
        stack.extend_from_slice(&node.children);
    }
    false
}

/// Result of choosing the splitting threshold from the initial tree's
/// connection cost C and the instance's direct-delay total D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuChoice {
    Value(f64),
    /// C = 0: every root-terminal path in the tree has length 0, so the
    /// initial tree is already optimal.
    InitialTreeOptimal,
    /// D = 0: no weighted terminal exists, so no cut can reduce cost.
    KeepInitialTree,
}

/// Picks the splitting threshold sqrt(2D/C), or a shortcut signal when
/// either quantity is zero.
pub fn choose_mu(edge_cost: f64, direct_delay: f64) -> Result<MuChoice> {
    if !(edge_cost >= 0.0) || !(direct_delay >= 0.0) {
        return Err(Error::domain(
            "choose_mu",
            "edge cost and direct delay must be non-negative",
        ));
    }
    if edge_cost == 0.0 {
        return Ok(MuChoice::InitialTreeOptimal);
    }
    if direct_delay == 0.0 {
        return Ok(MuChoice::KeepInitialTree);
    }
    Ok(MuChoice::Value((2.0 * direct_delay / edge_cost).sqrt()))
}

/// How the initial tree is built, and the Steiner approximation grade it
/// carries (used for the baseline threshold default and the lower-bound
/// floor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMethod {
    /// Spanning tree over the metric closure of terminals plus root
    /// (2-approximate Steiner tree).
    Mst,
    /// Exact minimum Steiner tree by dynamic programming (small terminal
    /// counts only).
    Exact,
}

impl BetaMethod {
    pub fn label(self) -> &'static str {
        match self {
            BetaMethod::Mst => "mst",
            BetaMethod::Exact => "exact",
        }
    }

    /// Steiner-tree approximation factor of the method.
    pub fn factor(self) -> f64 {
        match self {
            BetaMethod::Mst => 2.0,
            BetaMethod::Exact => 1.0,
        }
    }

    /// Fraction of the initial tree's cost that is an admissible lower
    /// bound on minimum Steiner tree length.
    fn floor_frac(self) -> f64 {
        match self {
            BetaMethod::Mst => 0.5,
            BetaMethod::Exact => 1.0,
        }
    }
}

/// Knobs for [`solve`] / [`solve_with_initial_tree`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub splitter: SplitRule,
    /// Explicit threshold; `None` selects it automatically (improved:
    /// sqrt(2D/C); baseline: 1/beta).
    pub mu_override: Option<f64>,
    /// Allow Steiner nodes as port candidates.
    pub ports_any: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            splitter: SplitRule::Refined,
            mu_override: None,
            ports_any: false,
        }
    }
}

/// Full pipeline: build the initial tree, normalize it, choose the
/// threshold, split, reconnect, and assemble the final tree with a full
/// bound-check report.
pub fn solve(
    instance: &Instance,
    beta: BetaMethod,
    opts: &SolveOptions,
) -> Result<(Solution, RunReport)> {
    let edges = match beta {
        BetaMethod::Mst => crate::init::mst_steiner(instance)?,
        BetaMethod::Exact => crate::init::exact_steiner(instance)?,
    };
    run_pipeline(
        instance,
        &edges,
        beta.label(),
        beta.factor(),
        beta.floor_frac(),
        opts,
    )
}

/// Same pipeline over a caller-supplied initial tree (edges as point-index
/// pairs). The tree is taken at face value: no Steiner-length floor is
/// claimed for the lower bound, and the baseline threshold default treats it
/// as exact-grade (beta = 1).
pub fn solve_with_initial_tree(
    instance: &Instance,
    edges: &[(usize, usize)],
    opts: &SolveOptions,
) -> Result<(Solution, RunReport)> {
    run_pipeline(instance, edges, "given", 1.0, 0.0, opts)
}

fn run_pipeline(
    instance: &Instance,
    initial_edges: &[(usize, usize)],
    beta_label: &str,
    beta_factor: f64,
    floor_frac: f64,
    opts: &SolveOptions,
) -> Result<(Solution, RunReport)> {
    let t_total = Instant::now();
    let mut arb = crate::init::binarize(instance, initial_edges)?;
    let initial_edge_cost = arb.total_edge_cost();
    let direct_delay_total = delay_lower_bound(instance);
    let lower_bound = direct_delay_total + floor_frac * initial_edge_cost;

    if let Some(m) = opts.mu_override {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::domain("solve", "mu override must be finite and > 0"));
        }
    }
    let (mu, mu_source, shortcut) = match opts.mu_override {
        Some(m) => (Some(m), "override", None),
        None => match opts.splitter {
            SplitRule::WeightThreshold => (Some(1.0 / beta_factor), "default", None),
            SplitRule::Refined => match choose_mu(initial_edge_cost, direct_delay_total)? {
                MuChoice::Value(m) => (Some(m), "auto", None),
                MuChoice::InitialTreeOptimal => (None, "shortcut", Some("zero-edge-cost")),
                MuChoice::KeepInitialTree => (None, "shortcut", Some("zero-delay-weight")),
            },
        },
    };

    let Some(mu) = mu else {
        // Shortcut: the initial tree is returned unchanged.
        let solution = Solution {
            edges: initial_edges.to_vec(),
        };
        let costs = evaluate_cost(instance, &solution)?;
        let ratio = if lower_bound > COST_TOL {
            Some(costs.total / lower_bound)
        } else {
            None
        };
        let mut report = RunReport {
            splitter: opts.splitter.label().to_string(),
            beta_method: beta_label.to_string(),
            mu: None,
            mu_source: mu_source.to_string(),
            shortcut: shortcut.map(str::to_string),
            initial_edge_cost,
            direct_delay_total,
            components: Vec::new(),
            root_component: None,
            costs,
            total_budget: None,
            lower_bound,
            ratio,
            bounds_ok: true,
            violations: Vec::new(),
            stats: PipelineStats {
                total_wall_micros: t_total.elapsed().as_micros() as u64,
                ..PipelineStats::default()
            },
        };
        report.finalize_checks();
        return Ok((solution, report));
    };

    let t_split = Instant::now();
    let outcome = split(&mut arb, mu, opts.splitter)?;
    let split_wall = t_split.elapsed();

    let t_reconnect = Instant::now();
    let root_point = instance.root();
    let mut reconnect_visits: u64 = 0;
    let mut collected: Vec<(usize, usize)> = Vec::new();
    let push_edge = |a: usize, b: usize, v: &mut Vec<(usize, usize)>| {
        if a != b {
            v.push((a.min(b), a.max(b)));
        }
    };

    // Re-attach every cut component through its cheapest port.
    let mut component_reports = Vec::with_capacity(outcome.components.len());
    for comp in &outcome.components {
        let (port, reattach_cost) = select_port(
            &arb,
            comp.root,
            &outcome.aggregates,
            instance,
            opts.ports_any,
        )?;
        let a = comp.agg;
        reconnect_visits += subtree_len(&arb, comp.root);
        let expected_port = a.edge_cost
            + 2.0 * a.cross_weight_cost / a.weight
            + (1.0 + 1.0 / a.weight) * a.direct_delay;
        let half_weight = (1.0 + a.weight / 2.0) * a.edge_cost
            + (1.0 + 1.0 / a.weight) * a.direct_delay;
        let budget = match opts.splitter {
            SplitRule::Refined => {
                (1.0 + mu / 2.0) * (a.edge_cost + comp.severed_cost)
                    + (1.0 + 1.0 / mu) * a.direct_delay
            }
            SplitRule::WeightThreshold => {
                (1.0 + mu) * a.edge_cost + (1.0 + 1.0 / mu) * a.direct_delay
            }
        };
        let port_point = arb.node(port).point as usize;
        component_reports.push(ComponentReport {
            port: instance.id(port_point).to_string(),
            weight: a.weight,
            direct_delay: a.direct_delay,
            edge_cost: a.edge_cost,
            severed_cost: comp.severed_cost,
            reattach_cost,
            expected_port_bound: BoundCheck::new(reattach_cost, expected_port),
            half_weight_bound: BoundCheck::new(expected_port, half_weight),
            reattach_budget: BoundCheck::new(reattach_cost, budget),
        });
        push_edge(root_point, port_point, &mut collected);
        collected.extend(pruned_component_edges(&arb, comp.root, port));
    }

    // Decide keep-vs-reattach for each root child and collect its edges.
    let decisions =
        reconnect_root_component(&arb, &outcome.aggregates, instance, mu, opts.splitter, opts.ports_any)?;
    let root_agg = outcome.aggregates[arb.root() as usize];
    let mut child_reports = Vec::with_capacity(decisions.len());
    let mut root_cost = 0.0;
    for d in &decisions {
        let a = outcome.aggregates[d.child as usize];
        reconnect_visits += subtree_len(&arb, d.child);
        let child_point = arb.node(d.child).point as usize;
        let link = arb.node(d.child).edge_cost;
        let child_budget = match opts.splitter {
            SplitRule::Refined => {
                (1.0 + mu / 2.0) * (a.edge_cost + link) + (1.0 + 1.0 / mu) * a.direct_delay
            }
            SplitRule::WeightThreshold => {
                (1.0 + mu) * (a.edge_cost + link) + (1.0 + 1.0 / mu) * a.direct_delay
            }
        };
        let (action, port_id) = match d.action {
            ChildAction::Keep => {
                push_edge(root_point, child_point, &mut collected);
                collected.extend(pruned_component_edges(&arb, d.child, d.child));
                ("keep", None)
            }
            ChildAction::Port(p) => {
                let port_point = arb.node(p).point as usize;
                push_edge(root_point, port_point, &mut collected);
                collected.extend(pruned_component_edges(&arb, d.child, p));
                ("port", Some(instance.id(port_point).to_string()))
            }
            ChildAction::Drop => ("drop", None),
        };
        root_cost += d.chosen_cost;
        child_reports.push(RootChildReport {
            child: instance.id(child_point).to_string(),
            weight: a.weight,
            direct_delay: a.direct_delay,
            cost_with_link: a.edge_cost + link,
            action: action.to_string(),
            port: port_id,
            chosen_cost: d.chosen_cost,
            budget: BoundCheck::new(d.chosen_cost, child_budget),
        });
    }
    let root_budget = match opts.splitter {
        SplitRule::Refined => {
            (1.0 + mu / 2.0) * root_agg.edge_cost + (1.0 + 1.0 / mu) * root_agg.direct_delay
        }
        SplitRule::WeightThreshold => {
            (1.0 + mu) * root_agg.edge_cost + (1.0 + 1.0 / mu) * root_agg.direct_delay
        }
    };
    let root_report = RootComponentReport {
        weight: root_agg.weight,
        direct_delay: root_agg.direct_delay,
        edge_cost: root_agg.edge_cost,
        cost: root_cost,
        budget: BoundCheck::new(root_cost, root_budget),
        children: child_reports,
    };

    // Assemble: deduplicate shared edges, then either the collection is
    // already a tree or it is repaired into one with a shortest-path tree
    // over its own edges (which can only lower connection and delays).
    collected.sort_unstable();
    collected.dedup();
    let mut solution = Solution { edges: collected };
    let costs = match evaluate_cost(instance, &solution) {
        Ok(c) => c,
        Err(_) => {
            solution = repair_spanning_tree(instance, &solution.edges)?;
            evaluate_cost(instance, &solution)?
        }
    };
    let reconnect_wall = t_reconnect.elapsed();

    let total_budget_value = match opts.splitter {
        SplitRule::Refined => {
            (1.0 + mu / 2.0) * initial_edge_cost + (1.0 + 1.0 / mu) * direct_delay_total
        }
        SplitRule::WeightThreshold => {
            (1.0 + mu) * initial_edge_cost + (1.0 + 1.0 / mu) * direct_delay_total
        }
    };
    let ratio = if lower_bound > COST_TOL {
        Some(costs.total / lower_bound)
    } else {
        None
    };
    let mut report = RunReport {
        splitter: opts.splitter.label().to_string(),
        beta_method: beta_label.to_string(),
        mu: Some(mu),
        mu_source: mu_source.to_string(),
        shortcut: None,
        initial_edge_cost,
        direct_delay_total,
        components: component_reports,
        root_component: Some(root_report),
        costs,
        total_budget: Some(BoundCheck::new(costs.total, total_budget_value)),
        lower_bound,
        ratio,
        bounds_ok: true,
        violations: Vec::new(),
        stats: PipelineStats {
            split_node_visits: outcome.stats.node_visits,
            reconnect_node_visits: reconnect_visits,
            cut_count: outcome.stats.cuts,
            split_wall_micros: split_wall.as_micros() as u64,
            reconnect_wall_micros: reconnect_wall.as_micros() as u64,
            total_wall_micros: t_total.elapsed().as_micros() as u64,
        },
    };
    report.finalize_checks();
    Ok((solution, report))
}

fn subtree_len(arb: &Arborescence, start: NodeId) -> u64 {
    let mut count = 0u64;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        count += 1;
        stack.extend_from_slice(&arb.node(v).children);
    }
    count
}

/// Point-pair edges of the component rooted at `comp_root`, re-rooted at
/// the node the component attaches through, with every branch that serves
/// no terminal pruned away. Zero-length edges between co-located copies of
/// one point are omitted (the copies contract back to the point).
fn pruned_component_edges(
    arb: &Arborescence,
    comp_root: NodeId,
    attach: NodeId,
) -> Vec<(usize, usize)> {
    let nodes = arb.pre_order(comp_root);
    if nodes.len() <= 1 {
        return Vec::new();
    }
    let mut local: HashMap<NodeId, usize> = HashMap::with_capacity(nodes.len());
    for (i, &v) in nodes.iter().enumerate() {
        local.insert(v, i);
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, &v) in nodes.iter().enumerate() {
        if v == comp_root {
            continue;
        }
        let pi = local[&arb.node(v).parent];
        adj[i].push(pi);
        adj[pi].push(i);
    }
    // Orient away from the attach node, then mark which nodes still have a
    // terminal at or below them in that orientation.
    let start = local[&attach];
    let mut parent = vec![usize::MAX; nodes.len()];
    parent[start] = start;
    let mut order = Vec::with_capacity(nodes.len());
    order.push(start);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &w in &adj[u] {
            if parent[w] == usize::MAX && w != start {
                parent[w] = u;
                order.push(w);
            }
        }
    }
    let mut keep: Vec<bool> = nodes.iter().map(|&v| arb.node(v).terminal).collect();
    for i in (1..order.len()).rev() {
        let u = order[i];
        if keep[u] {
            keep[parent[u]] = true;
        }
    }
    let mut out = Vec::new();
    for &u in order.iter().skip(1) {
        if keep[u] {
            let a = arb.node(nodes[u]).point as usize;
            let b = arb.node(nodes[parent[u]]).point as usize;
            if a != b {
                out.push((a.min(b), a.max(b)));
            }
        }
    }
    out
}

/// Builds a spanning tree over the collected candidate edges when they are
/// not already a tree: a shortest-path tree from the root over exactly those
/// edges, pruned of branches serving no terminal. Every root-terminal
/// distance in the result is at most the corresponding tree-path length in
/// the intended attachment, and its edges are a subset of the candidates, so
/// all cost budgets carry over.
pub(crate) fn repair_spanning_tree(
    instance: &Instance,
    edges: &[(usize, usize)],
) -> Result<Solution> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64, usize);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }

    let n = instance.point_count();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        let d = instance.distance(a, b);
        adj[a].push((b, d));
        adj[b].push((a, d));
    }
    let root = instance.root();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    parent[root] = root;
    heap.push(Reverse(Key(0.0, root)));
    while let Some(Reverse(Key(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = u;
                heap.push(Reverse(Key(nd, v)));
            }
        }
    }
    let mut marked = vec![false; n];
    for &(t, _) in instance.terminals() {
        if parent[t] == usize::MAX {
            return Err(Error::Invariant(format!(
                "terminal {} is disconnected from the collected edge set",
                instance.id(t)
            )));
        }
        let mut v = t;
        while v != root && !marked[v] {
            marked[v] = true;
            v = parent[v];
        }
    }
    let mut out = Vec::new();
    for v in 0..n {
        if marked[v] {
            let p = parent[v];
            out.push((v.min(p), v.max(p)));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(Solution { edges: out })
}
