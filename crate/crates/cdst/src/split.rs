//! Splitting an initial arborescence into a branching: a root component
//! plus cut-off subtrees that will be re-attached through ports.
//!
//! Two cut rules are provided. The weight-threshold rule cuts an edge as
//! soon as the subtree below it accumulates more than `mu` delay weight.
//! The refined rule prices the expected cost of re-attaching the subtree
//! through a weight-random port against a `mu`-scaled budget and cuts
//! whenever re-attachment is at least as cheap — so subtrees with a lot of
//! structure but little unavoidable delay are split off early.
//!
//! Both traverse the tree bottom-up exactly once, evaluating each edge in
//! constant time from the incrementally maintained subtree aggregates, and
//! both mutate the arborescence in place: cut subtrees stay in the arena
//! but are detached from their parents.

use crate::aggregates::{criterion_lhs_rhs, SubtreeAggregates};
use crate::arborescence::{Arborescence, NodeId};
use crate::error::{Error, Result};
use crate::model::COST_TOL;

/// A subtree cut off during splitting.
#[derive(Debug, Clone)]
pub struct CutComponent {
    /// Root node of the detached subtree.
    pub root: NodeId,
    /// Cost of the deleted edge that connected it to its former parent.
    pub severed_cost: f64,
    /// Aggregates of the subtree at the moment it was cut (they do not
    /// change afterwards: cuts only happen above).
    pub agg: SubtreeAggregates,
}

/// Instrumentation counters for the linear-time contract.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct SplitStats {
    /// Nodes processed by the bottom-up pass.
    pub node_visits: u64,
    /// Edges for which a cut decision was evaluated.
    pub edges_examined: u64,
    /// Edges actually cut.
    pub cuts: u64,
}

/// Result of a splitting pass.
#[derive(Debug)]
pub struct SplitOutcome {
    /// Cut subtrees, in the order they were severed (bottom-up).
    pub components: Vec<CutComponent>,
    /// Post-split aggregates, indexed by node. For surviving nodes these
    /// describe the pruned tree; for cut nodes, their component.
    pub aggregates: Vec<SubtreeAggregates>,
    pub stats: SplitStats,
}

/// Which cut rule a split pass applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// Cut when expected re-attachment cost is within the `mu`-budget.
    Refined,
    /// Cut when subtree weight exceeds `mu`.
    WeightThreshold,
}

impl SplitRule {
    /// User-facing name of the rule, as the CLI spells it.
    pub fn label(self) -> &'static str {
        match self {
            SplitRule::Refined => "improved",
            SplitRule::WeightThreshold => "baseline",
        }
    }
}

/// Runs one bottom-up splitting pass over `arb` with threshold `mu > 0`.
///
/// Every edge is considered exactly once, at the moment the subtree below
/// it is final. Zero-weight subtrees are never cut: re-attaching one would
/// add a root edge without any delay benefit.
///
/// With [`SplitRule::Refined`], after the pass every child subtree of the
/// root has weight at most `mu`; a violation would be a bug and reports an
/// invariant error.
pub fn split(arb: &mut Arborescence, mu: f64, rule: SplitRule) -> Result<SplitOutcome> {
    if !(mu > 0.0) {
        return Err(Error::domain("split", "mu must be positive"));
    }
    let root = arb.root();
    let mut agg = vec![SubtreeAggregates::default(); arb.len()];
    let mut components = Vec::new();
    let mut stats = SplitStats::default();

    for v in arb.post_order(root) {
        stats.node_visits += 1;
        let node = arb.node(v);
        // Children still attached here survived their own cut decisions.
        agg[v as usize] = SubtreeAggregates::combine(
            node.weight,
            node.root_dist,
            node.children
                .iter()
                .map(|&c| (agg[c as usize], arb.node(c).edge_cost)),
        );
        if v == root {
            continue;
        }
        stats.edges_examined += 1;
        let a = agg[v as usize];
        if a.weight <= 0.0 {
            continue;
        }
        let cut = match rule {
            SplitRule::Refined => {
                let (lhs, rhs) = criterion_lhs_rhs(&a, node.edge_cost, mu);
                lhs <= rhs
            }
            SplitRule::WeightThreshold => a.weight > mu,
        };
        if cut {
            let severed_cost = arb.detach(v);
            components.push(CutComponent {
                root: v,
                severed_cost,
                agg: a,
            });
            stats.cuts += 1;
        }
    }

    if rule == SplitRule::Refined {
        for &x in &arb.node(root).children {
            let w = agg[x as usize].weight;
            if w > mu + COST_TOL {
                return Err(Error::Invariant(format!(
                    "after splitting, root child subtree (node {x}) kept weight {w} > threshold {mu}"
                )));
            }
        }
    }

    Ok(SplitOutcome {
        components,
        aggregates: agg,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arborescence::Arborescence;

    /// r →(1) s5{leaf w=1} →(1) s4{leaf 0} →(1) s3{leaf 0} →(1) s2{leaf 0}
    /// →(1) s1{leaf 0, far terminal w=1}: the unit-cost path instance in
    /// already-binarized shape, all points pairwise at distance 1.
    fn unit_path_binarized() -> Arborescence {
        let mut arb = Arborescence::with_root(0);
        let mut chain = arb.root();
        for i in 0..5u32 {
            let point = 1 + i as usize; // co-located copy of the terminal
            let next = arb.add_child(chain, point, 1.0, 0.0, 1.0, false);
            let w = if i == 0 { 1.0 } else { 0.0 };
            arb.add_child(next, point, 0.0, w, 1.0, true);
            chain = next;
        }
        arb.add_child(chain, 6, 1.0, 1.0, 1.0, true); // far terminal
        arb
    }

    #[test]
    fn refined_rule_cuts_both_weighted_leaves() {
        let mut arb = unit_path_binarized();
        let out = split(&mut arb, 1.0, SplitRule::Refined).unwrap();
        assert_eq!(out.components.len(), 2);
        // Everything left in the root component is weightless.
        assert_eq!(out.aggregates[arb.root() as usize].weight, 0.0);
        // The far terminal was cut with its unit parent edge, the near
        // leaf with its zero-cost edge.
        let severed: Vec<f64> = out.components.iter().map(|c| c.severed_cost).collect();
        assert!(severed.contains(&1.0) && severed.contains(&0.0));
    }

    #[test]
    fn weight_threshold_rule_cuts_once_at_the_top() {
        let mut arb = unit_path_binarized();
        let out = split(&mut arb, 1.0, SplitRule::WeightThreshold).unwrap();
        // Weight only exceeds 1 where both unit-weight terminals join,
        // which first happens at the root's single child.
        assert_eq!(out.components.len(), 1);
        assert_eq!(out.components[0].agg.weight, 2.0);
        assert_eq!(out.components[0].severed_cost, 1.0);
        assert!(arb.node(arb.root()).children.is_empty());
    }

    #[test]
    fn zero_weight_tree_is_never_cut() {
        let mut arb = Arborescence::with_root(0);
        let mut at = arb.root();
        for i in 1..6 {
            at = arb.add_child(at, i, 1.0, 0.0, 1.0, true);
        }
        let out = split(&mut arb, 0.5, SplitRule::Refined).unwrap();
        assert!(out.components.is_empty());
        let out = split(&mut arb, 0.5, SplitRule::WeightThreshold).unwrap();
        assert!(out.components.is_empty());
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let mut arb = Arborescence::with_root(0);
        assert!(split(&mut arb, 0.0, SplitRule::Refined).is_err());
        assert!(split(&mut arb, -1.0, SplitRule::WeightThreshold).is_err());
    }
}
