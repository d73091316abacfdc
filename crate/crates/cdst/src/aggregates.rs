//! Per-subtree aggregate values maintained bottom-up in constant time per
//! node, and the split criterion evaluated from them.
//!
//! For a node `v` with subtree `A_v`, five values summarize everything the
//! splitting and reconnection steps need:
//!
//! * `weight`           — total delay weight in `A_v`,
//! * `direct_delay`     — Σ w(t)·c(root, t) over terminals of `A_v`: the
//!   delay cost if every terminal had a direct shortest connection,
//! * `edge_cost`        — total cost of the edges inside `A_v`,
//! * `below_weight_cost`— Σ over edges `(p,q)` of `A_v` of `W_q · c(e)`,
//!   where `W_q` is the weight hanging below the edge,
//! * `cross_weight_cost`— Σ over edges `(p,q)` of `A_v` of
//!   `W_q · (W_v − W_q) · c(e)`: each edge cost multiplied by the weight
//!   products on its two sides.
//!
//! `below_weight_cost` is exactly Σ_t w(t)·(path length v→t), so port and
//! keep costs come straight out of these numbers, and
//! `2·cross_weight_cost/weight` is the expected tree-path delay when a port
//! terminal is drawn with probability proportional to its weight.

use crate::arborescence::{Arborescence, NodeId};

/// The five per-subtree values; see the module docs for definitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SubtreeAggregates {
    pub weight: f64,
    pub direct_delay: f64,
    pub edge_cost: f64,
    pub cross_weight_cost: f64,
    pub below_weight_cost: f64,
}

impl SubtreeAggregates {
    /// Aggregates of a node with no children: only its own carried weight
    /// contributes.
    pub fn for_leaf(weight: f64, root_dist: f64) -> Self {
        SubtreeAggregates {
            weight,
            direct_delay: weight * root_dist,
            edge_cost: 0.0,
            cross_weight_cost: 0.0,
            below_weight_cost: 0.0,
        }
    }

    /// Combines a node's own carried weight with its children's aggregates.
    /// `children` yields `(child aggregates, cost of the edge to the
    /// child)`. Works for any number of children; with one or two children
    /// it reduces to the textbook one- and two-child update rules.
    pub fn combine(
        own_weight: f64,
        own_root_dist: f64,
        children: impl Iterator<Item = (SubtreeAggregates, f64)> + Clone,
    ) -> Self {
        let mut total = SubtreeAggregates::for_leaf(own_weight, own_root_dist);
        for (ch, edge) in children.clone() {
            total.weight += ch.weight;
            total.direct_delay += ch.direct_delay;
            total.edge_cost += ch.edge_cost + edge;
            total.below_weight_cost += ch.below_weight_cost + ch.weight * edge;
        }
        // cross_weight_cost needs the final subtree weight: an edge inside
        // child i sees, above it, everything outside that child.
        for (ch, edge) in children {
            let above = total.weight - ch.weight;
            total.cross_weight_cost +=
                ch.cross_weight_cost + above * ch.below_weight_cost + ch.weight * above * edge;
        }
        total
    }
}

/// Computes aggregates for every node of the subtree rooted at `start`,
/// bottom-up in one post-order pass. The result is indexed by `NodeId`;
/// entries outside the subtree are left at default.
pub fn compute_aggregates(arb: &Arborescence, start: NodeId) -> Vec<SubtreeAggregates> {
    let mut agg = vec![SubtreeAggregates::default(); arb.len()];
    for v in arb.post_order(start) {
        let node = arb.node(v);
        agg[v as usize] = SubtreeAggregates::combine(
            node.weight,
            node.root_dist,
            node.children
                .iter()
                .map(|&c| (agg[c as usize], arb.node(c).edge_cost)),
        );
    }
    agg
}

/// The two sides of the improved cut decision at an edge `(v, z)`:
/// the expected cost terms specific to re-connecting the subtree below the
/// edge through a weight-random port (left), and the budget the threshold
/// parameter `mu` grants for doing so (right). The edge is cut when
/// `lhs ≤ rhs`.
///
/// Caller contract: `agg_z.weight > 0` and `mu > 0` (zero-weight subtrees
/// are never offered for cutting).
pub fn criterion_lhs_rhs(agg_z: &SubtreeAggregates, parent_edge_cost: f64, mu: f64) -> (f64, f64) {
    debug_assert!(agg_z.weight > 0.0, "criterion needs positive subtree weight");
    debug_assert!(mu > 0.0, "criterion needs a positive threshold");
    let lhs = 2.0 * agg_z.cross_weight_cost / agg_z.weight + agg_z.direct_delay / agg_z.weight;
    let rhs =
        mu / 2.0 * (agg_z.edge_cost + parent_edge_cost) + agg_z.direct_delay / mu;
    (lhs, rhs)
}
