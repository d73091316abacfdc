//! Structured run reports: every cost guarantee the pipeline relies on is
//! recorded as an explicit value-vs-bound check, so a run either proves its
//! contract or names the violation.

use crate::model::{CostBreakdown, COST_TOL};

/// A single `value ≤ bound` check with slack recorded for regression diffs.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    /// `bound − value`; negative margins beyond tolerance flip `ok`.
    pub margin: f64,
    pub ok: bool,
}

impl BoundCheck {
    /// Checks `value ≤ bound` with tolerance `1e-9·(1 + |bound|)` so the
    /// comparison stays meaningful both at desk scale and on million-edge
    /// sums where float accumulation noise grows with magnitude.
    pub fn new(value: f64, bound: f64) -> Self {
        let ok = value <= bound + COST_TOL * (1.0 + bound.abs());
        BoundCheck {
            value,
            bound,
            margin: bound - value,
            ok,
        }
    }
}

/// Report for one cut-off component and its re-attachment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ComponentReport {
    /// Point id of the chosen port.
    pub port: String,
    pub weight: f64,
    pub direct_delay: f64,
    pub edge_cost: f64,
    pub severed_cost: f64,
    /// Actual cost of the component plus its port edge: connection plus
    /// the delay of every terminal it serves.
    pub reattach_cost: f64,
    /// `reattach_cost` against the expected cost of a weight-random port:
    /// C + 2·cross_weight_cost/W + (1 + 1/W)·direct_delay.
    pub expected_port_bound: BoundCheck,
    /// The expected-port expression against its closed-form relaxation
    /// (1 + W/2)·C + (1 + 1/W)·direct_delay.
    pub half_weight_bound: BoundCheck,
    /// `reattach_cost` against the budget the cut rule promised when it
    /// severed this component.
    pub reattach_budget: BoundCheck,
}

/// Decision taken for one child subtree of the root component.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RootChildReport {
    /// Point id of the child node.
    pub child: String,
    pub weight: f64,
    pub direct_delay: f64,
    /// Subtree edge cost plus the root link: C_x + c(r, x).
    pub cost_with_link: f64,
    /// "keep" (leave attached through the original edge), "port"
    /// (re-attach through the cheapest port), or "drop" (subtree serves no
    /// terminal).
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
    pub chosen_cost: f64,
    /// `chosen_cost` against the per-child budget.
    pub budget: BoundCheck,
}

/// Report for the component that stayed attached to the root.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RootComponentReport {
    pub weight: f64,
    pub direct_delay: f64,
    /// Σ over children of (C_x + c(r, x)).
    pub edge_cost: f64,
    /// Σ of chosen per-child costs.
    pub cost: f64,
    pub budget: BoundCheck,
    pub children: Vec<RootChildReport>,
}

/// Work and wall-time counters for the linear-time contract.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct PipelineStats {
    pub split_node_visits: u64,
    pub reconnect_node_visits: u64,
    pub cut_count: u64,
    pub split_wall_micros: u64,
    pub reconnect_wall_micros: u64,
    pub total_wall_micros: u64,
}

/// Full record of one pipeline run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    /// "improved" or "baseline".
    pub splitter: String,
    /// "mst", "exact", or "given" (explicit initial tree).
    pub beta_method: String,
    /// The splitting threshold, absent when a shortcut skipped splitting.
    pub mu: Option<f64>,
    /// "auto", "override", "default", or "shortcut".
    pub mu_source: String,
    /// Set when the pipeline returned the initial tree unchanged:
    /// "zero-edge-cost" (the tree is already optimal) or
    /// "zero-delay-weight" (no cut can help).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortcut: Option<String>,
    /// Connection cost C of the initial (normalized) tree.
    pub initial_edge_cost: f64,
    /// D: Σ w(t)·c(r, t) over all terminals.
    pub direct_delay_total: f64,
    pub components: Vec<ComponentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_component: Option<RootComponentReport>,
    /// Exact costs of the returned solution.
    pub costs: CostBreakdown,
    /// Final total against the end-to-end budget in terms of C and D.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_budget: Option<BoundCheck>,
    /// Admissible lower bound: D plus a floor on the minimum Steiner tree
    /// length (C for exact initial trees, C/2 for the spanning-tree
    /// heuristic, 0 for user-supplied trees).
    pub lower_bound: f64,
    /// total / lower_bound, absent when the lower bound is 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// True iff every recorded check passed.
    pub bounds_ok: bool,
    /// Human-readable description of each failed check.
    pub violations: Vec<String>,
    pub stats: PipelineStats,
}

impl RunReport {
    /// Collects failed checks into `violations` and sets `bounds_ok`.
    pub fn finalize_checks(&mut self) {
        let mut violations = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            for (name, check) in [
                ("expected-port", &c.expected_port_bound),
                ("half-weight", &c.half_weight_bound),
                ("reattach-budget", &c.reattach_budget),
            ] {
                if !check.ok {
                    violations.push(format!(
                        "component {i} (port {}): {name} bound exceeded by {}",
                        c.port, -check.margin
                    ));
                }
            }
        }
        if let Some(rc) = &self.root_component {
            if !rc.budget.ok {
                violations.push(format!(
                    "root component budget exceeded by {}",
                    -rc.budget.margin
                ));
            }
            for ch in &rc.children {
                if !ch.budget.ok {
                    violations.push(format!(
                        "root child {}: budget exceeded by {}",
                        ch.child, -ch.budget.margin
                    ));
                }
            }
        }
        if let Some(tb) = &self.total_budget {
            if !tb.ok {
                violations.push(format!("total budget exceeded by {}", -tb.margin));
            }
        }
        self.bounds_ok = violations.is_empty();
        self.violations = violations;
    }
}
