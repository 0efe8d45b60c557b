//! Minimum-slot queue draining.
//!
//! Starting from initial queues `Q0`, each slot applies one power tuple from
//! the refined set and removes `μ_max(s)·L` bits from every queue (clamped at
//! zero). The objective is lexicographic: fewest slots `p` first, then the
//! smallest fractional term `max_n Q0⁽ⁿ⁾ / Σ_t μ_max⁽ⁿ⁾(s_t)·L`. Both are folded
//! into the scalar cost `p − 1 + frac`, which A* minimizes with the
//! interference-free lower bound as heuristic.
//!
//! Two pruning rules bound the search: a node selected at the depth cap with
//! a non-empty queue is dropped, and after selecting a node every fringe node
//! at the same or greater depth whose cumulative service is componentwise no
//! larger is dropped.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::interference_free_rate;
use crate::region::{one_slot_frontier, FrontierSet};
use crate::scenario::{NetworkScenario, PowerTuple, QueueState};

/// Default cap on the number of fringe nodes.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Slack, in bits, for the cumulative-service comparison of pruning rule 2.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DrainStatus {
    Solved,
    ExceedsHorizon,
    EmptyStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Interference-free heuristic plus both pruning rules.
    AStar,
    /// Zero heuristic, depth-cap pruning only.
    Uninformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrainSolution {
    pub status: DrainStatus,
    pub power_seq: Vec<PowerTuple>,
    /// Minimum slot count; `None` when the horizon is exceeded.
    pub p_star: Option<usize>,
    /// Fractional objective term, in `(0, 1]` when solved.
    pub frac_term: f64,
    /// `Q_0, Q_1, …, Q_p` under the returned sequence.
    pub queue_trace: Vec<QueueState>,
    /// Nodes selected and expanded.
    pub expanded_nodes: u64,
}

impl DrainSolution {
    fn empty(q0: &[f64]) -> Self {
        DrainSolution {
            status: DrainStatus::EmptyStart,
            power_seq: Vec::new(),
            p_star: Some(0),
            frac_term: 0.0,
            queue_trace: vec![QueueState(q0.to_vec())],
            expanded_nodes: 0,
        }
    }

    /// `p − 1 + frac`; `None` unless solved.
    pub fn objective(&self) -> Option<f64> {
        match (self.status, self.p_star) {
            (DrainStatus::Solved, Some(p)) => Some((p - 1) as f64 + self.frac_term),
            _ => None,
        }
    }

    /// Drains within the horizon (solved or nothing to send).
    pub fn drains(&self) -> bool {
        self.status != DrainStatus::ExceedsHorizon
    }
}

/// One expansion, as recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub depth: usize,
    pub f: f64,
    pub g: f64,
    pub e: f64,
    pub queue: Vec<f64>,
    pub served: Vec<f64>,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub node_budget: usize,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            record_trace: false,
        }
    }
}

/// Queue-drain cost bound ignoring interference: `max_n q⁽ⁿ⁾ / (r_if⁽ⁿ⁾·L)`.
///
/// Components within the drain tolerance count as empty.
pub fn heuristic(scenario: &NetworkScenario, q: &[f64]) -> Result<f64> {
    let bits: Vec<f64> = (0..scenario.n_pairs())
        .map(|n| interference_free_rate(scenario, n) * scenario.blocklength() as f64)
        .collect();
    heuristic_with(&bits, q, scenario.queue_tolerance())
}

fn heuristic_with(if_bits: &[f64], q: &[f64], tol: f64) -> Result<f64> {
    let mut h = 0.0f64;
    for (n, (&qn, &b)) in q.iter().zip(if_bits).enumerate() {
        if qn <= tol {
            continue;
        }
        if b <= 0.0 {
            return Err(Error::InfeasiblePair { pair: n });
        }
        h = h.max(qn / b);
    }
    Ok(h)
}

/// Fractional term `min(1, max_n Q0⁽ⁿ⁾ / served⁽ⁿ⁾)`; unserved pairs add nothing.
pub(crate) fn frac_term(q0: &[f64], served: &[f64]) -> f64 {
    q0.iter()
        .zip(served)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&q, &s)| q / s)
        .fold(0.0f64, f64::max)
        .min(1.0)
}

#[derive(Debug, Clone)]
struct Node {
    f: f64,
    g: f64,
    h: f64,
    depth: usize,
    goal: bool,
    queue: Vec<f64>,
    served: Vec<f64>,
    path: Vec<u32>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: smallest F first, then deeper, then smaller path.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Reusable search over a fixed action set.
#[derive(Debug, Clone)]
pub struct DrainSearch<'a> {
    scenario: &'a NetworkScenario,
    actions: Vec<PowerTuple>,
    action_bits: Vec<Vec<f64>>,
    if_bits: Vec<f64>,
    options: SolverOptions,
}

impl<'a> DrainSearch<'a> {
    /// Search restricted to the refined power set of `frontier`.
    pub fn new(scenario: &'a NetworkScenario, frontier: &FrontierSet, options: SolverOptions) -> Self {
        let l = scenario.blocklength() as f64;
        let actions: Vec<PowerTuple> = frontier.points.iter().map(|p| p.power.clone()).collect();
        let action_bits = frontier
            .points
            .iter()
            .map(|p| p.rate.iter().map(|r| r * l).collect())
            .collect();
        let if_bits = (0..scenario.n_pairs())
            .map(|n| interference_free_rate(scenario, n) * l)
            .collect();
        DrainSearch {
            scenario,
            actions,
            action_bits,
            if_bits,
            options,
        }
    }

    pub fn actions(&self) -> &[PowerTuple] {
        &self.actions
    }

    pub fn solve(&self, q0: &[f64], depth_cap: usize, mode: SearchMode) -> Result<DrainSolution> {
        self.run(q0, depth_cap, mode, None)
    }

    /// Like [`solve`](Self::solve) but also returns one record per expansion.
    pub fn solve_traced(
        &self,
        q0: &[f64],
        depth_cap: usize,
        mode: SearchMode,
    ) -> Result<(DrainSolution, Vec<ExpansionRecord>)> {
        let mut trace = Vec::new();
        let sol = self.run(q0, depth_cap, mode, Some(&mut trace))?;
        Ok((sol, trace))
    }

    fn run(
        &self,
        q0: &[f64],
        depth_cap: usize,
        mode: SearchMode,
        mut trace: Option<&mut Vec<ExpansionRecord>>,
    ) -> Result<DrainSolution> {
        let n = self.scenario.n_pairs();
        if q0.len() != n {
            return Err(Error::domain(format!(
                "queue has {} components, scenario has {n} pairs",
                q0.len()
            )));
        }
        if q0.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::domain("queue components must be finite and non-negative"));
        }
        if depth_cap == 0 {
            return Err(Error::domain("depth cap must be at least 1"));
        }
        let tol = self.scenario.queue_tolerance();
        if q0.iter().all(|&q| q <= tol) {
            return Ok(DrainSolution::empty(q0));
        }
        let root_h = heuristic_with(&self.if_bits, q0, tol)?;
        let informed = mode == SearchMode::AStar;
        let root = Node {
            f: if informed { root_h } else { 0.0 },
            g: 0.0,
            h: if informed { root_h } else { 0.0 },
            depth: 0,
            goal: false,
            queue: q0.to_vec(),
            served: vec![0.0; n],
            path: Vec::new(),
        };
        let mut fringe = BinaryHeap::new();
        fringe.push(root);
        let mut expanded = 0u64;

        while let Some(node) = fringe.pop() {
            if node.goal {
                return Ok(self.finish(q0, &node, expanded));
            }
            if node.depth >= depth_cap {
                continue;
            }
            if informed {
                let (t1, served) = (node.depth, &node.served);
                fringe.retain(|x| {
                    x.goal
                        || x.depth < t1
                        || !x.served.iter().zip(served).all(|(a, b)| *a <= *b + PRUNE_TOL)
                });
            }
            expanded += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(ExpansionRecord {
                    depth: node.depth,
                    f: node.f,
                    g: node.g,
                    e: node.h,
                    queue: node.queue.clone(),
                    served: node.served.clone(),
                    path: node.path.iter().map(|&i| i as usize).collect(),
                });
            }
            let depth = node.depth + 1;
            for (ai, bits) in self.action_bits.iter().enumerate() {
                let queue: Vec<f64> = node.queue.iter().zip(bits).map(|(q, b)| (q - b).max(0.0)).collect();
                let served: Vec<f64> = node.served.iter().zip(bits).map(|(s, b)| s + b).collect();
                let goal = queue.iter().all(|&q| q <= tol);
                let (g, h) = if goal {
                    ((depth - 1) as f64 + frac_term(q0, &served), 0.0)
                } else {
                    let h = if informed { heuristic_with(&self.if_bits, &queue, tol)? } else { 0.0 };
                    (depth as f64, h)
                };
                let mut path = node.path.clone();
                path.push(ai as u32);
                fringe.push(Node {
                    f: g + h,
                    g,
                    h,
                    depth,
                    goal,
                    queue,
                    served,
                    path,
                });
            }
            if fringe.len() > self.options.node_budget {
                return Err(Error::Capacity {
                    what: "search fringe",
                    required: fringe.len() as u128,
                    cap: self.options.node_budget as u128,
                });
            }
        }
        Ok(DrainSolution {
            status: DrainStatus::ExceedsHorizon,
            power_seq: Vec::new(),
            p_star: None,
            frac_term: 0.0,
            queue_trace: Vec::new(),
            expanded_nodes: expanded,
        })
    }

    fn finish(&self, q0: &[f64], goal: &Node, expanded: u64) -> DrainSolution {
        let power_seq: Vec<PowerTuple> = goal.path.iter().map(|&i| self.actions[i as usize].clone()).collect();
        let mut queue_trace = vec![QueueState(q0.to_vec())];
        let mut q = q0.to_vec();
        for &i in &goal.path {
            q = q.iter().zip(&self.action_bits[i as usize]).map(|(q, b)| (q - b).max(0.0)).collect();
            queue_trace.push(QueueState(q.clone()));
        }
        DrainSolution {
            status: DrainStatus::Solved,
            power_seq,
            p_star: Some(goal.depth),
            frac_term: frac_term(q0, &goal.served),
            queue_trace,
            expanded_nodes: expanded,
        }
    }
}

/// A* drain over the refined power set of `scenario`.
pub fn solve_drain(scenario: &NetworkScenario, q0: &[f64], depth_cap: usize) -> Result<DrainSolution> {
    let frontier = one_slot_frontier(scenario)?;
    DrainSearch::new(scenario, &frontier, SolverOptions::default()).solve(q0, depth_cap, SearchMode::AStar)
}

/// Uniform-cost baseline with the same contract as [`solve_drain`].
pub fn solve_drain_uninformed(
    scenario: &NetworkScenario,
    q0: &[f64],
    depth_cap: usize,
) -> Result<DrainSolution> {
    let frontier = one_slot_frontier(scenario)?;
    DrainSearch::new(scenario, &frontier, SolverOptions::default()).solve(q0, depth_cap, SearchMode::Uninformed)
}
