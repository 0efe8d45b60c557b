//! Rate margin: the largest factor by which a rate tuple can be scaled and
//! still be delivered within `T` slots.
//!
//! The margin is found by repeatedly draining `Q = T·μ·L` in as few slots as
//! possible, rescaling the queue after each solve until the drain takes
//! exactly `T` slots. The final queue, divided by the initial one, is the
//! margin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{one_slot_frontier, FrontierSet};
use crate::scenario::{NetworkScenario, RateTuple};
use crate::solver::{DrainSearch, DrainStatus, SearchMode, SolverOptions};

/// Precision of the rescaling nudges, in rate units.
pub const NUDGE: f64 = 1e-7;

/// One-slot margins below this are treated as zero.
pub const RHO_ZERO: f64 = 1e-12;

/// Smallest probe component, as a multiple of the drain tolerance.
pub const PROBE_FLOOR: f64 = 1e3;

/// Relative agreement required between per-component margin ratios.
pub const DIRECTION_TOL: f64 = 1e-9;

/// Branch that ended the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    /// The scaled-down probe also failed: the direction is unreachable.
    NodeB,
    /// A nudge pushed the drain past the horizon; the last fitting queue is kept.
    NodeD,
    /// The drain took exactly `T` slots.
    NodeE,
}

/// Statistics of one drain solve inside the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub status: DrainStatus,
    pub p_star: Option<usize>,
    pub frac_term: f64,
    pub expanded_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginResult {
    pub delta: f64,
    /// Number of drain solves `K`.
    pub iterations: usize,
    pub achievable: bool,
    pub terminal: Terminal,
    #[serde(skip)]
    pub solves: Vec<SolveRecord>,
}

/// `max_{μ'} min_n μ'⁽ⁿ⁾/μ⁽ⁿ⁾` over the one-slot frontier.
pub fn one_slot_margin(frontier: &FrontierSet, mu: &[f64]) -> Result<f64> {
    check_rate(mu)?;
    Ok(frontier
        .rates()
        .map(|r| {
            r.iter()
                .zip(mu)
                .map(|(a, b)| a / b)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max))
}

pub(crate) fn check_rate(mu: &[f64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::domain("rate tuple is empty"));
    }
    if let Some(n) = mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::domain(format!(
            "rate of pair {n} is {}; every component must be positive \
             (remove inactive pairs from the scenario)",
            mu[n]
        )));
    }
    Ok(())
}

/// Margin computations sharing one frontier and one search instance.
#[derive(Debug, Clone)]
pub struct MarginSolver<'a> {
    scenario: &'a NetworkScenario,
    frontier: FrontierSet,
    search: DrainSearch<'a>,
    mode: SearchMode,
}

impl<'a> MarginSolver<'a> {
    pub fn new(scenario: &'a NetworkScenario) -> Result<Self> {
        Self::with_options(scenario, SolverOptions::default(), SearchMode::AStar)
    }

    pub fn with_options(
        scenario: &'a NetworkScenario,
        options: SolverOptions,
        mode: SearchMode,
    ) -> Result<Self> {
        let frontier = one_slot_frontier(scenario)?;
        let search = DrainSearch::new(scenario, &frontier, options);
        Ok(MarginSolver {
            scenario,
            frontier,
            search,
            mode,
        })
    }

    pub fn scenario(&self) -> &NetworkScenario {
        self.scenario
    }

    pub fn frontier(&self) -> &FrontierSet {
        &self.frontier
    }

    pub fn search(&self) -> &DrainSearch<'a> {
        &self.search
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    fn check(&self, mu: &[f64], horizon: usize) -> Result<()> {
        check_rate(mu)?;
        if mu.len() != self.scenario.n_pairs() {
            return Err(Error::domain(format!(
                "rate tuple has {} components, scenario has {} pairs",
                mu.len(),
                self.scenario.n_pairs()
            )));
        }
        if horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        Ok(())
    }

    /// `T·μ·L`, the initial queue of the iteration.
    pub fn initial_queue(&self, mu: &[f64], horizon: usize) -> Vec<f64> {
        let l = self.scenario.blocklength() as f64;
        mu.iter().map(|m| horizon as f64 * m * l).collect()
    }

    /// Whether the first drain fits in the horizon, without iterating.
    pub fn is_achievable(&self, mu: &[f64], horizon: usize) -> Result<bool> {
        self.check(mu, horizon)?;
        let q0 = self.initial_queue(mu, horizon);
        Ok(self.search.solve(&q0, horizon, self.mode)?.drains())
    }

    pub fn rate_margin(&self, mu: &[f64], horizon: usize) -> Result<MarginResult> {
        self.check(mu, horizon)?;
        let t = horizon as f64;
        let l = self.scenario.blocklength() as f64;
        let mut rho = one_slot_margin(&self.frontier, mu)?;
        if rho < RHO_ZERO {
            rho = 0.0;
        }
        let along = |c: f64| -> Vec<f64> { mu.iter().map(|m| c * m * l).collect() };

        let q_first = self.initial_queue(mu, horizon);
        let mut q = q_first.clone();
        let mut base: Option<Vec<f64>> = None;
        let mut flag = 0i8;
        let mut solves = Vec::new();

        let (q_last, terminal) = loop {
            let sol = self.search.solve(&q, horizon, self.mode)?;
            solves.push(SolveRecord {
                status: sol.status,
                p_star: sol.p_star,
                frac_term: sol.frac_term,
                expanded_nodes: sol.expanded_nodes,
            });
            match (sol.status, sol.p_star) {
                (DrainStatus::Solved, Some(p)) if p < horizon => {
                    let scale = horizon / p;
                    let rem = horizon % p;
                    let grow = scale as f64 / sol.frac_term;
                    let extra = along(rem as f64 * rho);
                    let next: Vec<f64> = q.iter().zip(&extra).map(|(a, b)| a * grow + b).collect();
                    flag = 1;
                    if scale == 1 && rho == 0.0 {
                        let nudge = along(NUDGE * t);
                        q = next.iter().zip(&nudge).map(|(a, b)| a + b).collect();
                        base = Some(next);
                    } else {
                        q = next.clone();
                        base = Some(next);
                    }
                }
                (DrainStatus::Solved, Some(_)) => {
                    let grow = 1.0 / sol.frac_term;
                    break (q.iter().map(|a| a * grow).collect(), Terminal::NodeE);
                }
                (DrainStatus::ExceedsHorizon, _) => match flag {
                    -1 => break (vec![0.0; q.len()], Terminal::NodeB),
                    0 => {
                        let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
                        let floor = PROBE_FLOOR * self.scenario.queue_tolerance() / (t * l * min_mu);
                        q = along(t * rho.max(NUDGE).max(floor));
                        flag = -1;
                    }
                    _ => {
                        let kept = base.take().expect("a rescaling step preceded the overshoot");
                        break (kept, Terminal::NodeD);
                    }
                },
                _ => unreachable!("queues are strictly positive"),
            }
        };

        let delta = q_last[0] / q_first[0];
        for (a, b) in q_last.iter().zip(&q_first) {
            let d = a / b;
            debug_assert!(
                (d - delta).abs() <= DIRECTION_TOL * delta.max(1.0),
                "margin ratios disagree across pairs: {d} vs {delta}"
            );
        }
        Ok(MarginResult {
            delta,
            iterations: solves.len(),
            achievable: delta >= 1.0,
            terminal,
            solves,
        })
    }

    /// `δ_T(μ)·μ`, the boundary point of the `T`-slot region along `μ`.
    pub fn scale_to_boundary(&self, mu: &[f64], horizon: usize) -> Result<RateTuple> {
        let m = self.rate_margin(mu, horizon)?;
        if m.delta <= 0.0 {
            return Err(Error::BoundaryUndefined);
        }
        Ok(RateTuple(mu.iter().map(|x| x * m.delta).collect()))
    }
}

/// Margin of `mu` over `horizon` slots.
pub fn rate_margin(scenario: &NetworkScenario, mu: &[f64], horizon: usize) -> Result<MarginResult> {
    MarginSolver::new(scenario)?.rate_margin(mu, horizon)
}

pub fn is_achievable(scenario: &NetworkScenario, mu: &[f64], horizon: usize) -> Result<bool> {
    MarginSolver::new(scenario)?.is_achievable(mu, horizon)
}

pub fn scale_to_boundary(scenario: &NetworkScenario, mu: &[f64], horizon: usize) -> Result<RateTuple> {
    MarginSolver::new(scenario)?.scale_to_boundary(mu, horizon)
}
