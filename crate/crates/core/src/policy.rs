//! Rate-achieving policies: per-slot (rate, power) schedules whose average
//! rate equals a target and whose slot rates respect the link capacities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margin::MarginSolver;
use crate::numerics::max_rate_tuple;
use crate::region::DOMINANCE_TOL;
use crate::scenario::{NetworkScenario, PowerTuple, RateTuple};

/// Largest accepted gap between the policy average and the target, in rate units.
pub const ACHIEVEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub rate: RateTuple,
    pub power: PowerTuple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub horizon: usize,
    pub target: RateTuple,
    pub entries: Vec<PolicyEntry>,
}

impl Policy {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    /// `(1/T)·Σ_t μ_t`.
    pub fn average_rate(&self) -> RateTuple {
        let n = self.target.len();
        let mut sum = vec![0.0; n];
        for e in &self.entries {
            for (s, r) in sum.iter_mut().zip(e.rate.iter()) {
                *s += r;
            }
        }
        let t = self.horizon.max(1) as f64;
        RateTuple(sum.into_iter().map(|s| s / t).collect())
    }
}

/// Capacity check of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotCheck {
    pub slot: usize,
    pub power_valid: bool,
    pub within_capacity: bool,
    /// Largest `μ_t⁽ⁿ⁾ − μ_max⁽ⁿ⁾(s_t)`; positive values are violations.
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub slots: Vec<SlotCheck>,
    /// `‖(1/T)Σ μ_t − target‖_∞`.
    pub residual: f64,
    pub verdict: bool,
    /// First slot (1-based) whose constraints fail.
    pub first_violation: Option<usize>,
    /// Structural problems such as wrong lengths or negative rates.
    pub issues: Vec<String>,
}

/// Checks the per-slot capacity constraints and the average-rate target.
pub fn validate_policy(scenario: &NetworkScenario, policy: &Policy) -> ValidationReport {
    let n = scenario.n_pairs();
    let mut issues = Vec::new();
    if policy.entries.len() != policy.horizon {
        issues.push(format!(
            "policy has {} entries but horizon {}",
            policy.entries.len(),
            policy.horizon
        ));
    }
    if policy.target.len() != n {
        issues.push(format!("target has {} components, scenario has {n} pairs", policy.target.len()));
    }

    let mut slots = Vec::with_capacity(policy.entries.len());
    for (i, e) in policy.entries.iter().enumerate() {
        let slot = i + 1;
        if e.rate.len() != n || e.power.len() != n {
            issues.push(format!("slot {slot} has the wrong number of components"));
            slots.push(SlotCheck {
                slot,
                power_valid: false,
                within_capacity: false,
                max_excess: f64::INFINITY,
            });
            continue;
        }
        if e.rate.iter().any(|r| !(*r >= 0.0)) {
            issues.push(format!("slot {slot} has a negative or non-finite rate"));
        }
        let power_valid = scenario.check_power(&e.power).is_ok();
        let cap = max_rate_tuple(scenario, &e.power);
        let max_excess = e
            .rate
            .iter()
            .zip(cap.iter())
            .map(|(r, c)| r - c)
            .fold(f64::NEG_INFINITY, f64::max);
        slots.push(SlotCheck {
            slot,
            power_valid,
            within_capacity: max_excess <= DOMINANCE_TOL,
            max_excess,
        });
    }

    let residual = if policy.target.len() == n {
        policy
            .average_rate()
            .iter()
            .zip(policy.target.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    } else {
        f64::INFINITY
    };
    let first_violation = slots
        .iter()
        .find(|s| !(s.power_valid && s.within_capacity))
        .map(|s| s.slot);
    let verdict = issues.is_empty() && first_violation.is_none() && residual <= ACHIEVEMENT_TOL;
    ValidationReport {
        slots,
        residual,
        verdict,
        first_violation,
        issues,
    }
}

impl<'a> MarginSolver<'a> {
    /// Policy delivering `mu` on average over `horizon` slots.
    ///
    /// Slot rates are the queue decrements of a minimum-slot drain of
    /// `T·μ·L`, divided by `L`; slots after the drain carry nothing.
    pub fn derive_policy(&self, mu: &[f64], horizon: usize) -> Result<Policy> {
        let scenario = self.scenario();
        if !self.is_achievable(mu, horizon)? {
            let m = self.rate_margin(mu, horizon)?;
            return Err(Error::Unachievable {
                horizon,
                delta: m.delta,
                scale_down: if m.delta > 0.0 { 1.0 / m.delta } else { f64::INFINITY },
            });
        }
        let q0 = self.initial_queue(mu, horizon);
        let sol = self.search().solve(&q0, horizon, self.mode())?;
        let l = scenario.blocklength() as f64;
        let n = scenario.n_pairs();
        let mut entries: Vec<PolicyEntry> = sol
            .queue_trace
            .windows(2)
            .zip(&sol.power_seq)
            .map(|(w, s)| PolicyEntry {
                rate: RateTuple(w[0].iter().zip(w[1].iter()).map(|(a, b)| (a - b) / l).collect()),
                power: s.clone(),
            })
            .collect();
        entries.resize(
            horizon,
            PolicyEntry {
                rate: RateTuple::zeros(n),
                power: PowerTuple::zeros(n),
            },
        );
        Ok(Policy {
            horizon,
            target: RateTuple(mu.to_vec()),
            entries,
        })
    }
}

pub fn derive_policy(scenario: &NetworkScenario, mu: &[f64], horizon: usize) -> Result<Policy> {
    MarginSolver::new(scenario)?.derive_policy(mu, horizon)
}
