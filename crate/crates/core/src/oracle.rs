//! Brute-force ground truth for small instances.
//!
//! Every quantity here depends on a slot sequence only through the sum of
//! its per-slot capacities, so sequences are enumerated as multisets of
//! actions. This is independent of the search recursion in `solver`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margin::check_rate;
use crate::numerics::interference_free_rate;
use crate::region::{
    one_slot_frontier, pareto_filter, rate_table, weak_pareto_filter, weakly_dominates,
    DEFAULT_ENUMERATION_CAP,
};
use crate::scenario::{NetworkScenario, PowerTuple, QueueState, RateTuple};
use crate::solver::{DrainSolution, DrainStatus};

/// Action set used by the exhaustive searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSet {
    /// Producers of the one-slot Pareto frontier.
    Refined,
    /// Every power tuple.
    Full,
}

/// Number of multisets of size `k` drawn from `m` kinds, saturating.
pub fn multiset_count(m: usize, k: usize) -> u128 {
    if m == 0 {
        return u128::from(k == 0);
    }
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = c.saturating_mul(m as u128 - 1 + i) / i;
    }
    c
}

/// Calls `f` on every non-decreasing index sequence of length `k` over `0..m`,
/// in lexicographic order.
pub fn for_each_multiset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if m == 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] + 1 < m) else {
            return;
        };
        let v = idx[pos] + 1;
        idx[pos..].iter_mut().for_each(|x| *x = v);
    }
}

fn actions(scenario: &NetworkScenario, set: ActionSet) -> Result<Vec<(PowerTuple, RateTuple)>> {
    Ok(match set {
        ActionSet::Refined => one_slot_frontier(scenario)?
            .points
            .into_iter()
            .map(|p| (p.power, p.rate))
            .collect(),
        ActionSet::Full => rate_table(scenario)?,
    })
}

fn check_cap(what: &'static str, required: u128, cap: u128) -> Result<()> {
    if required > cap {
        return Err(Error::Capacity { what, required, cap });
    }
    Ok(())
}

/// A distinct average capacity tuple over `T` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonPoint {
    pub rate: RateTuple,
    /// One producing power sequence.
    pub powers: Vec<PowerTuple>,
    pub pareto: bool,
    pub weak_pareto: bool,
}

/// Enumerated `T`-slot average capacities with frontier flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonFrontier {
    pub horizon: usize,
    pub points: Vec<HorizonPoint>,
}

impl HorizonFrontier {
    /// Pareto-frontier points.
    pub fn pareto(&self) -> impl Iterator<Item = &HorizonPoint> {
        self.points.iter().filter(|p| p.pareto)
    }

    /// Some enumerated average weakly dominates `mu`.
    pub fn contains(&self, mu: &[f64]) -> bool {
        self.pareto().any(|p| weakly_dominates(&p.rate, mu))
    }

    /// `max_{μ'} min_n μ'⁽ⁿ⁾/μ⁽ⁿ⁾` over the Pareto frontier.
    pub fn margin(&self, mu: &[f64]) -> Result<f64> {
        check_rate(mu)?;
        Ok(self
            .pareto()
            .map(|p| {
                p.rate
                    .iter()
                    .zip(mu)
                    .map(|(a, b)| a / b)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max))
    }
}

pub fn enumerate_frontier(scenario: &NetworkScenario, horizon: usize) -> Result<HorizonFrontier> {
    enumerate_frontier_capped(scenario, horizon, DEFAULT_ENUMERATION_CAP)
}

/// Averages `(1/T)·Σ_t μ_max(s_t)` over all refined power sequences.
pub fn enumerate_frontier_capped(
    scenario: &NetworkScenario,
    horizon: usize,
    cap: u128,
) -> Result<HorizonFrontier> {
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    let acts = actions(scenario, ActionSet::Refined)?;
    check_cap("horizon frontier", multiset_count(acts.len(), horizon), cap)?;
    let n = scenario.n_pairs();
    let t = horizon as f64;

    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut rates: Vec<RateTuple> = Vec::new();
    let mut seqs: Vec<Vec<usize>> = Vec::new();
    for_each_multiset(acts.len(), horizon, |idx| {
        let mut sum = vec![0.0; n];
        for &i in idx {
            for (s, r) in sum.iter_mut().zip(acts[i].1.iter()) {
                *s += r;
            }
        }
        let avg: Vec<f64> = sum.into_iter().map(|s| s / t).collect();
        let key: Vec<i64> = avg.iter().map(|x| (x * 1e9).round() as i64).collect();
        seen.entry(key).or_insert_with(|| {
            rates.push(RateTuple(avg));
            seqs.push(idx.to_vec());
            rates.len() - 1
        });
    });

    let mut pareto = vec![false; rates.len()];
    for i in pareto_filter(&rates) {
        pareto[i] = true;
    }
    let mut weak = vec![false; rates.len()];
    for i in weak_pareto_filter(&rates) {
        weak[i] = true;
    }
    let points = rates
        .into_iter()
        .zip(seqs)
        .enumerate()
        .map(|(i, (rate, seq))| HorizonPoint {
            rate,
            powers: seq.iter().map(|&a| acts[a].0.clone()).collect(),
            pareto: pareto[i],
            weak_pareto: weak[i],
        })
        .collect();
    Ok(HorizonFrontier { horizon, points })
}

/// Margin evaluated directly over the enumerated `T`-slot frontier.
pub fn margin_by_enumeration(scenario: &NetworkScenario, mu: &[f64], horizon: usize) -> Result<f64> {
    check_rate(mu)?;
    enumerate_frontier(scenario, horizon)?.margin(mu)
}

/// Best continuation found by brute force.
struct Best {
    slots: usize,
    frac: f64,
    idx: Vec<usize>,
    served: Vec<f64>,
}

fn ratio_term(q0: &[f64], served: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for (&q, &s) in q0.iter().zip(served) {
        if s > 0.0 {
            m = m.max(q / s);
        }
    }
    m.min(1.0)
}

/// Smallest `k ≤ max_slots` for which some `k`-multiset drains `q0 − served`,
/// with the smallest ratio term among those.
fn min_drain(
    bits: &[Vec<f64>],
    q0: &[f64],
    served: &[f64],
    tol: f64,
    max_slots: usize,
    cap: u128,
    visited: &mut u64,
) -> Result<Option<Best>> {
    let mut budget: u128 = 0;
    for k in 1..=max_slots {
        budget = budget.saturating_add(multiset_count(bits.len(), k));
        check_cap("exhaustive drain", budget, cap)?;
        let mut best: Option<Best> = None;
        for_each_multiset(bits.len(), k, |idx| {
            *visited += 1;
            let mut total = served.to_vec();
            for &i in idx {
                for (s, b) in total.iter_mut().zip(&bits[i]) {
                    *s += b;
                }
            }
            if q0.iter().zip(&total).any(|(q, s)| q - s > tol) {
                return;
            }
            let frac = ratio_term(q0, &total);
            if best.as_ref().is_none_or(|b| frac < b.frac) {
                best = Some(Best {
                    slots: k,
                    frac,
                    idx: idx.to_vec(),
                    served: total,
                });
            }
        });
        if best.is_some() {
            return Ok(best);
        }
    }
    Ok(None)
}

fn action_bits(scenario: &NetworkScenario, acts: &[(PowerTuple, RateTuple)]) -> Vec<Vec<f64>> {
    let l = scenario.blocklength() as f64;
    acts.iter().map(|(_, r)| r.iter().map(|x| x * l).collect()).collect()
}

fn check_feasible(scenario: &NetworkScenario, q: &[f64], tol: f64) -> Result<()> {
    for (n, &qn) in q.iter().enumerate() {
        if qn > tol && interference_free_rate(scenario, n) <= 0.0 {
            return Err(Error::InfeasiblePair { pair: n });
        }
    }
    Ok(())
}

pub fn exhaustive_min_slots(scenario: &NetworkScenario, q0: &[f64], depth_cap: usize) -> Result<DrainSolution> {
    exhaustive_min_slots_with(scenario, q0, depth_cap, ActionSet::Refined, DEFAULT_ENUMERATION_CAP)
}

/// Minimum-slot drain by full enumeration up to `depth_cap` slots.
pub fn exhaustive_min_slots_with(
    scenario: &NetworkScenario,
    q0: &[f64],
    depth_cap: usize,
    set: ActionSet,
    cap: u128,
) -> Result<DrainSolution> {
    if q0.len() != scenario.n_pairs() || q0.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::domain("queue must have one finite non-negative entry per pair"));
    }
    if depth_cap == 0 {
        return Err(Error::domain("depth cap must be at least 1"));
    }
    let tol = scenario.queue_tolerance();
    if q0.iter().all(|&q| q <= tol) {
        return Ok(DrainSolution {
            status: DrainStatus::EmptyStart,
            power_seq: Vec::new(),
            p_star: Some(0),
            frac_term: 0.0,
            queue_trace: vec![QueueState(q0.to_vec())],
            expanded_nodes: 0,
        });
    }
    check_feasible(scenario, q0, tol)?;
    let acts = actions(scenario, set)?;
    let bits = action_bits(scenario, &acts);
    let zero = vec![0.0; q0.len()];
    let mut visited = 0u64;
    let best = min_drain(&bits, q0, &zero, tol, depth_cap, cap, &mut visited)?;
    Ok(match best {
        None => DrainSolution {
            status: DrainStatus::ExceedsHorizon,
            power_seq: Vec::new(),
            p_star: None,
            frac_term: 0.0,
            queue_trace: Vec::new(),
            expanded_nodes: visited,
        },
        Some(b) => {
            let mut trace = vec![QueueState(q0.to_vec())];
            let mut q = q0.to_vec();
            for &i in &b.idx {
                q = q.iter().zip(&bits[i]).map(|(a, c)| (a - c).max(0.0)).collect();
                trace.push(QueueState(q.clone()));
            }
            DrainSolution {
                status: DrainStatus::Solved,
                power_seq: b.idx.iter().map(|&i| acts[i].0.clone()).collect(),
                p_star: Some(b.slots),
                frac_term: ratio_term(q0, &b.served),
                queue_trace: trace,
                expanded_nodes: visited,
            }
        }
    })
}

/// Exact optimal cost-to-go from a search node, in the search's cost units:
/// `k − 1 + frac` for the best `k`-slot continuation.
///
/// `served` is the cumulative service already delivered, in bits. Returns
/// `None` when no continuation of at most `max_slots` slots drains the queue,
/// in which case the cost exceeds `max_slots − 1`.
pub fn exact_remaining_cost(
    scenario: &NetworkScenario,
    q0: &[f64],
    served: &[f64],
    max_slots: usize,
    set: ActionSet,
    cap: u128,
) -> Result<Option<f64>> {
    let tol = scenario.queue_tolerance();
    let left: Vec<f64> = q0.iter().zip(served).map(|(q, s)| (q - s).max(0.0)).collect();
    if left.iter().all(|&q| q <= tol) {
        return Ok(Some(0.0));
    }
    check_feasible(scenario, &left, tol)?;
    let acts = actions(scenario, set)?;
    let bits = action_bits(scenario, &acts);
    let mut visited = 0u64;
    Ok(min_drain(&bits, q0, served, tol, max_slots, cap, &mut visited)?
        .map(|b| (b.slots - 1) as f64 + b.frac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_rate;
    use crate::region::one_slot_frontier;

    fn fig2() -> NetworkScenario {
        NetworkScenario::new(
            vec![vec![1.0, 0.3], vec![0.3, 1.0]],
            vec![0.1, 0.1],
            vec![vec![0.0, 3.0], vec![0.0, 3.0]],
            100,
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn multiset_enumeration() {
        let mut all = Vec::new();
        for_each_multiset(3, 2, |x| all.push(x.to_vec()));
        assert_eq!(
            all,
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2], vec![2, 2]]
        );
        assert_eq!(multiset_count(3, 2), 6);
        assert_eq!(multiset_count(7, 5), 462);
        assert_eq!(multiset_count(4, 0), 1);
        let mut c = 0;
        for_each_multiset(5, 4, |_| c += 1);
        assert_eq!(c as u128, multiset_count(5, 4));
    }

    #[test]
    fn fig2_membership_by_enumeration() {
        let s = fig2();
        let f2 = enumerate_frontier(&s, 2).unwrap();
        assert!(f2.pareto().any(|p| (p.rate[0] - 1.081).abs() < 1e-3 && (p.rate[1] - 1.081).abs() < 1e-3));
        assert!(f2.contains(&[1.08, 1.08]));
        let f3 = enumerate_frontier(&s, 3).unwrap();
        assert!(!f3.contains(&[1.08, 1.08]));
        assert!(f3.contains(&[1.4, 0.6]));
        assert!(!f2.contains(&[1.4, 0.6]));
        let f1 = enumerate_frontier(&s, 1).unwrap();
        assert!(f1.contains(&[0.3, 0.4]) && f2.contains(&[0.3, 0.4]) && f3.contains(&[0.3, 0.4]));
    }

    #[test]
    fn one_slot_enumeration_matches_region() {
        let s = fig2();
        let f = enumerate_frontier(&s, 1).unwrap();
        let region = one_slot_frontier(&s).unwrap();
        let mut ours: Vec<_> = f.pareto().map(|p| p.rate.clone()).collect();
        let mut theirs: Vec<_> = region.rates().cloned().collect();
        let key = |r: &RateTuple| r.0.iter().map(|x| (x * 1e9).round() as i64).collect::<Vec<_>>();
        ours.sort_by_key(key);
        theirs.sort_by_key(key);
        assert_eq!(ours, theirs);
    }

    #[test]
    fn enumerated_margins() {
        let s = fig2();
        let d = margin_by_enumeration(&s, &[0.5, 0.5], 3).unwrap();
        assert!((d - 1.9046).abs() < 2e-3, "{d}");
        let d = margin_by_enumeration(&s, &[2.0, 1.2], 3).unwrap();
        assert!((d - 0.6006).abs() < 2e-3, "{d}");
        let f = enumerate_frontier(&s, 3).unwrap();
        for p in f.pareto().filter(|p| p.rate.is_strictly_positive()) {
            assert!((f.margin(&p.rate).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn averages_reconstruct_from_sequences() {
        let s = fig2();
        let f = enumerate_frontier(&s, 3).unwrap();
        for p in &f.points {
            assert_eq!(p.powers.len(), 3);
            for n in 0..2 {
                let sum: f64 = p
                    .powers
                    .iter()
                    .map(|pw| crate::numerics::max_rate_tuple(&s, pw)[n])
                    .sum();
                assert!((sum / 3.0 - p.rate[n]).abs() < 1e-12);
            }
            if p.pareto {
                assert!(p.weak_pareto);
            }
        }
    }

    #[test]
    fn single_pair_slot_count() {
        let s = NetworkScenario::new(vec![vec![0.8]], vec![0.1], vec![vec![0.0, 5.0]], 100, 1e-3).unwrap();
        let r = max_rate(40.0, 100, 1e-3).unwrap();
        for q in [10.0, 236.0, 237.0, 500.0, 1000.0] {
            let sol = exhaustive_min_slots(&s, &[q], 10).unwrap();
            assert_eq!(sol.p_star, Some((q / (r * 100.0)).ceil() as usize), "q={q}");
            assert!((sol.frac_term - q / (sol.p_star.unwrap() as f64 * r * 100.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_over_horizon() {
        let s = fig2();
        assert_eq!(exhaustive_min_slots(&s, &[0.0, 0.0], 3).unwrap().status, DrainStatus::EmptyStart);
        let sol = exhaustive_min_slots(&s, &[600.0, 360.0], 3).unwrap();
        assert_eq!(sol.status, DrainStatus::ExceedsHorizon);
        assert!(matches!(
            exhaustive_min_slots_with(&s, &[1e5, 1e5], 30, ActionSet::Refined, 100),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn remaining_cost_at_root_equals_objective() {
        let s = fig2();
        let q0 = [150.0, 150.0];
        let sol = exhaustive_min_slots(&s, &q0, 4).unwrap();
        let e = exact_remaining_cost(&s, &q0, &[0.0, 0.0], 4, ActionSet::Refined, 1_000_000)
            .unwrap()
            .unwrap();
        assert!((e - sol.objective().unwrap()).abs() < 1e-15);
        let none = exact_remaining_cost(&s, &[1e4, 1e4], &[0.0, 0.0], 2, ActionSet::Refined, 1_000_000).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn full_set_matches_refined_on_fig2() {
        let s = fig2();
        for q0 in [[150.0, 150.0], [600.0, 100.0], [300.0, 500.0]] {
            let a = exhaustive_min_slots_with(&s, &q0, 5, ActionSet::Refined, 1_000_000).unwrap();
            let b = exhaustive_min_slots_with(&s, &q0, 5, ActionSet::Full, 1_000_000).unwrap();
            assert_eq!(a.p_star, b.p_star);
            assert_eq!(a.frac_term, b.frac_term);
        }
    }
}
