//! One-slot throughput region: power-tuple enumeration, Pareto and weak
//! Pareto filtering, and the refined power set whose rates form the frontier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::max_rate_tuple;
use crate::scenario::{NetworkScenario, PowerTuple, RateTuple};

/// Absolute tolerance, in rate units, for dominance and equality of rate tuples.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// Default cap on the number of enumerated power tuples.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// `a ⪰ b` within [`DOMINANCE_TOL`].
pub fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x >= *y - DOMINANCE_TOL)
}

/// `a ≻ b`: strictly larger in every component, by more than the tolerance.
pub fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x > *y + DOMINANCE_TOL)
}

/// Equality of rate tuples within the tolerance.
pub fn nearly_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DOMINANCE_TOL)
}

/// Full Cartesian product of the power sets, the first pair varying slowest.
pub fn enumerate_power_tuples(scenario: &NetworkScenario) -> Result<Vec<PowerTuple>> {
    enumerate_power_tuples_capped(scenario, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_power_tuples_capped(
    scenario: &NetworkScenario,
    cap: u128,
) -> Result<Vec<PowerTuple>> {
    let size = scenario.product_size();
    if size > cap {
        return Err(Error::Capacity {
            what: "power-tuple enumeration",
            required: size,
            cap,
        });
    }
    let n = scenario.n_pairs();
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; n];
    loop {
        out.push(PowerTuple(
            idx.iter()
                .enumerate()
                .map(|(k, &i)| scenario.power_set(k)[i])
                .collect(),
        ));
        // Odometer increment, last pair fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < scenario.power_set(k).len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Indices of pairwise-distinct points, sorted by decreasing component sum.
/// Among near-equal points the lowest index survives.
fn distinct_by_sum(points: &[RateTuple]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let sums: Vec<f64> = points.iter().map(|p| p.iter().sum()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    order
}

/// Pareto frontier: points no other (distinct) point weakly dominates.
/// Near-duplicates collapse onto the lowest index before filtering.
pub fn pareto_filter(points: &[RateTuple]) -> Vec<usize> {
    let order = distinct_by_sum(points);
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let p = &points[i];
        if let Some(pos) = kept.iter().position(|&k| nearly_equal(&points[k], p)) {
            if i < kept[pos] {
                kept[pos] = i;
            }
            continue;
        }
        if kept.iter().any(|&k| weakly_dominates(&points[k], p)) {
            continue;
        }
        kept.push(i);
    }
    // The sum ordering is exact only up to the tolerance band; sweep once more.
    let survivors: Vec<usize> = kept
        .iter()
        .copied()
        .filter(|&i| {
            !kept.iter().any(|&k| {
                k != i
                    && weakly_dominates(&points[k], &points[i])
                    && !weakly_dominates(&points[i], &points[k])
            })
        })
        .collect();
    let mut survivors = survivors;
    survivors.sort_unstable();
    survivors
}

/// Weak Pareto frontier: points that no other point strictly dominates in
/// every component. Always a superset of [`pareto_filter`].
pub fn weak_pareto_filter(points: &[RateTuple]) -> Vec<usize> {
    let order = distinct_by_sum(points);
    let mut reps: Vec<usize> = Vec::new();
    for &i in &order {
        let p = &points[i];
        if let Some(pos) = reps.iter().position(|&k| nearly_equal(&points[k], p)) {
            if i < reps[pos] {
                reps[pos] = i;
            }
            continue;
        }
        reps.push(i);
    }
    // Strict dominance implies a strictly larger sum, so only earlier
    // representatives can dominate a later one; transitivity lets the check
    // run against survivors only.
    let mut kept: Vec<usize> = Vec::new();
    for &i in &reps {
        if !kept.iter().any(|&k| strictly_dominates(&points[k], &points[i])) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// A maximal one-slot rate tuple and a power tuple producing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub rate: RateTuple,
    pub power: PowerTuple,
}

/// Pareto frontier of the one-slot region together with its refined power set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSet {
    pub points: Vec<FrontierPoint>,
    pub scenario_fingerprint: String,
}

impl FrontierSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rates(&self) -> impl Iterator<Item = &RateTuple> {
        self.points.iter().map(|p| &p.rate)
    }

    /// `true` when some frontier point weakly dominates `mu`.
    pub fn covers(&self, mu: &[f64]) -> bool {
        self.rates().any(|r| weakly_dominates(r, mu))
    }
}

/// Every power tuple paired with its maximum rate tuple, in enumeration order.
pub fn rate_table(scenario: &NetworkScenario) -> Result<Vec<(PowerTuple, RateTuple)>> {
    let powers = enumerate_power_tuples(scenario)?;
    Ok(powers
        .into_par_iter()
        .map(|s| {
            let r = max_rate_tuple(scenario, &s);
            (s, r)
        })
        .collect())
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Pareto frontier of the one-slot region. Where several power tuples yield
/// the same frontier rate, the one with the least total power is kept, ties
/// broken lexicographically. Points are returned in power-tuple order.
pub fn one_slot_frontier(scenario: &NetworkScenario) -> Result<FrontierSet> {
    let mut table = rate_table(scenario)?;
    table.sort_by(|(a, _), (b, _)| {
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        sa.total_cmp(&sb).then_with(|| lexicographic(a, b))
    });
    let rates: Vec<RateTuple> = table.iter().map(|(_, r)| r.clone()).collect();
    let mut points: Vec<FrontierPoint> = pareto_filter(&rates)
        .into_iter()
        .map(|i| FrontierPoint {
            rate: table[i].1.clone(),
            power: table[i].0.clone(),
        })
        .collect();
    points.sort_by(|a, b| lexicographic(&a.power, &b.power));
    Ok(FrontierSet {
        points,
        scenario_fingerprint: scenario.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_rate;
    use proptest::prelude::*;

    fn rt(v: &[f64]) -> RateTuple {
        RateTuple(v.to_vec())
    }

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

    /// O(M²) reference straight from the definitions.
    fn pareto_oracle(points: &[RateTuple]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for b in points {
            let dominated = points
                .iter()
                .any(|a| weakly_dominates(a, b) && !nearly_equal(a, b));
            if !dominated && !out.iter().any(|o| nearly_equal(o, b)) {
                out.push(b.0.clone());
            }
        }
        out.sort_by(|a, b| lexicographic(a, b));
        out
    }

    fn weak_oracle(points: &[RateTuple]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for b in points {
            if !points.iter().any(|a| strictly_dominates(a, b))
                && !out.iter().any(|o| nearly_equal(o, b))
            {
                out.push(b.0.clone());
            }
        }
        out.sort_by(|a, b| lexicographic(a, b));
        out
    }

    fn pick(points: &[RateTuple], idx: &[usize]) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].0.clone()).collect();
        v.sort_by(|a, b| lexicographic(a, b));
        v
    }

    #[test]
    fn enumeration_order_and_size() {
        let s = fig2();
        let all = enumerate_power_tuples(&s).unwrap();
        let v: Vec<Vec<f64>> = all.into_iter().map(|p| p.0).collect();
        assert_eq!(
            v,
            vec![vec![0.0, 0.0], vec![0.0, 3.0], vec![3.0, 0.0], vec![3.0, 3.0]]
        );
    }

    #[test]
    fn enumeration_cap() {
        let s = fig2();
        let err = enumerate_power_tuples_capped(&s, 3).unwrap_err();
        assert!(matches!(err, Error::Capacity { required: 4, cap: 3, .. }));
    }

    #[test]
    fn pareto_examples() {
        let pts = vec![
            rt(&[2.162, 0.0]),
            rt(&[0.0, 2.162]),
            rt(&[0.695, 0.695]),
            rt(&[0.0, 0.0]),
        ];
        assert_eq!(pareto_filter(&pts), vec![0, 1, 2]);
        assert_eq!(pareto_filter(&[rt(&[1.0, 1.0])]), vec![0]);
        assert_eq!(pareto_filter(&[rt(&[1.0, 0.0]), rt(&[1.0, 0.0])]), vec![0]);
        assert!(pareto_filter(&[]).is_empty());
    }

    #[test]
    fn weak_pareto_examples() {
        let pts = vec![rt(&[2.0, 0.0]), rt(&[0.0, 2.0]), rt(&[2.0, 2.0])];
        assert_eq!(weak_pareto_filter(&pts), vec![0, 1, 2]);
        // Pareto keeps only (2,2).
        assert_eq!(pareto_filter(&pts), vec![2]);
        let pts = vec![rt(&[1.0, 1.0]), rt(&[2.0, 2.0])];
        assert_eq!(weak_pareto_filter(&pts), vec![1]);
        assert!(weak_pareto_filter(&[]).is_empty());
    }

    #[test]
    fn weak_filter_fixes_pareto_output() {
        let pts = vec![
            rt(&[2.162, 0.0]),
            rt(&[0.0, 2.162]),
            rt(&[0.695, 0.695]),
        ];
        let front: Vec<RateTuple> = pareto_filter(&pts).into_iter().map(|i| pts[i].clone()).collect();
        assert_eq!(weak_pareto_filter(&front).len(), front.len());
    }

    #[test]
    fn fig2_frontier() {
        let s = fig2();
        let f = one_slot_frontier(&s).unwrap();
        assert_eq!(f.len(), 3);
        let powers: Vec<Vec<f64>> = f.points.iter().map(|p| p.power.0.clone()).collect();
        assert_eq!(powers, vec![vec![0.0, 3.0], vec![3.0, 0.0], vec![3.0, 3.0]]);
        let r30 = max_rate(30.0, 100, 1e-3).unwrap();
        let r3 = max_rate(3.0, 100, 1e-3).unwrap();
        assert!((f.points[0].rate[1] - r30).abs() < 1e-12);
        assert!((f.points[1].rate[0] - r30).abs() < 1e-12);
        assert!((f.points[2].rate[0] - r3).abs() < 1e-12);
        assert!((r30 - 2.162).abs() < 5e-4 && (r3 - 0.695).abs() < 5e-4);
    }

    #[test]
    fn single_pair_frontier() {
        let s = NetworkScenario::new(vec![vec![0.8]], vec![0.1], vec![vec![0.0, 5.0]], 100, 1e-3)
            .unwrap();
        let f = one_slot_frontier(&s).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f.points[0].rate[0] - max_rate(40.0, 100, 1e-3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn no_cross_gain_keeps_joint_point_only() {
        let s = NetworkScenario::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.1, 0.1],
            vec![vec![0.0, 3.0], vec![0.0, 3.0]],
            100,
            1e-3,
        )
        .unwrap();
        let f = one_slot_frontier(&s).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.points[0].power.0, vec![3.0, 3.0]);
    }

    #[test]
    fn duplicate_rates_keep_minimum_power() {
        // Pair 2 cannot reach a positive rate, so its power never matters.
        let s = NetworkScenario::new(
            vec![vec![1.0, 0.0], vec![0.0, 1e-9]],
            vec![0.1, 0.1],
            vec![vec![0.0, 3.0], vec![0.0, 1.0, 2.0]],
            100,
            1e-3,
        )
        .unwrap();
        let f = one_slot_frontier(&s).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.points[0].power.0, vec![3.0, 0.0]);
    }

    #[test]
    fn frontier_rates_reconstruct_from_powers() {
        let s = NetworkScenario::new(
            vec![vec![0.5, 0.3, 0.3], vec![0.3, 0.5, 0.3], vec![0.3, 0.3, 0.5]],
            vec![0.1; 3],
            vec![vec![0.0, 1.0, 2.0]; 3],
            100,
            1e-3,
        )
        .unwrap();
        let f = one_slot_frontier(&s).unwrap();
        for p in &f.points {
            assert_eq!(max_rate_tuple(&s, &p.power), p.rate);
        }
        // Every enumerated rate is covered by the frontier.
        for (_, r) in rate_table(&s).unwrap() {
            assert!(f.covers(&r));
        }
    }

    fn point_cloud() -> impl Strategy<Value = Vec<RateTuple>> {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..3.0], 3),
            0..40,
        )
        .prop_map(|v| v.into_iter().map(RateTuple).collect())
    }

    proptest! {
        #[test]
        fn filters_match_definitions(pts in point_cloud()) {
            let p = pareto_filter(&pts);
            let w = weak_pareto_filter(&pts);
            prop_assert_eq!(pick(&pts, &p), pareto_oracle(&pts));
            prop_assert_eq!(pick(&pts, &w), weak_oracle(&pts));
            for i in &p {
                prop_assert!(w.contains(i));
            }
        }

        #[test]
        fn filters_are_order_independent(pts in point_cloud(), seed in any::<u64>()) {
            let mut shuffled = pts.clone();
            // Deterministic Fisher-Yates from the seed.
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(pick(&pts, &pareto_filter(&pts)), pick(&shuffled, &pareto_filter(&shuffled)));
            prop_assert_eq!(pick(&pts, &weak_pareto_filter(&pts)), pick(&shuffled, &weak_pareto_filter(&shuffled)));
        }
    }
}
