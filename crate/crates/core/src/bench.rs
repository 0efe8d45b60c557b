//! Search-efficiency metrics and the Monte Carlo iteration/branching study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margin::{MarginSolver, Terminal};
use crate::region::FrontierSet;
use crate::scenario::{NetworkScenario, RateTuple};
use crate::solver::{DrainStatus, SearchMode, SolverOptions};

/// Smallest component of a sampled rate tuple.
pub const SAMPLE_FLOOR: f64 = 1e-6;

/// Root `B ≥ 0` of `Σ_{t=1}^{p} B^t = U`.
pub fn effective_branching_factor(expanded: u64, depth: usize) -> f64 {
    let u = expanded as f64;
    if depth <= 1 || expanded == 0 {
        return if depth == 0 { 0.0 } else { u };
    }
    let total = |b: f64| (1..=depth).fold((0.0, 1.0), |(s, pw), _| (s + pw * b, pw * b)).0;
    let (mut lo, mut hi) = (0.0f64, u);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `Σ_w w_i·μ_i` over the frontier, scaled, with components floored.
pub fn convex_sample(frontier: &FrontierSet, weights: &[f64], scale: f64) -> RateTuple {
    let n = frontier.points.first().map_or(0, |p| p.rate.len());
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; n];
    for (p, w) in frontier.points.iter().zip(weights) {
        for (o, r) in out.iter_mut().zip(p.rate.iter()) {
            *o += w / total * r;
        }
    }
    RateTuple(out.into_iter().map(|x| (x * scale).max(SAMPLE_FLOOR)).collect())
}

/// Random point of the convex hull of the one-slot region: flat-Dirichlet
/// weights over frontier points, times a uniform scale in `(0, 1]`.
pub fn sample_rate_tuple<R: Rng + ?Sized>(frontier: &FrontierSet, rng: &mut R) -> RateTuple {
    let weights: Vec<f64> = frontier.points.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let scale = 1.0 - rng.random::<f64>();
    convex_sample(frontier, &weights, scale)
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One drain solve inside a margin run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStat {
    pub expanded: u64,
    pub depth: usize,
    pub branching: f64,
    pub ebr: f64,
    /// Children generated, `expanded·|S̄|`.
    pub generated: u64,
    /// EBR computed from generated rather than expanded nodes.
    pub ebr_generated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub horizon: usize,
    pub trial: u64,
    pub mu: RateTuple,
    pub delta: Option<f64>,
    pub iterations: Option<usize>,
    pub terminal: Option<Terminal>,
    /// Mean EBR over the solves of this trial.
    pub ebr: Option<f64>,
    pub ebr_generated: Option<f64>,
    pub solves: Vec<SolveStat>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub horizon: usize,
    pub trials: usize,
    pub failed: usize,
    pub ain: f64,
    pub aebr: f64,
    pub aebr_generated: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: SearchMode,
    pub product_size: u128,
    pub rows: Vec<BenchRow>,
    pub records: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,trials,AIN,AEBR\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.6},{:.6}\n", r.horizon, r.trials, r.ain, r.aebr));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub mode: SearchMode,
    pub solver: SolverOptions,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            mode: SearchMode::AStar,
            solver: SolverOptions::default(),
        }
    }
}

fn run_trial(ms: &MarginSolver, horizon: usize, trial: u64, seed: u64, size: f64) -> TrialRecord {
    let mut rng = trial_rng(seed, trial);
    let mu = sample_rate_tuple(ms.frontier(), &mut rng);
    let mut rec = TrialRecord {
        horizon,
        trial,
        mu: mu.clone(),
        delta: None,
        iterations: None,
        terminal: None,
        ebr: None,
        ebr_generated: None,
        solves: Vec::new(),
        error: None,
    };
    match ms.rate_margin(&mu, horizon) {
        Ok(m) => {
            rec.solves = m
                .solves
                .iter()
                .map(|s| {
                    let depth = match s.status {
                        DrainStatus::ExceedsHorizon => horizon,
                        _ => s.p_star.unwrap_or(horizon).min(horizon),
                    };
                    let b = effective_branching_factor(s.expanded_nodes, depth);
                    let generated = s.expanded_nodes * ms.frontier().len() as u64;
                    SolveStat {
                        expanded: s.expanded_nodes,
                        depth,
                        branching: b,
                        ebr: b / size,
                        generated,
                        ebr_generated: effective_branching_factor(generated, depth) / size,
                    }
                })
                .collect();
            let k = rec.solves.len() as f64;
            rec.ebr = Some(rec.solves.iter().map(|s| s.ebr).sum::<f64>() / k);
            rec.ebr_generated = Some(rec.solves.iter().map(|s| s.ebr_generated).sum::<f64>() / k);
            rec.delta = Some(m.delta);
            rec.iterations = Some(m.iterations);
            rec.terminal = Some(m.terminal);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Samples `trials` rate tuples per horizon and records iteration counts and
/// effective branching ratios of the margin computation.
///
/// Trial `i` draws from its own stream of `seed`, so the same tuples are used
/// for every horizon and results do not depend on thread scheduling.
pub fn run_table1(
    scenario: &NetworkScenario,
    horizons: &[usize],
    trials: usize,
    seed: u64,
    options: BenchOptions,
) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::domain("horizons must be a non-empty list of positive integers"));
    }
    let ms = MarginSolver::with_options(scenario, options.solver, options.mode)?;
    let size = scenario.product_size() as f64;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &t in horizons {
        let recs: Vec<TrialRecord> = (0..trials as u64)
            .into_par_iter()
            .map(|i| run_trial(&ms, t, i, seed, size))
            .collect();
        let ok: Vec<&TrialRecord> = recs.iter().filter(|r| r.error.is_none()).collect();
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        rows.push(BenchRow {
            horizon: t,
            trials,
            failed: recs.len() - ok.len(),
            ain: mean(&|r| r.iterations.unwrap_or(0) as f64),
            aebr: mean(&|r| r.ebr.unwrap_or(0.0)),
            aebr_generated: mean(&|r| r.ebr_generated.unwrap_or(0.0)),
            seed,
        });
        records.extend(recs);
    }
    Ok(BenchReport {
        mode: options.mode,
        product_size: scenario.product_size(),
        rows,
        records,
    })
}
