//! The tabu-search optimizer over mixed hyperparameter spaces and its
//! grid-search baseline.
//!
//! The loop keeps a bounded FIFO of recently accepted solutions (the tabu
//! list), a long-term best, normal-distributed coordinate moves, a
//! global-best aspiration override, intensification back to the incumbent
//! after a stagnant stretch, and a small-probability diversification jump.

mod objective;
mod space;

pub use objective::{make_objective, make_objective_with};
pub use space::{space_for, ParamKind, ParamSpec, ParamVector};

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tabu list capacity.
pub const TABU_CAPACITY: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TsConfig {
    pub max_iterations: usize,
    pub diversification_prob: f64,
    pub neighborhood_size: usize,
    pub seed: u64,
    /// Move standard deviation for coordinates whose upper bound exceeds 1.
    pub sigma_large: f64,
    /// Move standard deviation for (0,1)-ranged coordinates.
    pub sigma_unit: f64,
    /// Consecutive non-improving iterations before the search resets to the
    /// best solution seen.
    pub intensification_patience: usize,
}

impl Default for TsConfig {
    fn default() -> Self {
        TsConfig {
            max_iterations: 300,
            diversification_prob: 0.002,
            neighborhood_size: 10,
            seed: 0,
            sigma_large: 2.0,
            sigma_unit: 0.1,
            intensification_patience: 30,
        }
    }
}

/// One objective evaluation, in trace order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub objective: f64,
    pub accepted: bool,
    pub tabu_hit: bool,
    pub diversified: bool,
}

#[derive(Debug, Clone)]
pub struct TsResult {
    pub best: ParamVector,
    pub best_objective: f64,
    pub trace: Vec<Evaluation>,
    /// Tabu list length after each iteration (audit trail).
    pub tabu_len_by_iteration: Vec<usize>,
}

/// Search memory: current solution, the tabu FIFO, and the long-term best.
#[derive(Debug, Clone)]
pub struct TabuState {
    pub current: ParamVector,
    pub tabu_list: VecDeque<Vec<i64>>,
    pub best: ParamVector,
    pub best_objective: f64,
    pub iteration: usize,
}

impl TabuState {
    fn is_tabu(&self, v: &ParamVector) -> bool {
        let key = v.rounded_key();
        self.tabu_list.iter().any(|k| *k == key)
    }

    /// Age rank of a vector's tabu entry: 0 is the oldest entry still in the
    /// list.
    fn tabu_age(&self, v: &ParamVector) -> Option<usize> {
        let key = v.rounded_key();
        self.tabu_list.iter().position(|k| *k == key)
    }

    fn push_move(&mut self, v: &ParamVector) {
        self.tabu_list.push_back(v.rounded_key());
        while self.tabu_list.len() > TABU_CAPACITY {
            self.tabu_list.pop_front();
        }
    }
}

fn uniform_solution(space: &[ParamSpec], rng: &mut ChaCha8Rng, full_bounds: bool) -> ParamVector {
    let values = space
        .iter()
        .map(|s| {
            let (lo, hi) = if full_bounds {
                (s.lower, s.upper)
            } else {
                (s.init_lower, s.init_upper)
            };
            let v = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            s.conform(v)
        })
        .collect();
    ParamVector(values)
}

/// Fresh solution drawn uniformly from each parameter's initialization
/// sub-range, integers rounded to nearest.
pub fn init_solution(space: &[ParamSpec], rng: &mut ChaCha8Rng) -> ParamVector {
    uniform_solution(space, rng, false)
}

/// Perturb every coordinate by `deltas`, then round integers and clamp into
/// bounds.
pub fn apply_move(current: &ParamVector, space: &[ParamSpec], deltas: &[f64]) -> ParamVector {
    ParamVector(
        current
            .values()
            .iter()
            .zip(space)
            .zip(deltas)
            .map(|((&v, s), &d)| s.conform(v + d))
            .collect(),
    )
}

/// Neighborhood move: every coordinate shifts by Normal(0, sigma), sigma
/// chosen by whether the coordinate's range extends past 1.
pub fn neighbor(
    current: &ParamVector,
    space: &[ParamSpec],
    cfg: &TsConfig,
    rng: &mut ChaCha8Rng,
) -> ParamVector {
    let deltas: Vec<f64> = space
        .iter()
        .map(|s| {
            let sigma = if s.upper > 1.0 { cfg.sigma_large } else { cfg.sigma_unit };
            Normal::new(0.0, sigma).unwrap().sample(rng)
        })
        .collect();
    apply_move(current, space, &deltas)
}

/// Clamp out-of-range coordinates back into bounds and round integers.
pub fn repair_bounds(v: &ParamVector, space: &[ParamSpec]) -> ParamVector {
    ParamVector(v.values().iter().zip(space).map(|(&x, s)| s.conform(x)).collect())
}

fn evaluate<F>(
    objective: &F,
    v: &ParamVector,
    iteration: usize,
    tabu_hit: bool,
    diversified: bool,
    trace: &mut Vec<Evaluation>,
) -> Result<f64>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    let value = objective(v).map_err(|e| Error::Objective {
        params: v.values().to_vec(),
        source: Box::new(e),
    })?;
    trace.push(Evaluation {
        iteration,
        params: v.values().to_vec(),
        objective: value,
        accepted: false,
        tabu_hit,
        diversified,
    });
    Ok(value)
}

/// Maximize `objective` over the space. Returns the long-term best and the
/// full evaluation trace.
pub fn ts_optimize<F>(space: &[ParamSpec], objective: &F, cfg: &TsConfig) -> Result<TsResult>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    if space.is_empty() {
        return Err(Error::Config("empty parameter space".into()));
    }
    if cfg.neighborhood_size == 0 {
        return Err(Error::Config("neighborhood_size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::new();
    let mut tabu_len_by_iteration = Vec::with_capacity(cfg.max_iterations);

    let current = init_solution(space, &mut rng);
    let objective_value = evaluate(objective, &current, 0, false, false, &mut trace)?;
    trace[0].accepted = true;

    let mut state = TabuState {
        best: current.clone(),
        best_objective: objective_value,
        current,
        tabu_list: VecDeque::new(),
        iteration: 0,
    };
    let mut stagnant = 0usize;

    for iteration in 1..=cfg.max_iterations {
        state.iteration = iteration;

        if rng.random::<f64>() < cfg.diversification_prob {
            let fresh = uniform_solution(space, &mut rng, true);
            let tabu_hit = state.is_tabu(&fresh);
            let value = evaluate(objective, &fresh, iteration, tabu_hit, true, &mut trace)?;
            trace.last_mut().unwrap().accepted = true;
            if value > state.best_objective {
                state.best = fresh.clone();
                state.best_objective = value;
                stagnant = 0;
            }
            state.current = fresh;
        }

        let base = trace.len();
        let candidates: Vec<ParamVector> = (0..cfg.neighborhood_size)
            .map(|_| neighbor(&state.current, space, cfg, &mut rng))
            .collect();
        let mut values = Vec::with_capacity(candidates.len());
        for c in &candidates {
            let tabu_hit = state.is_tabu(c);
            values.push(evaluate(objective, c, iteration, tabu_hit, false, &mut trace)?);
        }

        // Best-objective-first; candidate index breaks ties deterministically.
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));

        let mut chosen = None;
        for &idx in &order {
            let tabu = trace[base + idx].tabu_hit;
            let aspires = values[idx] > state.best_objective;
            if !tabu || aspires {
                chosen = Some(idx);
                break;
            }
        }
        // Everything tabu and nothing aspires: take the candidate whose tabu
        // entry is oldest.
        let chosen = chosen.unwrap_or_else(|| {
            *order
                .iter()
                .min_by_key(|&&idx| state.tabu_age(&candidates[idx]).unwrap_or(usize::MAX))
                .unwrap()
        });

        trace[base + chosen].accepted = true;
        let accepted = candidates[chosen].clone();
        state.push_move(&accepted);
        state.current = accepted;
        if values[chosen] > state.best_objective {
            state.best = candidates[chosen].clone();
            state.best_objective = values[chosen];
            stagnant = 0;
        } else {
            stagnant += 1;
        }

        if stagnant >= cfg.intensification_patience {
            state.current = state.best.clone();
            stagnant = 0;
        }
        tabu_len_by_iteration.push(state.tabu_list.len());
    }

    Ok(TsResult {
        best: state.best,
        best_objective: state.best_objective,
        trace,
        tabu_len_by_iteration,
    })
}

/// Evenly spaced axis over [lower, upper]; integer axes deduplicate after
/// rounding. A single point sits at the lower bound.
fn grid_axis(spec: &ParamSpec, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![spec.conform(spec.lower)];
    }
    let mut axis: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            spec.conform(spec.lower + t * (spec.upper - spec.lower))
        })
        .collect();
    axis.dedup();
    axis
}

/// Exhaustive search over the Cartesian product of evenly spaced values.
/// Fails before any evaluation if the product exceeds `budget`. Ties go to
/// the lexicographically smallest vector.
pub fn grid_search<F>(
    space: &[ParamSpec],
    objective: &F,
    grid_points_per_param: &[usize],
    budget: u64,
) -> Result<(ParamVector, f64)>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    if grid_points_per_param.len() != space.len() {
        return Err(Error::Config(format!(
            "{} grid sizes for {} parameters",
            grid_points_per_param.len(),
            space.len()
        )));
    }
    if grid_points_per_param.contains(&0) {
        return Err(Error::Config("grid points per parameter must be positive".into()));
    }
    let axes: Vec<Vec<f64>> = space
        .iter()
        .zip(grid_points_per_param)
        .map(|(s, &p)| grid_axis(s, p))
        .collect();
    let mut candidates: u64 = 1;
    for axis in &axes {
        candidates = candidates.saturating_mul(axis.len() as u64);
    }
    if candidates > budget {
        return Err(Error::Budget { candidates, budget });
    }

    let mut best: Option<(ParamVector, f64)> = None;
    let mut cursor = vec![0usize; axes.len()];
    loop {
        let v = ParamVector(cursor.iter().zip(&axes).map(|(&i, axis)| axis[i]).collect());
        let value = objective(&v).map_err(|e| Error::Objective {
            params: v.values().to_vec(),
            source: Box::new(e),
        })?;
        // Lexicographic iteration order + strict improvement = smallest
        // vector wins ties.
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((v, value));
        }
        let mut level = axes.len();
        loop {
            if level == 0 {
                return Ok(best.unwrap());
            }
            level -= 1;
            cursor[level] += 1;
            if cursor[level] < axes[level].len() {
                break;
            }
            cursor[level] = 0;
        }
    }
}

/// Allocate grid points per parameter so the Cartesian product stays within
/// `budget`: counts start at 1 and grow round-robin. Integer axes cap at
/// their distinct-value count.
pub fn grid_plan(space: &[ParamSpec], budget: u64) -> Vec<usize> {
    let caps: Vec<u64> = space
        .iter()
        .map(|s| match s.kind {
            ParamKind::Integer => (s.upper - s.lower) as u64 + 1,
            ParamKind::Float => u64::MAX,
        })
        .collect();
    let mut counts = vec![1u64; space.len()];
    loop {
        let mut grew = false;
        for i in 0..space.len() {
            if counts[i] >= caps[i] {
                continue;
            }
            let product: u64 = counts
                .iter()
                .enumerate()
                .map(|(j, &c)| if j == i { c + 1 } else { c })
                .try_fold(1u64, |acc, c| acc.checked_mul(c))
                .unwrap_or(u64::MAX);
            if product <= budget {
                counts[i] += 1;
                grew = true;
            }
        }
        if !grew {
            return counts.iter().map(|&c| c as usize).collect();
        }
    }
}
