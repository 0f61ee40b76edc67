//! Exact-event simulation of a finite chain and Monte Carlo estimators.
//!
//! Path `i` draws from a ChaCha8 stream selected by `(seed, i)`, so the
//! output does not depend on how paths are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::chain::{DensityTrace, GeneratorMatrix, TimeGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub t_max: f64,
    pub seed: u64,
    /// Start state label.
    pub start: i64,
}

impl SimulationConfig {
    pub fn new(n_paths: usize, t_max: f64, seed: u64, start: i64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be > 0 (got {t_max})")));
        }
        Ok(SimulationConfig { n_paths, t_max, seed, start })
    }
}

/// One trajectory on `[0, t_max]`. `states[0]` is the start; `states[i]`
/// is entered at `jump_times[i - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
}

impl PathSample {
    /// State index occupied at time `t`.
    pub fn state_at(&self, t: f64) -> usize {
        let jumps = self.jump_times.partition_point(|&s| s <= t);
        self.states[jumps]
    }

    /// First time the path sits in `target` (0 if it starts there).
    pub fn first_hit(&self, target: usize) -> Option<f64> {
        let i = self.states.iter().position(|&s| s == target)?;
        Some(if i == 0 { 0.0 } else { self.jump_times[i - 1] })
    }
}

#[derive(Debug, Clone)]
pub struct PathCollection {
    pub t_max: f64,
    pub start: usize,
    /// Label of each matrix index.
    pub labels: Vec<i64>,
    pub paths: Vec<PathSample>,
}

impl PathCollection {
    fn index(&self, label: i64) -> Result<usize> {
        self.labels.iter().position(|&l| l == label).ok_or(Error::UnknownState(label))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t > self.t_max {
            return Err(Error::TimeBeyondHorizon { t, t_max: self.t_max });
        }
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Cumulative off-diagonal rates per row, for inversion sampling.
fn jump_tables(q: &GeneratorMatrix) -> Vec<(f64, Vec<(usize, f64)>)> {
    let r = q.rates();
    (0..q.dim())
        .map(|k| {
            let mut acc = 0.0;
            let mut table = Vec::new();
            for n in (0..q.dim()).filter(|&n| n != k && r[(k, n)] > 0.0) {
                acc += r[(k, n)];
                table.push((n, acc));
            }
            (acc, table)
        })
        .collect()
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn simulate_one(tables: &[(f64, Vec<(usize, f64)>)], start: usize, t_max: f64, rng: &mut ChaCha8Rng) -> PathSample {
    let mut path = PathSample { jump_times: Vec::new(), states: vec![start] };
    let mut state = start;
    let mut t = 0.0;
    loop {
        let (exit, table) = &tables[state];
        if *exit <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        t += hold / exit;
        if t > t_max {
            break;
        }
        let u = rng.random::<f64>() * exit;
        let next = table.iter().find(|(_, c)| u < *c).map_or(table[table.len() - 1].0, |&(n, _)| n);
        path.jump_times.push(t);
        path.states.push(next);
        state = next;
    }
    path
}

/// Simulate `config.n_paths` independent trajectories in parallel.
pub fn simulate_paths(q: &GeneratorMatrix, config: &SimulationConfig) -> Result<PathCollection> {
    let start = q.space().index_of(config.start)?;
    let tables = jump_tables(q);
    let paths = (0..config.n_paths)
        .into_par_iter()
        .map(|i| simulate_one(&tables, start, config.t_max, &mut path_rng(config.seed, i)))
        .collect();
    Ok(PathCollection { t_max: config.t_max, start, labels: q.space().labels().collect(), paths })
}

/// Point estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_count(count: usize, total: usize) -> Self {
        let p = count as f64 / total as f64;
        Estimate { value: p, std_error: (p * (1.0 - p) / total as f64).sqrt() }
    }

    /// Distance from `reference` in standard errors (infinite if the error
    /// is zero and the values differ).
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.value - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Fraction of paths in state `n` at time `t`.
pub fn estimate_transition(paths: &PathCollection, n: i64, t: f64) -> Result<Estimate> {
    paths.check_time(t)?;
    let n = paths.index(n)?;
    let count = paths.paths.iter().filter(|p| p.state_at(t) == n).count();
    Ok(Estimate::from_count(count, paths.len()))
}

/// Empirical first-passage density on the bins of `bins`: grid point `t_i`
/// owns `[t_i − h/2, t_i + h/2)` clipped to `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct FptHistogram {
    pub density: DensityTrace,
    pub std_error: Vec<f64>,
    pub hit_fraction: f64,
    /// Bin edges `(lo, hi)` per grid point.
    pub edges: Vec<(f64, f64)>,
}

pub fn estimate_fpt_histogram(paths: &PathCollection, target: i64, bins: TimeGrid) -> Result<FptHistogram> {
    let target = paths.index(target)?;
    if target == paths.start {
        return Err(Error::StartIsTarget);
    }
    let h = bins.h();
    let horizon = bins.t_max().min(paths.t_max);
    let edges: Vec<(f64, f64)> =
        bins.points().map(|t| ((t - 0.5 * h).max(0.0), (t + 0.5 * h).min(bins.t_max()))).collect();
    let mut counts = vec![0usize; bins.len()];
    let mut hits = 0usize;
    for p in &paths.paths {
        if let Some(t) = p.first_hit(target) {
            if t <= paths.t_max {
                hits += 1;
            }
            if t <= horizon {
                let i = ((t / h + 0.5).floor() as usize).min(bins.steps());
                counts[i] += 1;
            }
        }
    }
    let total = paths.len() as f64;
    let mut values = Vec::with_capacity(bins.len());
    let mut std_error = Vec::with_capacity(bins.len());
    for (c, (lo, hi)) in counts.iter().zip(&edges) {
        let width = hi - lo;
        let est = Estimate::from_count(*c, paths.len());
        values.push(est.value / width);
        std_error.push(est.std_error / width);
    }
    Ok(FptHistogram {
        density: DensityTrace { grid: bins, values },
        std_error,
        hit_fraction: hits as f64 / total,
        edges,
    })
}

/// Fraction of paths at `n` at time `t` that never visited `s` in `(0, t]`.
pub fn estimate_avoiding(paths: &PathCollection, s: i64, n: i64, t: f64) -> Result<Estimate> {
    paths.check_time(t)?;
    let (s, n) = (paths.index(s)?, paths.index(n)?);
    if s == paths.start {
        return Err(Error::StartIsCenter);
    }
    let count = paths.paths.iter().filter(|p| p.state_at(t) == n && p.first_hit(s).is_none_or(|h| h > t)).count();
    Ok(Estimate::from_count(count, paths.len()))
}

/// Fraction of paths at `n` at time `t` that did visit `s` by then.
pub fn estimate_through(paths: &PathCollection, s: i64, n: i64, t: f64) -> Result<Estimate> {
    paths.check_time(t)?;
    let (s, n) = (paths.index(s)?, paths.index(n)?);
    let count = paths.paths.iter().filter(|p| p.state_at(t) == n && p.first_hit(s).is_some_and(|h| h <= t)).count();
    Ok(Estimate::from_count(count, paths.len()))
}
