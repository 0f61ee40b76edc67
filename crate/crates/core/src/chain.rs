//! State spaces, validated generators and time grids.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bdjump::BdJumpModel;
use crate::error::{Error, Result};

/// Largest tolerated |row sum| of a generator.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// An indexed state space. Matrix index `i` carries the label returned by
/// [`StateSpace::label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpace {
    /// States `0..=n`.
    Finite { n: usize },
    /// Integer states `lo..=hi`, a finite cut of the integer lattice.
    Window { lo: i64, hi: i64 },
}

impl StateSpace {
    pub fn window(lo: i64, hi: i64) -> Result<Self> {
        if hi - lo < 2 || lo >= 0 || hi <= 0 {
            return Err(Error::WindowTooSmall { lo, hi });
        }
        Ok(StateSpace::Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        match *self {
            StateSpace::Finite { n } => n + 1,
            StateSpace::Window { lo, hi } => (hi - lo + 1) as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, index: usize) -> i64 {
        match *self {
            StateSpace::Finite { .. } => index as i64,
            StateSpace::Window { lo, .. } => lo + index as i64,
        }
    }

    pub fn index_of(&self, label: i64) -> Result<usize> {
        let (lo, hi) = match *self {
            StateSpace::Finite { n } => (0, n as i64),
            StateSpace::Window { lo, hi } => (lo, hi),
        };
        if label < lo || label > hi {
            return Err(Error::UnknownState(label));
        }
        Ok((label - lo) as usize)
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(|i| self.label(i))
    }

    /// Fails unless the space can be mirrored about its midpoint.
    pub fn check_reflectable(&self) -> Result<()> {
        match *self {
            StateSpace::Finite { .. } => Ok(()),
            StateSpace::Window { lo, hi } if lo == -hi => Ok(()),
            StateSpace::Window { lo, hi } => Err(Error::AsymmetricWindow { lo, hi }),
        }
    }

    /// Image of a matrix index under the reflection `n -> N - n`.
    ///
    /// Both reflectable kinds reverse the index order, so this is
    /// `len - 1 - index`.
    pub fn reflect_position(&self, index: usize) -> usize {
        self.len() - 1 - index
    }

    /// Label of the midpoint `N/2` (may be a half-integer for odd `N`).
    pub fn center(&self) -> f64 {
        match *self {
            StateSpace::Finite { n } => n as f64 / 2.0,
            StateSpace::Window { lo, hi } => (lo + hi) as f64 / 2.0,
        }
    }
}

/// Mirror a state label: `N - n` on `{0..N}`, `-n` on a symmetric window.
pub fn reflect_index(space: &StateSpace, n: i64) -> Result<i64> {
    space.check_reflectable()?;
    space.index_of(n)?;
    Ok(match *space {
        StateSpace::Finite { n: big_n } => big_n as i64 - n,
        StateSpace::Window { .. } => -n,
    })
}

/// A dense infinitesimal generator that passed [`validate_generator`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    space: StateSpace,
    rates: DMatrix<f64>,
}

impl GeneratorMatrix {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    /// Rate between two labels.
    pub fn rate(&self, k: i64, n: i64) -> Result<f64> {
        Ok(self.rates[(self.space.index_of(k)?, self.space.index_of(n)?)])
    }

    /// Largest exit rate `max_n |q_{n,n}|`.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|i| -self.rates[(i, i)]).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rates.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Check the generator relations (nonnegative off-diagonal, nonpositive
/// diagonal, zero row sums). Nothing is repaired.
pub fn validate_generator(entries: DMatrix<f64>, space: StateSpace) -> Result<GeneratorMatrix> {
    let states = space.len();
    if entries.nrows() != states || entries.ncols() != states {
        return Err(Error::DimensionMismatch { rows: entries.nrows(), cols: entries.ncols(), states });
    }
    for k in 0..states {
        let mut sum = 0.0;
        for n in 0..states {
            let q = entries[(k, n)];
            if !q.is_finite() {
                return Err(Error::NonFinite { k: space.label(k), n: space.label(n) });
            }
            if k != n && q < 0.0 {
                return Err(Error::NegativeOffDiagonal { k: space.label(k), n: space.label(n), value: q });
            }
            sum += q;
        }
        if entries[(k, k)] > 0.0 {
            return Err(Error::PositiveDiagonal { n: space.label(k), value: entries[(k, k)] });
        }
        if sum.abs() > ROW_SUM_TOL {
            return Err(Error::RowSumNonzero { k: space.label(k), residual: sum });
        }
    }
    Ok(GeneratorMatrix { space, rates: entries })
}

/// Convenience wrapper over [`validate_generator`] for row-major input.
pub fn generator_from_rows(rows: &[Vec<f64>], space: StateSpace) -> Result<GeneratorMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        return Err(Error::DimensionMismatch { rows: n, cols, states: space.len() });
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    validate_generator(m, space)
}

/// Set each diagonal entry to minus the sum of its row's off-diagonal rates.
pub(crate) fn close_rows(m: &mut DMatrix<f64>) {
    for k in 0..m.nrows() {
        let off: f64 = (0..m.ncols()).filter(|&n| n != k).map(|n| m[(k, n)]).sum();
        m[(k, k)] = -off;
    }
}

/// Realize the bilateral birth-death chain with jumps to 0 on a finite
/// window. Outward moves at the window edges are dropped (reflecting cut).
pub fn truncate_bdjump(model: &BdJumpModel, lo: i64, hi: i64) -> Result<GeneratorMatrix> {
    let space = StateSpace::window(lo, hi)?;
    let size = space.len();
    let zero = space.index_of(0)?;
    let mut q = DMatrix::zeros(size, size);
    for i in 0..size {
        if i + 1 < size {
            q[(i, i + 1)] += model.lambda;
        }
        if i > 0 {
            q[(i, i - 1)] += model.mu;
        }
        if i != zero {
            q[(i, zero)] += model.alpha;
        }
    }
    close_rows(&mut q);
    validate_generator(q, space)
}

/// Uniform time discretization `{0, h, ..., t_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !t_max.is_finite() || t_max <= 0.0 {
            return Err(Error::EmptyGrid);
        }
        Ok(TimeGrid { t_max, steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_max
        } else {
            self.t_max * i as f64 / self.steps as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        ((t / self.h()).round().max(0.0) as usize).min(self.steps)
    }
}

/// A function of time sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTrace {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl DensityTrace {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(DensityTrace { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        DensityTrace { grid, values: grid.points().map(f).collect() }
    }

    /// Cumulative trapezoid integral, one value per grid point.
    pub fn cumulative(&self) -> Vec<f64> {
        let h = self.grid.h();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    pub fn integral(&self) -> f64 {
        *self.cumulative().last().unwrap_or(&0.0)
    }

    pub fn max_abs_diff(&self, other: &DensityTrace) -> Result<(f64, usize)> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut worst = (0.0, 0);
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let d = (a - b).abs();
            if d > worst.0 {
                worst = (d, i);
            }
        }
        Ok(worst)
    }
}

/// On-disk chain definition: either an explicit matrix or a named model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainDefinition {
    Explicit { space: StateSpace, q: Vec<Vec<f64>> },
    Model { model: ModelDefinition },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelDefinition {
    Bdjump {
        lambda: f64,
        mu: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<i64>,
    },
}

impl ChainDefinition {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Build the generator. `default_window` is the half-width used for
    /// models that do not carry their own.
    pub fn realize(&self, default_window: i64) -> Result<GeneratorMatrix> {
        match self {
            ChainDefinition::Explicit { space, q } => generator_from_rows(q, *space),
            ChainDefinition::Model { model: ModelDefinition::Bdjump { lambda, mu, alpha, window } } => {
                let model = BdJumpModel::new(*lambda, *mu, *alpha)?;
                let m = window.unwrap_or(default_window);
                truncate_bdjump(&model, -m, m)
            }
        }
    }
}
