use thiserror::Error;

/// Which side of the central state a flux condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxDirection {
    /// Σ_{i<s} q_{i,s}
    IntoFromBelow,
    /// Σ_{j>s} q_{j,s}
    IntoFromAbove,
    /// Σ_{i<s} q_{s,i}
    OutToBelow,
    /// Σ_{j>s} q_{s,j}
    OutToAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

/// Every failure the library can report.
///
/// State arguments are semantic labels, not matrix indices.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // -- input validation --------------------------------------------------
    #[error("matrix is {rows}x{cols} but the state space has {states} states")]
    DimensionMismatch { rows: usize, cols: usize, states: usize },
    #[error("rate q[{k},{n}] is not finite")]
    NonFinite { k: i64, n: i64 },
    #[error("negative off-diagonal rate q[{k},{n}] = {value}")]
    NegativeOffDiagonal { k: i64, n: i64, value: f64 },
    #[error("positive diagonal rate q[{n},{n}] = {value}")]
    PositiveDiagonal { n: i64, value: f64 },
    #[error("row {k} sums to {residual:e}, not 0")]
    RowSumNonzero { k: i64, residual: f64 },
    #[error("window [{lo},{hi}] is too small (need lo < 0 < hi and hi - lo >= 2)")]
    WindowTooSmall { lo: i64, hi: i64 },
    #[error("window [{lo},{hi}] is not symmetric about 0")]
    AsymmetricWindow { lo: i64, hi: i64 },
    #[error("state {0} is not in the state space")]
    UnknownState(i64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time grid has no steps or a non-positive horizon")]
    EmptyGrid,
    #[error("uniformization tolerance {0:e} outside (0, 1e-3]")]
    BadTolerance(f64),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("time {t} is beyond the simulation horizon {t_max}")]
    TimeBeyondHorizon { t: f64, t_max: f64 },
    #[error("traces or matrices are on different grids")]
    GridMismatch,

    // -- structural ---------------------------------------------------------
    #[error("chain is reducible ({components} communicating classes)")]
    Reducible { components: usize },
    #[error("stationary mass of state {0} is zero")]
    ZeroStationaryMass(i64),
    #[error("central symmetry requires an even N (odd number of states)")]
    OddN,
    #[error("direct jump between {i} and {j} bypasses the central state")]
    CrossJump { i: i64, j: i64 },
    #[error("no probability flux at the central state ({0:?})")]
    NoFluxAtS(FluxDirection),
    #[error("subchain {0:?} the central state is reducible")]
    ReducibleSubchain(Side),
    #[error("start state is the central state")]
    StartIsCenter,
    #[error("start state is the target")]
    StartIsTarget,
    #[error("states {k} and {n} lie on opposite sides of the central state")]
    OppositeSides { k: i64, n: i64 },
    #[error("state {0} is the central state")]
    CenterState(i64),
    #[error("operation needs a symmetry certificate")]
    NoCertificate,
    #[error("closed form needs lambda == mu (got {lambda} vs {mu})")]
    AsymmetricRates { lambda: f64, mu: f64 },
    #[error("alpha = 0: no stationary law")]
    AlphaZero,

    // -- symmetry detection -------------------------------------------------
    #[error("ratio constraints inconsistent at ({k},{n}), log residual {residual:e}")]
    InconsistentRatios { k: i64, n: i64, residual: f64 },
    #[error("q[{k},{n}] and its reflection disagree on being zero")]
    StructuralZeroMismatch { k: i64, n: i64 },
    #[error("symmetry check failed: residual {residual:e} at ({k},{n})")]
    SymmetryViolation { k: i64, n: i64, residual: f64 },

    // -- numerical invariants -----------------------------------------------
    #[error("the two avoiding-probability forms disagree by {residual:e} at t = {t}")]
    FormsDisagree { residual: f64, t: f64 },
    #[error("weights are not harmonic: row {k} residual {residual:e}")]
    NonHarmonic { k: i64, residual: f64 },
    #[error("linear system is singular")]
    Singular,
}

impl Error {
    /// True when a computed mathematical identity failed, as opposed to the
    /// input being malformed or outside an operation's domain.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::FormsDisagree { .. } | Error::SymmetryViolation { .. } | Error::Singular)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
