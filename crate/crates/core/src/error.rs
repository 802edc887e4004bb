use thiserror::Error;

/// Errors raised by the simulation and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} unsupported: d >= 3 is required")]
    Dimension(usize),

    #[error("base shell width h0 = {0} is too small (need h0 >= 4)")]
    BaseWidth(f64),

    #[error("negative or non-finite radius {0}")]
    Radius(f64),

    #[error("site count {count} exceeds the memory budget of {budget} sites")]
    Budget { count: u64, budget: u64 },

    #[error("inward neighbor undefined at the origin")]
    Origin,

    #[error("point at squared norm {norm_sq} lies beyond shell coverage (outer edge {edge})")]
    Coverage { norm_sq: i64, edge: f64 },

    #[error("walk exceeded the step cap of {0} steps")]
    StepCap(u64),

    #[error("solver did not converge: residual {residual:e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("coupling invariant `{invariant}` violated (repro: {bundle})")]
    CouplingInvariant { invariant: String, bundle: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
