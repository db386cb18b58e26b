use std::path::PathBuf;

/// Errors surfaced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The kernel support must span at least three cells per axis,
    /// otherwise the discrete convolution is a poor approximation.
    #[error("mesh too coarse for kernel: ell = {ell}, max cell size = {h} (need ell >= 3h)")]
    MeshTooCoarse { ell: f64, h: f64 },

    /// A transport or diffusion step was asked to exceed its stability limit.
    #[error("time step rejected: {0}")]
    StepRejected(String),

    /// A non-finite value appeared in the solution.
    #[error("diverged: non-finite value in field `{field}` at step {step} (t = {t})")]
    Diverged { field: &'static str, step: u64, t: f64 },

    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }
}
