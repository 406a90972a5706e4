use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polyline: fewer than 2 distinct points")]
    DegeneratePolyline,

    #[error(
        "frame transport failed at centerline index {index}: consecutive tangents are anti-parallel (dot = {dot:.6})"
    )]
    FrameTransport { index: usize, dot: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid radius {0} (must be > 0)")]
    InvalidRadius(f64),

    #[error("inconsistent cross-sections: section {index} has {found} ring points, expected {expected}")]
    InconsistentSections {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("arch curve {curve} does not intersect the mesh")]
    CurveMissesMesh { curve: usize },

    #[error("arch curve {curve} removes a quad set whose boundary is not a single closed loop ({loops} loops, {pinched} pinched vertices)")]
    NonSimpleHole { curve: usize, loops: usize, pinched: usize },

    #[error("degenerate element {index}: {reason}")]
    DegenerateElement { index: usize, reason: String },

    #[error("fit diverged at iteration {iteration}: non-finite loss or gradient")]
    Divergence { iteration: usize },

    #[error("vertex {vertex} has no incident quads")]
    OrphanVertex { vertex: usize },

    #[error("inverted or self-intersecting hexahedra (first offenders: {elements:?}, {count} total)")]
    SelfIntersection { elements: Vec<usize>, count: usize },

    #[error("unknown set '{0}'")]
    UnknownSet(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("reactions do not balance the applied load (relative error {0:.3e})")]
    Equilibrium(f64),

    #[error("invalid stress tensor: asymmetry {0:.3e} exceeds tolerance")]
    InvalidTensor(f64),

    #[error("invalid region breakpoints {0:?}")]
    InvalidBreakpoints(Vec<usize>),

    #[error("invalid group tag '{0}' (expected 'control' or 'aneurysm')")]
    InvalidGroup(String),

    #[error("corrupt mask: {0}")]
    CorruptMask(String),

    #[error("mask is uniform; no isosurface at level {0}")]
    NoIsosurface(f64),

    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of an iterative numerical method rather than bad input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. } | Error::SolverFailure { .. } | Error::SingularSystem(_) | Error::Equilibrium(_)
        )
    }
}
