use thiserror::Error;

/// Errors raised while building geometry or solving slab systems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid time partition: {0}")]
    InvalidTimePartition(String),

    #[error("degenerate level set on element {element} of slab {slab}: {reason}")]
    DegenerateLevelSet {
        slab: usize,
        element: usize,
        reason: String,
    },

    #[error("degenerate cut on element {element} of slab {slab} at t={t}: spatial slope {slope:.3e} below threshold")]
    DegenerateCut {
        slab: usize,
        element: usize,
        t: f64,
        slope: f64,
    },

    #[error("geometry construction failed on element {element} of slab {slab} at t={t}: {reason}")]
    GeometryConstruction {
        slab: usize,
        element: usize,
        t: f64,
        reason: String,
    },

    #[error("root search did not converge near x={x} at t={t}: {reason}")]
    RootSearch { x: f64, t: f64, reason: String },

    #[error("preimage of x={x} at t={t} not found within element tolerance")]
    Preimage { x: f64, t: f64 },

    #[error("nonpositive mapping Jacobian {value:.3e} on element {element} of slab {slab}")]
    NonpositiveJacobian {
        slab: usize,
        element: usize,
        value: f64,
    },

    #[error("slab {slab}: domain does not intersect slab (empty active element set)")]
    EmptySlab { slab: usize },

    #[error("singular system in slab {slab} ({variant}): {reason}")]
    SingularSystem {
        slab: usize,
        variant: String,
        reason: String,
    },

    #[error("vanishing slice measure at t={t}")]
    VanishingSliceMeasure { t: f64 },

    #[error("{0}")]
    Config(String),

    #[error("eigenvalue probe failed: {0}")]
    EigenProbe(String),
}

pub type Result<T> = std::result::Result<T, Error>;
