use thiserror::Error;

pub type Result<T> = std::result::Result<T, Lap3dError>;

#[derive(Debug, Error)]
pub enum Lap3dError {
    #[error("symbol parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trigonometric symbols have no principal part")]
    NoPrincipalPart,

    #[error("no growth radius R <= 2^16 found for constant {c}")]
    GrowthRadiusNotFound { c: f64 },

    #[error("|grad p| = {norm:e} below 1e-10 at {xi:?}")]
    DegenerateGradient { xi: [f64; 3], norm: f64 },

    #[error("Newton correction diverged near {xi:?}")]
    CorrectionDiverged { xi: [f64; 3] },

    #[error("|grad p x grad K| = {norm:e} below 1e-8 at {xi:?}")]
    RankDeficient { xi: [f64; 3], norm: f64 },

    #[error("no sample of the box lies in p^-1(I)")]
    EmptyDomain,

    #[error("Newton projection onto the level set stalled at {xi:?}")]
    ProjectionFailed { xi: [f64; 3] },

    #[error("level set does not cross the box")]
    EmptySurface,

    #[error("radius {radius} exceeds the anti-aliasing cap {cap}")]
    ResolutionCap { radius: f64, cap: f64 },

    #[error("profile verification failed: {0}")]
    VerificationFailed(String),

    #[error("frequency {xi:?} outside the FFT band")]
    FrequencyOutOfRange { xi: [f64; 3] },

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Lap3dError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
