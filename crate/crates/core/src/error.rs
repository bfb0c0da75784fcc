use thiserror::Error;

/// Errors produced by chart construction, the solver pipeline and the shell sweeps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("curve data not admissible: {0}")]
    NonAdmissibleCurve(String),

    #[error("frame integration too coarse: orthogonality drift {drift:.3e} exceeds 1e-10")]
    StepTooCoarse { drift: f64 },

    #[error("chart degenerate: 1 - s*kappa = {value:.3e} below floor {floor:.3e} at node (it={it}, is={is})")]
    ChartDegenerate {
        value: f64,
        floor: f64,
        it: usize,
        is: usize,
    },

    #[error("mean curvature bound violated: min |kappa_n| = {min_abs:.3e}")]
    MeanCurvatureVanishes { min_abs: f64 },

    #[error("incompatible right-hand side: curl^T curl residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    IncompatibleRhs { residual: f64, threshold: f64 },

    #[error("mollifier width {width} exceeds T/4 = {limit}")]
    WidthTooLarge { width: f64, limit: f64 },

    #[error("displacement is not an infinitesimal isometry: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotAnIsometry { residual: f64, tolerance: f64 },

    #[error("energy scaling violated: beta = {beta} must exceed beta_N = {beta_n} for order N = {order}")]
    ScalingViolation { beta: f64, beta_n: f64, order: usize },

    #[error("thickness too large: Id + t*Pi degenerates (h = {h}, h0 = {h0})")]
    ThicknessTooLarge { h: f64, h0: f64 },

    #[error("degenerate material model: {0}")]
    DegenerateModel(String),

    #[error("defect {0:.3e} below the numerical floor 1e-13")]
    BelowFloor(f64),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
