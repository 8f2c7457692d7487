use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("fields were sampled on different charts")]
    ChartMismatch,
    #[error("stencil does not fit: {0}")]
    StencilTooWide(String),
    #[error("region outside chart interior: {0}")]
    RegionOutside(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("conformality defect {defect:.3e} exceeds {threshold:.1e}")]
    NotConformal { defect: f64, threshold: f64 },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("curl defect {defect:.3e} exceeds tolerance {tolerance:.3e} for {field}")]
    CurlDefect {
        field: &'static str,
        defect: f64,
        tolerance: f64,
    },
    #[error("invalid curvature tensor: {0}")]
    CurvatureSymmetry(String),
    #[error("outside metric validity ball: {0}")]
    OutsideValidity(String),
    #[error("area {area:.6e} outside admissible band around target {target:.6e}")]
    AreaBand { area: f64, target: f64 },
    #[error("line search failed after {0} halvings")]
    LineSearch(usize),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
