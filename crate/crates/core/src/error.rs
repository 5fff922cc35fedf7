use thiserror::Error;

/// Errors raised by geometry construction, the solvers and the asymptotic formulas.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("gap must be positive, got {0}")]
    NonPositiveGap(f64),

    #[error("gap profile undefined: upper body has order m={upper}, lower body m={lower}")]
    MismatchedOrder { upper: u32, lower: u32 },

    #[error("invalid meshing parameter: {0}")]
    InvalidMeshParameter(String),

    #[error("degenerate panel {index} (area {area:e})")]
    DegeneratePanel { index: usize, area: f64 },

    #[error("body {0} has no panels")]
    EmptyBody(u8),

    #[error("body {body} is not watertight: {detail}")]
    NotWatertight { body: u8, detail: String },

    #[error("panels {0} and {1} of different bodies overlap")]
    OverlappingPanels(usize, usize),

    #[error("point ({x}, {y}, {z}) lies inside body {body}")]
    PointInsideBody { x: f64, y: f64, z: f64, body: u8 },

    #[error("density has {got} entries, mesh has {expected} panels")]
    DensityLength { expected: usize, got: usize },

    #[error("matrix is singular at pivot {0}")]
    SingularMatrix(usize),

    #[error("{what} = {value} outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("capacitance signs violated: {0}")]
    SignViolation(String),

    #[error("eigenvalues of the rescaled capacitance matrix are complex (discriminant {0:e})")]
    ComplexEigenvalues(f64),

    #[error("bodies decouple (C̄21 = 0): eigenvector ratio undefined")]
    Decoupled,

    #[error("image-charge recursion does not converge: {0}")]
    NonConvergent(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("point outside the gap parameterization: {0}")]
    OutsideGap(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
