use thiserror::Error;

/// Adaptive quadrature did not reach its tolerance.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("quadrature failed on [{lower}, {upper}]: {reason} (partial estimate {partial:e}, error estimate {error_estimate:e})")]
pub struct QuadratureError {
    pub lower: f64,
    pub upper: f64,
    pub partial: f64,
    pub error_estimate: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("log of weight undefined at x = {x} (weight vanishes there)")]
    Domain { x: f64 },
    #[error("weight overflows at x = {x} (log value {log_value})")]
    Overflow { x: f64, log_value: f64 },
    #[error("invalid weight: {0}")]
    Invalid(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<QuadratureError> for WeightError {
    fn from(e: QuadratureError) -> Self {
        WeightError::Kernel(KernelError::Quadrature(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("invalid construction parameters: {0}")]
    InvalidInput(String),
    #[error("majorant unbounded or non-finite near y = {y}")]
    Unbounded { y: f64 },
    #[error("majorant violated at {at}: majorant {majorant:e} < sampled value {value:e}; increase sampling density")]
    MajorantViolation { at: String, majorant: f64, value: f64 },
    #[error("step {step} too large: κ − Δ/2·b̃(y,y) = {margin:e} ≤ 0 at y = {y}; halve the step")]
    StepTooLarge { step: f64, y: f64, margin: f64 },
    #[error("Volterra residual {residual:e} exceeds tolerance {tolerance:e}; halve the step")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("solution overflowed at y = {y}")]
    Overflow { y: f64 },
    #[error("certificate violated at y = {worst_y}: ∫bω = {lhs:e} > κω(y)(1+tol) with κω(y) = {rhs:e}")]
    CertificateViolation { worst_y: f64, lhs: f64, rhs: f64 },
    #[error("no exponential weight within the float range: {0}")]
    SearchOverflow(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

impl From<KernelError> for BuildError {
    fn from(e: KernelError) -> Self {
        BuildError::Weight(WeightError::Kernel(e))
    }
}

impl From<QuadratureError> for BuildError {
    fn from(e: QuadratureError) -> Self {
        BuildError::from(KernelError::Quadrature(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid simulation input: {0}")]
    InvalidInput(String),
    #[error("rk4 step rejected after {halvings} halvings at t = {t}; the problem is stiff, use implicit_euler")]
    Stiff { halvings: usize, t: f64 },
    #[error("dense oracle refused: N = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}
