use core::fmt;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid was constructed with too few nodes or a non-positive horizon.
    InvalidGrid(&'static str),
    /// Two fields or paths live on different grids.
    GridMismatch,
    /// A NaN or infinity was found in an input.
    NonFinite(&'static str),
    /// Simpson's rule needs an odd number of nodes.
    EvenNodeCount(usize),
    /// An integrator produced a non-finite state at time `t`.
    NonFiniteState { t: f64 },
    /// Fewer samples than an operation requires.
    TooFewSamples { needed: usize, got: usize },
    /// A kernel argument fell outside `[0, 1]`.
    OutOfDomain { value: f64 },
    /// Only derivative orders 0, 1 and 2 are available.
    DerivativeOrder(u8),
    /// A linear system could not be solved.
    SingularSystem,
    /// Two landmarks came closer than the separation threshold.
    Collision { t: f64, separation: f64 },
    /// The relative Hamiltonian drift exceeded the configured bound.
    HamiltonianDrift { relative: f64 },
    /// A reconstructed flow lost monotonicity in `x`.
    NonMonotoneFlow { t: f64 },
    /// `exp(∫q)` would overflow.
    Overflow { max_exponent: f64 },
    /// A map expected to be strictly increasing is not.
    NonMonotone,
    /// The constraint residuals drifted beyond tolerance without repair.
    ConstraintDrift { t: f64, residual: f64 },
    /// A velocity field does not satisfy the clamped boundary conditions.
    NotClamped,
    /// The target `(μ, ν)` violates `(∂ₜ√μ)² ≤ ν` at a grid cell.
    InfeasibleTarget { t: f64, x: f64 },
    /// A reparametrization needs the geodesic beyond the integrated horizon.
    HorizonExceeded { needed: f64, available: f64 },
    /// A reparametrization is not increasing.
    NonMonotoneReparametrization,
    /// A measure density is negative somewhere.
    NegativeDensity,
    /// A weight function is not strictly positive.
    NonPositiveWeight,
    /// A defect measure does not vanish at `t = 0`.
    NonzeroInitialDefect,
    /// The path has a nonzero initial velocity.
    NonzeroInitialVelocity { norm: f64 },
    /// A generic precondition failure.
    Precondition(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::GridMismatch => write!(f, "fields are defined on different grids"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::EvenNodeCount(n) => {
                write!(f, "Simpson's rule needs an odd node count, got {n}")
            }
            Error::NonFiniteState { t } => write!(f, "integrator produced a non-finite state at t = {t}"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::OutOfDomain { value } => write!(f, "argument {value} outside [0, 1]"),
            Error::DerivativeOrder(k) => write!(f, "derivative order {k} not available (max 2)"),
            Error::SingularSystem => write!(f, "singular linear system"),
            Error::Collision { t, separation } => {
                write!(f, "landmark collision at t = {t} (separation {separation:e})")
            }
            Error::HamiltonianDrift { relative } => {
                write!(f, "relative Hamiltonian drift {relative:e} exceeds tolerance")
            }
            Error::NonMonotoneFlow { t } => {
                write!(f, "flow lost monotonicity at t = {t}; refine the discretization")
            }
            Error::Overflow { max_exponent } => {
                write!(f, "exp overflow: cumulative integral of q reaches {max_exponent}")
            }
            Error::NonMonotone => write!(f, "map is not strictly increasing"),
            Error::ConstraintDrift { t, residual } => {
                write!(f, "constraint residual {residual:e} at t = {t} exceeds tolerance")
            }
            Error::NotClamped => write!(f, "velocity field is not clamped at the boundary"),
            Error::InfeasibleTarget { t, x } => {
                write!(f, "(d/dt sqrt(mu))^2 > nu at (t, x) = ({t}, {x})")
            }
            Error::HorizonExceeded { needed, available } => {
                write!(f, "reparametrization needs geodesic time {needed}, only {available} integrated")
            }
            Error::NonMonotoneReparametrization => write!(f, "reparametrization is not increasing"),
            Error::NegativeDensity => write!(f, "negative measure density"),
            Error::NonPositiveWeight => write!(f, "weight must be strictly positive"),
            Error::NonzeroInitialDefect => write!(f, "defect measure must vanish at t = 0"),
            Error::NonzeroInitialVelocity { norm } => {
                write!(f, "initial velocity must vanish (norm {norm:e})")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
