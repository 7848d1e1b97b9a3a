use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the model, simulator, solvers and planners.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model constant or argument is outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// The insulin schedule violates an ordering or sign constraint.
    InvalidSchedule(&'static str),
    /// `E/g_inf ≤ G`: the steady target needs a negative basal rate.
    NonPositiveBasal { target: f64, ceiling: f64 },
    /// `E ≤ λ·G`: no nonnegative basal keeps glucose above the floor.
    InfeasibleFloor { floor: f64, ceiling: f64 },
    /// The unit bolus response vanishes at the requested time.
    DegenerateResponse { elapsed: f64 },
    /// An event time or the horizon is not a multiple of the step.
    GridMisalignment { time: f64, dt: f64 },
    /// Glucose left the finite range during integration.
    NonFinite { time: f64 },
    /// The trace has no samples.
    EmptyTrace,
    /// The floor lies above the glucose level at delivery, or below what
    /// the no-bolus response already reaches.
    InfeasibleLambda { floor: f64, level: f64 },
    /// Doubling the bolus up to the cap never pushed glucose below the floor.
    BracketFailure { cap: f64 },
    /// The extremum used by a formula is not a stationary point.
    NotStationary { time: f64, slope: f64 },
    /// The trace has no interior global maximum distinct from its minimum.
    NoInteriorMaximum,
    /// The balance function does not change sign over the bracket.
    NoBracket { lo: f64, hi: f64 },
    /// Two traces never diverge.
    IdenticalTraces,
    /// Two traces do not share a time grid.
    GridMismatch,
    /// The peak did not strictly increase between two floors.
    SeesawViolation { lower: (f64, f64), upper: (f64, f64) },
    /// A plan was requested with no delivery times.
    NoDeliveryTimes,
    /// The timing search narrowed to adjacent delivery times at the finest
    /// step without either one passing the optimality check.
    Uncertified { lo: f64, hi: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for `{name}`")
            }
            Error::InvalidSchedule(msg) => write!(f, "invalid schedule: {msg}"),
            Error::NonPositiveBasal { target, ceiling } => write!(
                f,
                "steady target {target} mg/dl needs a negative basal rate (must stay below E/G = {ceiling})"
            ),
            Error::InfeasibleFloor { floor, ceiling } => write!(
                f,
                "floor {floor} mg/dl is not sustainable (must stay below E/G = {ceiling})"
            ),
            Error::DegenerateResponse { elapsed } => {
                write!(f, "unit bolus response is zero {elapsed} min after delivery")
            }
            Error::GridMisalignment { time, dt } => {
                write!(f, "time {time} is not on the grid of step {dt}")
            }
            Error::NonFinite { time } => write!(f, "glucose became non-finite at t = {time}"),
            Error::EmptyTrace => f.write_str("trace is empty"),
            Error::InfeasibleLambda { floor, level } => write!(
                f,
                "floor {floor} mg/dl is not attainable by a nonnegative bolus (reference level {level} mg/dl)"
            ),
            Error::BracketFailure { cap } => {
                write!(f, "no bolus up to {cap} drives glucose below the floor")
            }
            Error::NotStationary { time, slope } => {
                write!(f, "extremum at t = {time} is not stationary (slope {slope})")
            }
            Error::NoInteriorMaximum => f.write_str("trace has no interior global maximum"),
            Error::NoBracket { lo, hi } => write!(
                f,
                "balance of side maxima keeps its sign on [{lo}, {hi}] and no two-minimum trace was found"
            ),
            Error::IdenticalTraces => f.write_str("traces never diverge"),
            Error::GridMismatch => f.write_str("traces do not share a time grid"),
            Error::SeesawViolation { lower, upper } => write!(
                f,
                "peak did not increase with the floor: (λ={}, γ={}) then (λ={}, γ={})",
                lower.0, lower.1, upper.0, upper.1
            ),
            Error::NoDeliveryTimes => f.write_str("no delivery times given"),
            Error::Uncertified { lo, hi } => write!(
                f,
                "no delivery time in [{lo}, {hi}] passed the optimality check at the finest step"
            ),
        }
    }
}

impl core::error::Error for Error {}
