use thiserror::Error;

/// Errors raised while evaluating groups, chart changes and connection fields.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A function produced a NaN or infinite value.
    #[error("numerical failure in {context}: non-finite value at coordinate {coordinate:?}")]
    NumericalFailure {
        context: String,
        coordinate: Option<usize>,
    },

    /// A point left the validity region of a global chart.
    #[error("chart exit in {chart}: point {point:?} is outside the chart domain")]
    ChartExit { chart: String, point: Vec<f64> },

    /// Integration left the group chart; the trajectory up to the exit is kept.
    #[error("transport left the chart of {chart} at t = {time}")]
    TransportChartExit {
        chart: String,
        time: f64,
        trajectory: Vec<(f64, Vec<f64>)>,
    },

    /// A Jacobian block could not be inverted reliably.
    #[error("singular jacobian block {block}: condition number {condition:e}")]
    SingularJacobian { block: String, condition: f64 },

    /// The LGFB connection supplied to a construction failed validation.
    #[error("connection field is not a Lie group fiber bundle connection: {reason}")]
    InvalidEta { reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid domain box: {0}")]
    InvalidBox(String),

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn non_finite(context: impl Into<String>, coordinate: Option<usize>) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            coordinate,
        }
    }

    pub fn is_chart_exit(&self) -> bool {
        matches!(self, Error::ChartExit { .. } | Error::TransportChartExit { .. })
    }
}
