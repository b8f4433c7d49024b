//! Multivariate time-series analytics: a small SQL dialect for declaring
//! series, monitoring views and parameter-learning events, a compiler from
//! learning events to a constrained optimization model, solvers for the
//! resulting peak-demand problem, and a monitor that applies learned
//! parameters to incoming data.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the workspace and CLI use.

pub mod compiler;
pub mod dialect;
pub mod monitor;
pub mod scalar;
pub mod solver;
pub mod timeseries;
pub mod workspace;

pub use scalar::Scalar;
pub use timeseries::{CalendarTable, PeriodIndex, TimeIndex};

pub type TimeSeries = timeseries::TimeSeries<f64>;
pub type TimeSeries32 = timeseries::TimeSeries<f32>;
pub type DecisionParameterTable = timeseries::DecisionParameterTable<f64>;
pub type GroundInstance = compiler::GroundInstance<f64>;
pub type GroundInstance32 = compiler::GroundInstance<f32>;
pub type Solution = solver::Solution<f64>;
pub type Solution32 = solver::Solution<f32>;
pub type Evaluation = solver::Evaluation<f64>;
pub type MonitoringRule = monitor::MonitoringRule<f64>;
pub type Recommendation = monitor::Recommendation<f64>;
