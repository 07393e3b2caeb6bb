//! Symbolic tensor calculus on coordinate charts and verification of
//! generalised Ricci soliton equations on (almost) contact metric manifolds.

pub mod chart;
pub mod check;
pub mod contact;
pub mod expr;
pub mod fit;
pub mod manifest;
pub mod metric;
pub mod params;
pub mod report;
pub mod scalar;
pub mod soliton;
pub mod tensor;

pub use chart::{Chart, Interval, Point, Sampling};
pub use expr::{parse, Expr};
pub use metric::MetricField;
pub use params::ParameterSet;
pub use scalar::Scalar;

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
