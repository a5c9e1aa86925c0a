//! Solver and well-posedness analyzer for the steady transport equation
//! `z + W u·∇z = l` on a planar domain, with `z = 0` on the inflow boundary.
//!
//! The low-level kernels in [`num`] are generic over the scalar type; the
//! problem-level modules work in `f64` through the aliases below.

pub mod characteristics;
pub mod classify;
pub mod config;
pub mod expr;
pub mod geometry;
pub mod localize;
pub mod num;
pub mod oracles;
pub mod regularity;

/// Planar vector in `f64`.
pub type Vec2 = num::vec2::Vec2<f64>;
/// Planar point in `f64`.
pub type Point2 = num::vec2::Vec2<f64>;
/// Vector in `f32`, for callers that only need single precision kernels.
pub type Vec2f32 = num::vec2::Vec2<f32>;
/// Adaptive quadrature result in `f64`.
pub type Quad = num::quad::Quad<f64>;

pub use characteristics::{Exit, TraceOptions, TraceResult, TransportProblem};
pub use classify::{AssumptionReport, BoundaryClassification, ExceptionalSet, Label, Verdict};
pub use expr::{Expr, ScalarField, VectorField2};
pub use geometry::{Domain, Edge};

/// Version stamped into every report and CSV header.
pub const SCHEMA_VERSION: u32 = 1;
