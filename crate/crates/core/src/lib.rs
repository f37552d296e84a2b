// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Interpolating piecewise Bézier curves whose curvature follows a parabola
//! on every segment.
//!
//! A [`CurveDocument`] holds the data points and the current curve. Points
//! are appended one at a time and each insertion re-optimizes only the last
//! few segments, so earlier parts of the curve never move.
//!
//! ```
//! use pkcurve::{ContinuityMode, CurveDocument, Point2};
//!
//! let mut doc = CurveDocument::new(ContinuityMode::C2);
//! for p in [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0]] {
//!     doc.insert_point(Point2::from(p)).unwrap();
//! }
//! assert_eq!(doc.segments().len(), 2);
//! ```

pub mod bezier;
pub mod builder;
pub mod continuity;
pub mod energy;
pub mod error;
pub mod io;
pub mod metrics;
pub mod point;
pub mod solver;

pub use bezier::BezierSegment;
pub use builder::{CurveDocument, DocumentSettings, SegmentRecord};
pub use continuity::{ContinuityKind, ContinuityMode, GeometricJointParams};
pub use energy::{EnergyWeights, ParabolaModel, QuadratureRule};
pub use error::{Error, Result};
pub use point::Point2;
pub use solver::SolverSettings;
