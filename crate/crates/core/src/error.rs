// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the curve kernel, the solver and the document builder.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or index fell outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// ‖P′(t)‖ is at or below the segment's speed epsilon.
    #[error("degenerate speed at t = {t}")]
    DegenerateSpeed { t: f64 },

    /// Mismatched lengths or degrees.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("argument error: {0}")]
    Argument(String),

    /// Coincident or otherwise unusable input points.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Feasibility restoration could not satisfy the equality constraints.
    #[error("infeasible constraint system (worst residual {residual:e})")]
    Infeasible { residual: f64 },

    /// The objective evaluated to NaN.
    #[error("numerical failure: objective is NaN (unknown index {index})")]
    Numerical { index: usize },

    /// Optimizing the window over `segments` failed.
    #[error("solver failed on window {segments:?}: {source}")]
    Solver { segments: Vec<usize>, source: Box<Error> },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// Malformed point-set or curve file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the input itself was unusable, as opposed to malformed or
    /// defeating the solver.
    pub fn is_degenerate_input(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::DegenerateSpeed { .. } | Error::Argument(_) | Error::DegenerateInput(_)
        )
    }

    pub fn is_malformed(&self) -> bool {
        matches!(self, Error::Format(_) | Error::Json(_) | Error::Io(_) | Error::Shape(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
