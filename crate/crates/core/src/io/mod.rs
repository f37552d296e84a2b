// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON point-set and curve files, and SVG export.
//!
//! Floats are written in their shortest round-trip decimal form, so reading
//! a written file reproduces every coordinate bitwise.

mod svg;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bezier::BezierSegment;
use crate::builder::{CurveDocument, DocumentSettings, EditReport, SegmentRecord, Topology};
use crate::continuity::{ContinuityMode, GeometricJointParams};
use crate::energy::{EnergyWeights, ParabolaModel, QuadratureRule};
use crate::error::{Error, Result};
use crate::metrics::{energy_report, EnergyReport};
use crate::point::Point2;
use crate::solver::SolverSettings;

pub use svg::{render_svg, SvgOptions};

/// Current file format version.
pub const FORMAT_VERSION: u32 = 1;

/// Input of a batch build: points in insertion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetFile {
    pub version: u32,
    pub topology: Topology,
    pub continuity: ContinuityMode,
    pub points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<EnergyWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings>,
}

/// Result of [`PointSetFile::build`].
#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub document: CurveDocument,
    /// Wall time of each insertion (and of the closure, if any).
    pub edit_times: Vec<Duration>,
    pub reports: Vec<EditReport>,
}

impl PointSetFile {
    pub fn new(topology: Topology, continuity: ContinuityMode, points: Vec<Point2>) -> Self {
        PointSetFile {
            version: FORMAT_VERSION,
            topology,
            continuity,
            points,
            weights: None,
            solver: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PointSetFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        PointSetFile::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.points.len() < 3 {
            return Err(Error::Format(format!("need at least 3 points, got {}", self.points.len())));
        }
        if let Some(i) = self.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Format(format!("point {i} is not finite")));
        }
        self.settings().validate()
    }

    pub fn settings(&self) -> DocumentSettings {
        let mut s = DocumentSettings::new(self.continuity);
        if let Some(w) = self.weights {
            s.weights = w;
        }
        if let Some(solver) = self.solver {
            s.solver = solver;
        }
        s
    }

    /// Inserts the points in file order and closes if requested.
    pub fn build(&self) -> Result<BuildOutcome> {
        self.validate()?;
        let mut document = CurveDocument::with_settings(self.settings())?;
        let mut edit_times = Vec::new();
        let mut reports = Vec::new();
        let mut timed = |doc: &mut CurveDocument, f: &dyn Fn(&mut CurveDocument) -> Result<EditReport>| {
            let start = Instant::now();
            let r = f(doc)?;
            edit_times.push(start.elapsed());
            reports.push(r);
            Ok::<(), Error>(())
        };
        for &p in &self.points {
            timed(&mut document, &|d| d.insert_point(p))?;
        }
        if self.topology == Topology::Closed {
            timed(&mut document, &|d| d.close())?;
        }
        Ok(BuildOutcome {
            document,
            edit_times,
            reports,
        })
    }
}

/// One serialized segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub degree: usize,
    pub control_points: Vec<Point2>,
    pub t_interp: f64,
    pub t_init: f64,
    pub point_index: usize,
    pub parabola: ParabolaModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<GeometricJointParams>,
}

/// A built curve: the document's points, segments and solve state, plus
/// its energy report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub version: u32,
    pub continuity: ContinuityMode,
    pub topology: Topology,
    pub weights: EnergyWeights,
    pub quadrature: QuadratureRule,
    pub solver: SolverSettings,
    pub points: Vec<Point2>,
    pub segments: Vec<SegmentEntry>,
    pub energy_report: EnergyReport,
}

impl CurveFile {
    pub fn from_document(doc: &CurveDocument) -> Result<Self> {
        let s = doc.settings();
        Ok(CurveFile {
            version: FORMAT_VERSION,
            continuity: s.mode,
            topology: doc.topology(),
            weights: s.weights,
            quadrature: s.rule,
            solver: s.solver,
            points: doc.points().to_vec(),
            segments: doc
                .segments()
                .iter()
                .map(|r| SegmentEntry {
                    degree: r.curve.degree(),
                    control_points: r.curve.control_points().to_vec(),
                    t_interp: r.t,
                    t_init: r.t_init,
                    point_index: r.point_index,
                    parabola: r.parabola,
                    joint: r.joint_in,
                })
                .collect(),
            energy_report: energy_report(doc)?,
        })
    }

    pub fn to_document(&self) -> Result<CurveDocument> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        let settings = DocumentSettings {
            mode: self.continuity,
            weights: self.weights,
            rule: self.quadrature,
            solver: self.solver,
        };
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, e) in self.segments.iter().enumerate() {
            if e.control_points.len() != e.degree + 1 {
                return Err(Error::Format(format!(
                    "segment {i}: degree {} with {} control points",
                    e.degree,
                    e.control_points.len()
                )));
            }
            segments.push(SegmentRecord {
                curve: BezierSegment::new(e.control_points.clone())?,
                t: e.t_interp,
                t_init: e.t_init,
                point_index: e.point_index,
                parabola: e.parabola,
                joint_in: e.joint,
            });
        }
        CurveDocument::from_parts(settings, self.points.clone(), segments, self.topology)
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        CurveFile::from_json(&fs::read_to_string(path)?)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
