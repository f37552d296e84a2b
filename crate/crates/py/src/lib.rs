// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings: an editable curve document plus batch building.

use pkcurve_core::builder::{CurveDocument, DocumentSettings, EditReport};
use pkcurve_core::io::{render_svg, CurveFile, PointSetFile, SvgOptions};
use pkcurve_core::metrics::energy_report;
use pkcurve_core::{ContinuityMode, Error, Point2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_degenerate_input() || e.is_malformed() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn point(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

/// Indices of the segments an edit re-optimized.
fn changed(report: EditReport) -> Vec<usize> {
    report.changed_segment_indices
}

/// A curve under construction.
#[pyclass(module = "pkcurve")]
pub struct Document {
    inner: CurveDocument,
}

#[pymethods]
impl Document {
    #[new]
    #[pyo3(signature = (continuity = "C2", lambda_e = None, lambda_c = None))]
    fn new(continuity: &str, lambda_e: Option<f64>, lambda_c: Option<f64>) -> PyResult<Self> {
        let mode: ContinuityMode = continuity.parse().map_err(to_py)?;
        let mut settings = DocumentSettings::new(mode);
        if let Some(v) = lambda_e {
            settings.weights.lambda_e = v;
        }
        if let Some(v) = lambda_c {
            settings.weights.lambda_c = v;
        }
        Ok(Document {
            inner: CurveDocument::with_settings(settings).map_err(to_py)?,
        })
    }

    /// Parses a curve file.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = CurveFile::from_json(text).map_err(to_py)?;
        Ok(Document {
            inner: file.to_document().map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        CurveFile::from_document(&self.inner).and_then(|f| f.to_json()).map_err(to_py)
    }

    /// Appends a point; returns the indices of changed segments.
    fn insert(&mut self, py: Python<'_>, x: f64, y: f64) -> PyResult<Vec<usize>> {
        let doc = &mut self.inner;
        py.detach(|| doc.insert_point(point(x, y))).map(changed).map_err(to_py)
    }

    #[pyo3(name = "move")]
    fn move_point(&mut self, py: Python<'_>, index: usize, x: f64, y: f64) -> PyResult<Vec<usize>> {
        let doc = &mut self.inner;
        py.detach(|| doc.move_point(index, point(x, y))).map(changed).map_err(to_py)
    }

    fn close(&mut self, py: Python<'_>) -> PyResult<Vec<usize>> {
        let doc = &mut self.inner;
        py.detach(|| doc.close()).map(changed).map_err(to_py)
    }

    /// Returns `False` when there was nothing to undo.
    fn undo(&mut self) -> bool {
        self.inner.undo().is_some()
    }

    fn redo(&mut self) -> bool {
        self.inner.redo().is_some()
    }

    #[getter]
    fn continuity(&self) -> String {
        self.inner.mode().to_string()
    }

    #[getter]
    fn closed(&self) -> bool {
        self.inner.is_closed()
    }

    #[getter]
    fn revision(&self) -> u64 {
        self.inner.revision()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points().iter().map(|p| (p.x, p.y)).collect()
    }

    /// Control points of every segment.
    #[getter]
    fn segments(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner
            .segments()
            .iter()
            .map(|r| r.curve.control_points().iter().map(|p| (p.x, p.y)).collect())
            .collect()
    }

    /// Interpolation parameter of every segment.
    #[getter]
    fn parameters(&self) -> Vec<f64> {
        self.inner.segments().iter().map(|r| r.t).collect()
    }

    fn evaluate(&self, segment: usize, t: f64) -> PyResult<(f64, f64)> {
        let rec = self
            .inner
            .segments()
            .get(segment)
            .ok_or_else(|| PyValueError::new_err(format!("no segment {segment}")))?;
        let p = rec.curve.evaluate(t).map_err(to_py)?;
        Ok((p.x, p.y))
    }

    fn curvature(&self, segment: usize, t: f64) -> PyResult<f64> {
        let rec = self
            .inner
            .segments()
            .get(segment)
            .ok_or_else(|| PyValueError::new_err(format!("no segment {segment}")))?;
        rec.curve.curvature(t).map_err(to_py)
    }

    /// `(average, maximum)` parabolic energy over the segments.
    fn energy(&self) -> PyResult<(f64, f64)> {
        let r = energy_report(&self.inner).map_err(to_py)?;
        Ok((r.average_ep, r.max_ep))
    }

    #[pyo3(signature = (comb_scale = None))]
    fn svg(&self, comb_scale: Option<f64>) -> PyResult<String> {
        let options = SvgOptions {
            comb_scale,
            ..SvgOptions::default()
        };
        render_svg(&self.inner, &options).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.segments().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Document({}, points={}, segments={}, closed={})",
            self.inner.mode(),
            self.inner.points().len(),
            self.inner.segments().len(),
            self.inner.is_closed()
        )
    }
}

/// Builds a document from point-set JSON.
#[pyfunction]
fn build(py: Python<'_>, point_set: &str) -> PyResult<Document> {
    let file = PointSetFile::from_json(point_set).map_err(to_py)?;
    let outcome = py.detach(|| file.build()).map_err(to_py)?;
    Ok(Document {
        inner: outcome.document,
    })
}

#[pymodule]
fn pkcurve(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Document>()?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
