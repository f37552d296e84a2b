// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use crate::builder::CurveDocument;
use crate::error::Result;
use crate::metrics::comb_geometry;
use crate::point::{BoundingBox, Point2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgOptions {
    /// Polyline vertices per segment.
    pub samples_per_segment: usize,
    /// Draws the curvature comb at this scale.
    pub comb_scale: Option<f64>,
    pub comb_samples_per_segment: usize,
    /// Width of the output in pixels; the height follows the aspect ratio.
    pub width: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            samples_per_segment: 256,
            comb_scale: None,
            comb_samples_per_segment: 64,
            width: 800.0,
        }
    }
}

fn polyline(out: &mut String, pts: impl IntoIterator<Item = Point2>) {
    for (i, p) in pts.into_iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(out, "{cmd}{} {} ", p.x, p.y);
    }
}

/// Renders the curve as one polyline per segment, the interpolation points
/// and optionally the curvature comb. The y axis points up.
pub fn render_svg(doc: &CurveDocument, options: &SvgOptions) -> Result<String> {
    let n = options.samples_per_segment.max(2);
    let mut curves = Vec::with_capacity(doc.segments().len());
    for rec in doc.segments() {
        let pts = (0..n)
            .map(|j| rec.curve.evaluate(j as f64 / (n - 1) as f64))
            .collect::<Result<Vec<_>>>()?;
        curves.push(pts);
    }
    let comb = match options.comb_scale {
        Some(scale) if !doc.segments().is_empty() => Some(comb_geometry(doc, options.comb_samples_per_segment, scale)?),
        _ => None,
    };

    let all = curves
        .iter()
        .flatten()
        .copied()
        .chain(doc.points().iter().copied())
        .chain(comb.iter().flat_map(|c| c.tip_points.iter().copied()));
    let bb = BoundingBox::of(all).unwrap_or(BoundingBox {
        min: Point2::ZERO,
        max: Point2::new(1.0, 1.0),
    });
    let extent = bb.width().max(bb.height()).max(f64::MIN_POSITIVE);
    let margin = 0.05 * extent;
    let (x0, y0) = (bb.min.x - margin, bb.min.y - margin);
    let (w, h) = (bb.width() + 2.0 * margin, bb.height() + 2.0 * margin);
    let height = options.width * h / w;
    let stroke = extent / 400.0;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" viewBox="{x0} {} {w} {h}">"#,
        options.width,
        -(y0 + h),
    );
    let _ = writeln!(out, r#"<g transform="scale(1,-1)" fill="none" stroke-linecap="round">"#);
    if let Some(c) = &comb {
        let _ = write!(out, r#"<path class="comb" stroke="rgb(224,122,168)" stroke-width="{}" d=""#, stroke * 0.5);
        for (b, t) in c.base_points.iter().zip(&c.tip_points) {
            let _ = write!(out, "M{} {} L{} {} ", b.x, b.y, t.x, t.y);
        }
        let _ = writeln!(out, r#""/>"#);
        for tips in c.tip_points.chunks(c.samples_per_segment) {
            let mut d = String::new();
            polyline(&mut d, tips.iter().copied());
            let _ = writeln!(
                out,
                r#"<path class="comb-envelope" stroke="rgb(224,122,168)" stroke-width="{}" d="{}"/>"#,
                stroke * 0.5,
                d.trim_end()
            );
        }
    }
    for (i, pts) in curves.iter().enumerate() {
        let mut d = String::new();
        polyline(&mut d, pts.iter().copied());
        let _ = writeln!(
            out,
            r#"<path class="segment" data-index="{i}" stroke="rgb(32,32,32)" stroke-width="{stroke}" d="{}"/>"#,
            d.trim_end()
        );
    }
    for p in doc.points() {
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{}" cy="{}" r="{}" fill="rgb(208,32,32)" stroke="none"/>"#,
            p.x,
            p.y,
            stroke * 3.0
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    Ok(out)
}
