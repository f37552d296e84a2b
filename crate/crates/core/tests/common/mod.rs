// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures: seeded point corpora and reference evaluators.

#![allow(dead_code)]

use pkcurve::bezier::BezierSegment;
use pkcurve::builder::{CurveDocument, DocumentSettings, SegmentRecord};
use pkcurve::point::{BoundingBox, Point2};
use pkcurve::ContinuityMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points on a perturbed convex contour, rescaled to the unit box, in
/// counter-clockwise order.
pub fn contour_points(rng: &mut impl Rng, count: usize) -> Vec<Point2> {
    let aspect = rng.random_range(0.6..1.0);
    let tilt = rng.random_range(0.0..std::f64::consts::PI);
    let phase: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let amp = [rng.random_range(0.0..0.06), rng.random_range(0.0..0.04), rng.random_range(0.0..0.03)];
    let step = std::f64::consts::TAU / count as f64;
    let mut pts = Vec::with_capacity(count);
    for i in 0..count {
        let theta = step * (i as f64 + rng.random_range(-0.2..0.2));
        let mut r = 1.0;
        for (h, (&a, &p)) in amp.iter().zip(&phase).enumerate() {
            r += a * ((h as f64 + 2.0) * theta + std::f64::consts::TAU * p).cos();
        }
        let (x, y) = (r * theta.cos(), aspect * r * theta.sin());
        let (s, c) = tilt.sin_cos();
        pts.push(Point2::new(c * x - s * y, s * x + c * y));
    }
    normalize(&pts)
}

/// Wandering open polyline of points, rescaled to the unit box.
pub fn random_walk_points(rng: &mut impl Rng, count: usize) -> Vec<Point2> {
    let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut p = Point2::ZERO;
    let mut pts = vec![p];
    for _ in 1..count {
        heading += rng.random_range(-1.0..1.0);
        let len = rng.random_range(0.6..1.4);
        p += Point2::new(heading.cos(), heading.sin()) * len;
        pts.push(p);
    }
    normalize(&pts)
}

pub fn normalize(pts: &[Point2]) -> Vec<Point2> {
    let bb = BoundingBox::of(pts.iter().copied()).unwrap();
    let s = 1.0 / bb.width().max(bb.height());
    pts.iter().map(|&p| (p - bb.min) * s).collect()
}

pub fn build(mode: ContinuityMode, pts: &[Point2], closed: bool) -> CurveDocument {
    let mut doc = CurveDocument::with_settings(DocumentSettings::new(mode)).unwrap();
    for &p in pts {
        doc.insert_point(p).unwrap();
    }
    if closed {
        doc.close().unwrap();
    }
    doc
}

/// `Σ c_j B_j(t)` with Bernstein polynomials evaluated from their
/// closed form.
pub fn bernstein_sum(points: &[Point2], t: f64) -> Point2 {
    let k = points.len() - 1;
    let mut acc = Point2::ZERO;
    for (j, &c) in points.iter().enumerate() {
        let b = binom(k, j) * t.powi(j as i32) * (1.0 - t).powi((k - j) as i32);
        acc += c * b;
    }
    acc
}

pub fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn random_segment(rng: &mut impl Rng, degree: usize) -> BezierSegment {
    let pts = (0..=degree)
        .map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    BezierSegment::new(pts).unwrap()
}

/// Gently curving segment: control points advance in x with bounded
/// vertical offsets.
pub fn smooth_segment(rng: &mut impl Rng, degree: usize) -> BezierSegment {
    let pts = (0..=degree)
        .map(|j| {
            Point2::new(
                j as f64 / degree as f64 + rng.random_range(-0.05..0.05),
                rng.random_range(-0.25..0.25),
            )
        })
        .collect();
    BezierSegment::new(pts).unwrap()
}

pub fn doc_diagonal(doc: &CurveDocument) -> f64 {
    BoundingBox::of(doc.points().iter().copied()).unwrap().diagonal()
}

pub fn bits(rec: &SegmentRecord) -> Vec<u64> {
    let mut v: Vec<u64> = rec
        .curve
        .control_points()
        .iter()
        .flat_map(|p| [p.x.to_bits(), p.y.to_bits()])
        .collect();
    v.extend([rec.t.to_bits(), rec.parabola.a0.to_bits(), rec.parabola.a1.to_bits(), rec.parabola.a2.to_bits()]);
    v
}
