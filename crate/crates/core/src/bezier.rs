// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Polynomial Bézier segments: evaluation, hodographs, curvature, degree
//! elevation and subdivision.

use crate::error::{Error, Result};
use crate::point::{BoundingBox, Point2};

/// Relative factor applied to the control-polygon bounding-box diagonal to
/// obtain the smallest speed at which curvature is still reported.
pub const SPEED_EPSILON_FACTOR: f64 = 1e-9;

const INLINE_POINTS: usize = 8;

/// One polynomial Bézier segment, `P(t) = Σ c_j B_j^k(t)` for `t ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BezierSegment {
    points: Vec<Point2>,
}

/// Curvature and speed at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSample {
    pub t: f64,
    pub kappa: f64,
    pub speed: f64,
}

impl BezierSegment {
    /// Builds a segment from its control points (degree = `len - 1`).
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Shape("a Bézier segment needs at least one control point".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Argument(format!("control point {i} is not finite")));
        }
        Ok(BezierSegment { points })
    }

    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of(self.points.iter().copied()).expect("segment is never empty")
    }

    /// Speed threshold below which curvature is considered undefined.
    pub fn speed_epsilon(&self) -> f64 {
        SPEED_EPSILON_FACTOR * self.bounding_box().diagonal()
    }

    /// Point on the curve, by the de Casteljau recursion.
    pub fn evaluate(&self, t: f64) -> Result<Point2> {
        check_unit(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> Point2 {
        if t == 0.0 {
            return self.first();
        }
        if t == 1.0 {
            return self.last();
        }
        de_casteljau(&self.points, t)
    }

    /// The `order`-th hodograph, whose evaluation is the `order`-th derivative.
    pub fn derivative_segment(&self, order: usize) -> Result<BezierSegment> {
        if order == 0 || order > self.degree() {
            return Err(Error::Domain(format!(
                "derivative order {order} outside 1..={}",
                self.degree()
            )));
        }
        let mut pts = self.points.clone();
        for _ in 0..order {
            let k = (pts.len() - 1) as f64;
            pts = pts.windows(2).map(|w| (w[1] - w[0]) * k).collect();
        }
        Ok(BezierSegment { points: pts })
    }

    /// First and second derivative at `t` (zero vectors where the degree is too low).
    pub fn derivatives(&self, t: f64) -> (Point2, Point2) {
        let k = self.degree();
        if k == 0 {
            return (Point2::ZERO, Point2::ZERO);
        }
        let d1: Vec<Point2> = self
            .points
            .windows(2)
            .map(|w| (w[1] - w[0]) * k as f64)
            .collect();
        let first = eval_points(&d1, t);
        if k == 1 {
            return (first, Point2::ZERO);
        }
        let d2: Vec<Point2> = d1
            .windows(2)
            .map(|w| (w[1] - w[0]) * (k - 1) as f64)
            .collect();
        (first, eval_points(&d2, t))
    }

    /// Signed curvature `det(P′, P″) / ‖P′‖³`.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        self.curvature_sample(t).map(|s| s.kappa)
    }

    fn curvature_sample(&self, t: f64) -> Result<CurvatureSample> {
        let (d1, d2) = self.derivatives(t);
        let speed = d1.norm();
        if !(speed > self.speed_epsilon()) {
            return Err(Error::DegenerateSpeed { t });
        }
        Ok(CurvatureSample {
            t,
            kappa: d1.cross(d2) / (speed * speed * speed),
            speed,
        })
    }

    /// Exact re-representation at degree `k + 1`.
    pub fn elevate_degree(&self) -> BezierSegment {
        let k = self.degree();
        let n = (k + 1) as f64;
        let mut out = Vec::with_capacity(k + 2);
        out.push(self.points[0]);
        for l in 1..=k {
            let a = l as f64 / n;
            out.push(self.points[l - 1] * a + self.points[l] * (1.0 - a));
        }
        out.push(self.points[k]);
        BezierSegment { points: out }
    }

    /// Elevates repeatedly until the requested degree is reached.
    pub fn elevate_to(&self, degree: usize) -> Result<BezierSegment> {
        if degree < self.degree() {
            return Err(Error::Domain(format!(
                "cannot elevate degree {} to {degree}",
                self.degree()
            )));
        }
        let mut seg = self.clone();
        while seg.degree() < degree {
            seg = seg.elevate_degree();
        }
        Ok(seg)
    }

    /// Splits at `z ∈ (0, 1)`; the left piece reparameterizes `[0, z]`, the
    /// right piece `[z, 1]`.
    pub fn subdivide(&self, z: f64) -> Result<(BezierSegment, BezierSegment)> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::Domain(format!("subdivision parameter {z} not in (0, 1)")));
        }
        let left = left_part(&self.points, z);
        let reversed: Vec<Point2> = self.points.iter().rev().copied().collect();
        let mut right = left_part(&reversed, 1.0 - z);
        right.reverse();
        // the split point is shared bit-for-bit
        right[0] = left[left.len() - 1];
        Ok((BezierSegment { points: left }, BezierSegment { points: right }))
    }

    /// Curvature at `count` uniformly spaced parameters `j / (count - 1)`.
    pub fn sample_curvature(&self, count: usize) -> Result<Vec<CurvatureSample>> {
        if count < 2 {
            return Err(Error::Domain(format!("sample count {count} < 2")));
        }
        let last = (count - 1) as f64;
        (0..count)
            .map(|j| self.curvature_sample(j as f64 / last))
            .collect()
    }

    /// Same segment traversed backwards.
    pub fn reversed(&self) -> BezierSegment {
        BezierSegment {
            points: self.points.iter().rev().copied().collect(),
        }
    }

    /// Applies `f` to every control point.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> BezierSegment {
        BezierSegment {
            points: self.points.iter().map(|&p| f(p)).collect(),
        }
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("parameter {t} not in [0, 1]")))
    }
}

fn eval_points(points: &[Point2], t: f64) -> Point2 {
    if points.len() == 1 {
        return points[0];
    }
    de_casteljau(points, t)
}

fn de_casteljau(points: &[Point2], t: f64) -> Point2 {
    let n = points.len();
    if n <= INLINE_POINTS {
        let mut buf = [Point2::ZERO; INLINE_POINTS];
        buf[..n].copy_from_slice(points);
        reduce(&mut buf[..n], t)
    } else {
        let mut buf = points.to_vec();
        reduce(&mut buf, t)
    }
}

fn reduce(buf: &mut [Point2], t: f64) -> Point2 {
    let n = buf.len();
    for level in 1..n {
        for j in 0..n - level {
            buf[j] = buf[j].lerp(buf[j + 1], t);
        }
    }
    buf[0]
}

/// Control points of the `[0, z]` piece: first entry of each de Casteljau level.
fn left_part(points: &[Point2], z: f64) -> Vec<Point2> {
    let n = points.len();
    let mut buf = points.to_vec();
    let mut out = Vec::with_capacity(n);
    out.push(buf[0]);
    for level in 1..n {
        for j in 0..n - level {
            buf[j] = buf[j].lerp(buf[j + 1], z);
        }
        out.push(buf[0]);
    }
    out
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Bernstein basis values `B_j^k(t)` for `j = 0..=k`.
pub fn bernstein(k: usize, t: f64) -> Vec<f64> {
    let s = 1.0 - t;
    (0..=k)
        .map(|j| binomial(k, j) * t.powi(j as i32) * s.powi((k - j) as i32))
        .collect()
}

/// Derivative of the Bernstein basis, `d/dt B_j^k(t)`.
pub fn bernstein_derivative(k: usize, t: f64) -> Vec<f64> {
    if k == 0 {
        return vec![0.0];
    }
    let lower = bernstein(k - 1, t);
    let kf = k as f64;
    (0..=k)
        .map(|j| {
            let a = if j > 0 { lower[j - 1] } else { 0.0 };
            let b = if j < k { lower[j] } else { 0.0 };
            kf * (a - b)
        })
        .collect()
}

/// Second derivative of the Bernstein basis.
pub fn bernstein_second_derivative(k: usize, t: f64) -> Vec<f64> {
    if k < 2 {
        return vec![0.0; k + 1];
    }
    let lower = bernstein(k - 2, t);
    let c = (k * (k - 1)) as f64;
    (0..=k)
        .map(|j| {
            let at = |i: isize| -> f64 {
                if i < 0 || i as usize > k - 2 {
                    0.0
                } else {
                    lower[i as usize]
                }
            };
            let j = j as isize;
            c * (at(j - 2) - 2.0 * at(j - 1) + at(j))
        })
        .collect()
}

/// Basis, first and second derivative values of degree `k` at a fixed node set.
///
/// Row `i` holds the `k + 1` values at node `i`.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub value: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

impl BasisTable {
    pub fn new(degree: usize, nodes: Vec<f64>) -> Self {
        let value = nodes.iter().map(|&t| bernstein(degree, t)).collect();
        let d1 = nodes.iter().map(|&t| bernstein_derivative(degree, t)).collect();
        let d2 = nodes
            .iter()
            .map(|&t| bernstein_second_derivative(degree, t))
            .collect();
        BasisTable {
            degree,
            nodes,
            value,
            d1,
            d2,
        }
    }
}
