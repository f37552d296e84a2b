// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Starting geometry for the windowed solves.

use nalgebra::{DMatrix, DVector};

use crate::bezier::{bernstein, BezierSegment};
use crate::continuity::GeometricJointParams;
use crate::error::{Error, Result};
use crate::point::Point2;

/// Chord-length parameter of `p` on the polyline `a → p → b`.
pub fn chord_parameter(a: Point2, p: Point2, b: Point2) -> Result<f64> {
    let d1 = a.distance(p);
    let d2 = p.distance(b);
    let eps = 1e-12 * (d1 + d2);
    if !(d1 > eps && d2 > eps) {
        return Err(Error::DegenerateInput(format!(
            "zero chord around {p:?} ({d1:e}, {d2:e})"
        )));
    }
    Ok(d1 / (d1 + d2))
}

/// The quadratic through `p0`, `p1`, `p2` at parameters `0`, `t`, `1`.
pub fn quadratic_through(p0: Point2, p1: Point2, p2: Point2, t: f64) -> Result<BezierSegment> {
    let s = 1.0 - t;
    let c1 = (p1 - p0 * (s * s) - p2 * (t * t)) * (1.0 / (2.0 * s * t));
    BezierSegment::new(vec![p0, c1, p2])
}

/// Head points `c_0..c_order` of a right neighbour forced by parametric
/// continuity of the given order with `left`.
pub fn forward_head(left: &BezierSegment, order: usize) -> Vec<Point2> {
    let l = left.control_points();
    let k = left.degree();
    let c0 = l[k];
    let c1 = c0 * 2.0 - l[k - 1];
    if order == 1 {
        vec![c0, c1]
    } else {
        let c2 = l[k - 2] - l[k - 1] * 2.0 + c1 * 2.0;
        vec![c0, c1, c2]
    }
}

/// Tail points `c_{k-order}..c_k` of a left neighbour of degree `k` forced
/// by parametric continuity of the given order with `right`.
pub fn backward_tail(right: &BezierSegment, order: usize) -> Vec<Point2> {
    let r = right.control_points();
    let ck = r[0];
    let ck1 = ck * 2.0 - r[1];
    if order == 1 {
        vec![ck1, ck]
    } else {
        let ck2 = r[2] - r[1] * 2.0 + ck1 * 2.0;
        vec![ck2, ck1, ck]
    }
}

/// Joint parameters after reparameterizing the left segment's derivatives
/// by factor `u` and the right segment's by `v`.
///
/// In derivative form the joint reads `R' = α L'`, `R'' = α² L'' + β L'`
/// with `β = (k − 1)(η − α − α²)`; `α` scales by `v / u` and `β` by
/// `v² / u`.
pub fn rescale_joint(p: GeometricJointParams, u: f64, v: f64) -> GeometricJointParams {
    let alpha = v * p.alpha / u;
    let beta_over = v * v / u * (p.eta - p.alpha - p.alpha * p.alpha);
    GeometricJointParams {
        alpha,
        eta: alpha + alpha * alpha + beta_over,
    }
}

/// Degree-`k` segment with the given head, ending at `end`, passing through
/// `target` at `t`, whose last free point `u = c_{k-2}` satisfies
/// `c_{k-1} = (c_{k-2} + c_k) / 2`.
pub fn build_trailing_segment(head: &[Point2], end: Point2, target: Point2, t: f64, k: usize) -> Result<BezierSegment> {
    if head.len() + 3 != k + 1 {
        return Err(Error::Shape(format!("head of {} points for degree {k}", head.len())));
    }
    let b = bernstein(k, t);
    let mut rhs = target;
    for (j, &c) in head.iter().enumerate() {
        rhs -= c * b[j];
    }
    rhs -= end * (0.5 * b[k - 1] + b[k]);
    let coef = b[k - 2] + 0.5 * b[k - 1];
    if !(coef > 1e-300) {
        return Err(Error::Invariant(format!("interpolation coefficient vanished at t={t}")));
    }
    let u = rhs * (1.0 / coef);
    let mut pts = head.to_vec();
    pts.push(u);
    pts.push((u + end) * 0.5);
    pts.push(end);
    BezierSegment::new(pts)
}

/// Sets the joint between `left` and `right` to the midpoint of its two
/// adjacent control points, and for second order re-derives `right.c_2`.
pub fn smooth_joint(left: &mut Vec<Point2>, right: &mut [Point2], order: usize) {
    let k = left.len() - 1;
    let joint = (left[k - 1] + right[1]) * 0.5;
    left[k] = joint;
    right[0] = joint;
    if order == 2 {
        right[2] = left[k - 2] - left[k - 1] * 2.0 + right[1] * 2.0;
    }
}

/// Closest `t̂` of the bridge to 1/2 at which [`close_quintic`] still
/// prescribes the bridge's midpoint.
const MIDPOINT_CLEARANCE: f64 = 0.05;

/// Bridging segment between `a` (ending at `c00`) and `d` (starting at
/// `c0k`) for closure, degree 5: solves the eight free points
/// `a3, a4, b1..b4, d1, d2` from C¹ and C² at both joints, interpolation on
/// all three segments and the midpoint pass-through of the bridge.
#[allow(clippy::too_many_arguments)]
pub fn close_quintic(
    a: &mut [Point2],
    b: &mut [Point2],
    d: &mut [Point2],
    ta: f64,
    tb: f64,
    td: f64,
    pa: Point2,
    pb: Point2,
    pd: Point2,
) -> Result<()> {
    let c00 = a[5];
    let c0k = d[0];
    b[0] = c00;
    b[5] = c0k;
    // unknown order: a3 a4 b1 b2 b3 b4 d1 d2
    let mut m = DMatrix::<f64>::zeros(8, 8);
    let mut rhs = vec![Point2::ZERO; 8];
    // C¹ and C² at a|b
    m[(0, 1)] = 1.0;
    m[(0, 2)] = 1.0;
    rhs[0] = c00 * 2.0;
    m[(1, 0)] = 1.0;
    m[(1, 1)] = -2.0;
    m[(1, 2)] = 2.0;
    m[(1, 3)] = -1.0;
    // C¹ and C² at b|d
    m[(2, 5)] = 1.0;
    m[(2, 6)] = 1.0;
    rhs[2] = c0k * 2.0;
    m[(3, 4)] = 1.0;
    m[(3, 5)] = -2.0;
    m[(3, 6)] = 2.0;
    m[(3, 7)] = -1.0;
    // interpolation on a
    let ba = bernstein(5, ta);
    m[(4, 0)] = ba[3];
    m[(4, 1)] = ba[4];
    rhs[4] = pa - a[0] * ba[0] - a[1] * ba[1] - a[2] * ba[2] - c00 * ba[5];
    // interpolation on b, and its midpoint
    let bb = bernstein(5, tb);
    for j in 1..5 {
        m[(5, j + 1)] = bb[j];
    }
    rhs[5] = pb - c00 * bb[0] - c0k * bb[5];
    if (tb - 0.5).abs() > MIDPOINT_CLEARANCE {
        let bb = bernstein(5, 0.5);
        for j in 1..5 {
            m[(6, j + 1)] = bb[j];
        }
        rhs[6] = (c00 + pb * 2.0 + c0k) * 0.25 - c00 * bb[0] - c0k * bb[5];
    } else {
        // the midpoint row would repeat the interpolation row; ask for a
        // vanishing third difference of the interior points instead
        for (j, c) in [1.0, -3.0, 3.0, -1.0].into_iter().enumerate() {
            m[(6, j + 2)] = c;
        }
    }
    // interpolation on d
    let bd = bernstein(5, td);
    m[(7, 6)] = bd[1];
    m[(7, 7)] = bd[2];
    rhs[7] = pd - c0k * bd[0] - d[3] * bd[3] - d[4] * bd[4] - d[5] * bd[5];

    let rx = DVector::from_iterator(8, rhs.iter().map(|p| p.x));
    let ry = DVector::from_iterator(8, rhs.iter().map(|p| p.y));
    let lu = m.clone().lu();
    let (sx, sy) = match (lu.solve(&rx), lu.solve(&ry)) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            let svd = m.svd(true, true);
            let x = svd.solve(&rx, 1e-14).map_err(|e| Error::Invariant(e.to_string()))?;
            let y = svd.solve(&ry, 1e-14).map_err(|e| Error::Invariant(e.to_string()))?;
            (x, y)
        }
    };
    let v = |i: usize| Point2::new(sx[i], sy[i]);
    a[3] = v(0);
    a[4] = v(1);
    for j in 1..5 {
        b[j] = v(j + 1);
    }
    d[1] = v(6);
    d[2] = v(7);
    Ok(())
}

/// Quartic analogue of [`close_quintic`]: the bridge's second points come
/// from C¹ with its neighbours and `b2` from interpolation.
pub fn close_quartic(a: &[Point2], b: &mut [Point2], d: &[Point2], tb: f64, pb: Point2) -> Result<()> {
    let c00 = a[4];
    let c0k = d[0];
    b[0] = c00;
    b[1] = c00 * 2.0 - a[3];
    b[3] = c0k * 2.0 - d[1];
    b[4] = c0k;
    let bb = bernstein(4, tb);
    let rhs = pb - b[0] * bb[0] - b[1] * bb[1] - b[3] * bb[3] - b[4] * bb[4];
    if !(bb[2] > 1e-300) {
        return Err(Error::Invariant(format!("interpolation coefficient vanished at t={tb}")));
    }
    b[2] = rhs * (1.0 / bb[2]);
    Ok(())
}
