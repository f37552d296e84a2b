// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Joint, end and interpolation constraints between Bézier segments.
//!
//! Residuals are absolute, in world units; a zero vector means the
//! constraint holds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bezier::BezierSegment;
use crate::error::{Error, Result};
use crate::point::Point2;

/// Range of the tangent-length ratio the solver may pick at a geometric
/// joint. Left unbounded, a leg can collapse to a near cusp that traps the
/// closing window in a poor local minimum.
pub const ALPHA_MIN: f64 = 0.25;
pub const ALPHA_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContinuityKind {
    Parametric,
    Geometric,
}

/// One of C¹, C², G¹, G².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContinuityMode {
    C1,
    C2,
    G1,
    G2,
}

impl ContinuityMode {
    pub const ALL: [ContinuityMode; 4] = [Self::C1, Self::C2, Self::G1, Self::G2];

    pub fn order(self) -> usize {
        match self {
            Self::C1 | Self::G1 => 1,
            Self::C2 | Self::G2 => 2,
        }
    }

    pub fn kind(self) -> ContinuityKind {
        match self {
            Self::C1 | Self::C2 => ContinuityKind::Parametric,
            Self::G1 | Self::G2 => ContinuityKind::Geometric,
        }
    }

    pub fn is_geometric(self) -> bool {
        self.kind() == ContinuityKind::Geometric
    }

    /// Segment degree used by documents in this mode: quartic for first
    /// order, quintic for second order.
    pub fn degree(self) -> usize {
        self.order() + 3
    }

    pub fn from_parts(order: usize, kind: ContinuityKind) -> Result<Self> {
        match (order, kind) {
            (1, ContinuityKind::Parametric) => Ok(Self::C1),
            (2, ContinuityKind::Parametric) => Ok(Self::C2),
            (1, ContinuityKind::Geometric) => Ok(Self::G1),
            (2, ContinuityKind::Geometric) => Ok(Self::G2),
            _ => Err(Error::Argument(format!("unsupported continuity order {order}"))),
        }
    }
}

impl fmt::Display for ContinuityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::G1 => "G1",
            Self::G2 => "G2",
        };
        f.write_str(s)
    }
}

impl FromStr for ContinuityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C1" => Ok(Self::C1),
            "C2" => Ok(Self::C2),
            "G1" => Ok(Self::G1),
            "G2" => Ok(Self::G2),
            other => Err(Error::Argument(format!("unknown continuity mode {other:?}"))),
        }
    }
}

/// Free parameters of a geometric joint: tangent-length ratio `alpha` and
/// the curvature coupling `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricJointParams {
    pub alpha: f64,
    pub eta: f64,
}

impl GeometricJointParams {
    /// The values that make G² coincide with C².
    pub const PARAMETRIC: GeometricJointParams = GeometricJointParams { alpha: 1.0, eta: 2.0 };
}

/// A labelled vector of constraint residuals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintResidual {
    pub values: Vec<f64>,
    pub labels: Vec<&'static str>,
}

impl ConstraintResidual {
    fn push(&mut self, label_x: &'static str, label_y: &'static str, v: Point2) {
        self.values.push(v.x);
        self.labels.push(label_x);
        self.values.push(v.y);
        self.labels.push(label_y);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Residual of the mode's joint constraints between `left` (ending at the
/// joint) and `right` (starting there).
pub fn joint_residual(
    left: &BezierSegment,
    right: &BezierSegment,
    mode: ContinuityMode,
    params: Option<&GeometricJointParams>,
) -> Result<ConstraintResidual> {
    if left.degree() != right.degree() {
        return Err(Error::Shape(format!(
            "joint between degree {} and degree {}",
            left.degree(),
            right.degree()
        )));
    }
    let k = left.degree();
    if k < mode.order() + 1 {
        return Err(Error::Shape(format!("degree {k} too low for {mode}")));
    }
    let params = match (mode.is_geometric(), params) {
        (true, Some(p)) => Some(*p),
        (true, None) => {
            return Err(Error::Argument(format!("{mode} joint needs alpha/eta")));
        }
        (false, _) => None,
    };
    let l = left.control_points();
    let r = right.control_points();
    let mut res = ConstraintResidual::default();
    res.push("c0.x", "c0.y", l[k] - r[0]);
    match params {
        None => {
            res.push("c1.x", "c1.y", (l[k] - l[k - 1]) - (r[1] - r[0]));
            if mode.order() == 2 {
                res.push(
                    "c2.x",
                    "c2.y",
                    (l[k - 2] - l[k - 1] * 2.0) - (r[2] - r[1] * 2.0),
                );
            }
        }
        Some(GeometricJointParams { alpha, eta }) => {
            res.push("g1.x", "g1.y", (l[k] - l[k - 1]) * alpha - (r[1] - r[0]));
            if mode.order() == 2 {
                let lhs = (l[k - 1] - l[k - 2]) * (-alpha * alpha) + (l[k] - l[k - 1]) * eta;
                res.push("g2.x", "g2.y", lhs - (r[2] - r[1]));
            }
        }
    }
    Ok(res)
}

/// `seg(t) - target`.
pub fn interpolation_residual(seg: &BezierSegment, t: f64, target: Point2) -> Result<ConstraintResidual> {
    let p = seg.evaluate(t)?;
    let mut res = ConstraintResidual::default();
    res.push("interp.x", "interp.y", p - target);
    Ok(res)
}

/// Builds the right neighbour of `left` whose first three control points
/// are forced by C² continuity; `right_tail` supplies `c_3..c_k`.
pub fn enforce_c2_forward(left: &BezierSegment, right_tail: &[Point2]) -> Result<BezierSegment> {
    let k = left.degree();
    if k < 2 || right_tail.len() != k - 2 {
        return Err(Error::Shape(format!(
            "C2 tail for degree {k} needs {} points, got {}",
            k.saturating_sub(2),
            right_tail.len()
        )));
    }
    let l = left.control_points();
    let c0 = l[k];
    let c1 = c0 * 2.0 - l[k - 1];
    let c2 = l[k - 2] - l[k - 1] * 2.0 + c1 * 2.0;
    let mut pts = vec![c0, c1, c2];
    pts.extend_from_slice(right_tail);
    BezierSegment::new(pts)
}

/// As [`enforce_c2_forward`] for C¹: the first two control points are forced,
/// `right_tail` supplies `c_2..c_k`.
pub fn enforce_c1_forward(left: &BezierSegment, right_tail: &[Point2]) -> Result<BezierSegment> {
    let k = left.degree();
    if k < 1 || right_tail.len() != k - 1 {
        return Err(Error::Shape(format!(
            "C1 tail for degree {k} needs {} points, got {}",
            k.saturating_sub(1),
            right_tail.len()
        )));
    }
    let l = left.control_points();
    let c0 = l[k];
    let c1 = c0 * 2.0 - l[k - 1];
    let mut pts = vec![c0, c1];
    pts.extend_from_slice(right_tail);
    BezierSegment::new(pts)
}

/// Leg-length ratio `‖r_1 - r_0‖ / ‖l_k - l_{k-1}‖` at a joint.
///
/// Legs shorter than the segment's speed epsilon make the ratio undefined
/// and are rejected.
pub fn leg_ratio(left: &BezierSegment, right: &BezierSegment) -> Result<f64> {
    let l = left.control_points();
    let r = right.control_points();
    let k = left.degree();
    if k == 0 || right.degree() == 0 {
        return Err(Error::Shape("joint legs need degree ≥ 1".into()));
    }
    let ll = (l[k] - l[k - 1]).norm();
    let lr = (r[1] - r[0]).norm();
    let eps = left.speed_epsilon().max(right.speed_epsilon());
    if !(ll > eps && lr > eps) {
        return Err(Error::DegenerateInput(format!(
            "zero-length leg at joint ({ll:e}, {lr:e})"
        )));
    }
    Ok(lr / ll)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(pts: &[(f64, f64)]) -> BezierSegment {
        BezierSegment::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn straight_pair_is_c2() {
        let a = seg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0), (5.0, 0.0)]);
        let b = a.map_points(|p| p + Point2::new(5.0, 0.0));
        let r = joint_residual(&a, &b, ContinuityMode::C2, None).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn g2_with_unit_params_equals_c2() {
        // once C¹ holds, the second-order rows of both modes coincide
        let a = seg(&[(0.0, 0.0), (1.0, 0.4), (2.0, 1.1), (3.1, 0.2), (4.0, -0.3), (5.0, 0.5)]);
        let tail = [(6.5, 2.0), (7.0, 2.2), (8.0, 1.0), (9.0, 0.0)].map(|(x, y)| Point2::new(x, y));
        let b = enforce_c1_forward(&a, &tail).unwrap();
        let c = joint_residual(&a, &b, ContinuityMode::C2, None).unwrap();
        let g = joint_residual(&a, &b, ContinuityMode::G2, Some(&GeometricJointParams::PARAMETRIC))
            .unwrap();
        assert!(c.max_abs() > 0.1);
        for (x, y) in c.values.iter().zip(&g.values) {
            assert!((x - y).abs() < 1e-14, "{c:?} {g:?}");
        }
    }

    #[test]
    fn errors() {
        let a = seg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let b = seg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert!(matches!(
            joint_residual(&a, &b, ContinuityMode::C1, None),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            joint_residual(&a, &a, ContinuityMode::G1, None),
            Err(Error::Argument(_))
        ));
        assert!(matches!(enforce_c2_forward(&a, &[]), Err(Error::Shape(_))));
    }

    #[test]
    fn interpolation_residual_endpoint() {
        let a = seg(&[(0.5, 0.0), (1.0, 3.0), (2.0, 0.0)]);
        let r = interpolation_residual(&a, 0.0, Point2::new(0.5, 0.0)).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        let p = a.evaluate(0.3).unwrap();
        assert_eq!(interpolation_residual(&a, 0.3, p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn enforce_c2_straight() {
        let a = seg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0), (5.0, 0.0)]);
        let b = enforce_c2_forward(&a, &[Point2::new(8.0, 0.0), Point2::new(9.0, 0.0), Point2::new(10.0, 0.0)])
            .unwrap();
        assert_eq!(b.first(), a.last());
        assert!(b.control_points().iter().all(|p| p.y == 0.0));
        assert_eq!(joint_residual(&a, &b, ContinuityMode::C2, None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn degenerate_leg_rejected() {
        let a = seg(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        let b = seg(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert!(matches!(leg_ratio(&a, &b), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn mode_parsing() {
        for m in ContinuityMode::ALL {
            assert_eq!(m.to_string().parse::<ContinuityMode>().unwrap(), m);
            assert_eq!(ContinuityMode::from_parts(m.order(), m.kind()).unwrap(), m);
        }
        assert_eq!(ContinuityMode::C1.degree(), 4);
        assert_eq!(ContinuityMode::G2.degree(), 5);
        assert!("C3".parse::<ContinuityMode>().is_err());
    }
}
