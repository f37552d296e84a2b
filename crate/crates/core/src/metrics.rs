// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy aggregates, joint diagnostics, curvature combs and monotonicity
//! counts.

use serde::{Deserialize, Serialize};

use crate::bezier::BezierSegment;
use crate::builder::{CurveDocument, SegmentRecord};
use crate::continuity::{joint_residual, ContinuityMode};
use crate::energy::{
    curve_length_energy, edge_length_energy, parabolic_energy, EnergyWeights, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::point::Point2;

/// Relative curvature gap below which a joint counts as G²-verified.
pub const CURVATURE_GAP_TOLERANCE: f64 = 1e-4;

/// Number of curvature samples used by [`monotone_interval_count`].
pub const MONOTONE_SAMPLES: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentEnergy {
    pub parabolic: f64,
    pub edge: f64,
    pub length: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_segment: Vec<SegmentEnergy>,
    /// Ē, the mean parabolic energy.
    pub average_ep: f64,
    /// Ê, the largest parabolic energy.
    pub max_ep: f64,
}

/// Energies of `records` against their stored parabolas.
pub fn energy_report_for(records: &[SegmentRecord], weights: EnergyWeights, rule: QuadratureRule) -> Result<EnergyReport> {
    let mut per_segment = Vec::with_capacity(records.len());
    for rec in records {
        let parabolic = parabolic_energy(&rec.curve, &rec.parabola, rule)?;
        let edge = edge_length_energy(&rec.curve);
        let length = curve_length_energy(&rec.curve);
        per_segment.push(SegmentEnergy {
            parabolic,
            edge,
            length,
            total: parabolic + weights.lambda_e * edge + weights.lambda_c * length,
        });
    }
    let n = per_segment.len();
    let (sum, max) = per_segment
        .iter()
        .fold((0.0, 0.0f64), |(s, m), e| (s + e.parabolic, m.max(e.parabolic)));
    Ok(EnergyReport {
        per_segment,
        average_ep: if n == 0 { 0.0 } else { sum / n as f64 },
        max_ep: max,
    })
}

/// [`energy_report_for`] with the document's own weights and rule.
pub fn energy_report(doc: &CurveDocument) -> Result<EnergyReport> {
    let s = doc.settings();
    energy_report_for(doc.segments(), s.weights, s.rule)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub left: usize,
    pub right: usize,
    pub position_gap: f64,
    /// Angle between the end and start tangents, in radians.
    pub tangent_angle_gap: f64,
    pub curvature_gap: f64,
    /// Largest residual of the document's continuity constraints.
    pub mode_residual: f64,
    /// `curvature_gap` within [`CURVATURE_GAP_TOLERANCE`] of the larger
    /// of the two segments' peak curvatures.
    pub curvature_verified: bool,
}

fn peak_curvature(seg: &BezierSegment) -> Result<f64> {
    Ok(seg
        .sample_curvature(MONOTONE_SAMPLES)?
        .iter()
        .fold(0.0f64, |m, s| m.max(s.kappa.abs())))
}

/// Diagnostics for every joint between consecutive segments.
pub fn joint_report(doc: &CurveDocument) -> Result<Vec<JointReport>> {
    let segs = doc.segments();
    let m = segs.len();
    let pairs = if doc.is_closed() { m } else { m.saturating_sub(1) };
    let mode: ContinuityMode = doc.mode();
    let mut out = Vec::with_capacity(pairs);
    for left in 0..pairs {
        let right = (left + 1) % m;
        let (l, r) = (&segs[left].curve, &segs[right].curve);
        let (dl, _) = l.derivatives(1.0);
        let (dr, _) = r.derivatives(0.0);
        let angle = dl.cross(dr).atan2(dl.dot(dr)).abs();
        let kl = l.curvature(1.0)?;
        let kr = r.curvature(0.0)?;
        let gap = (kl - kr).abs();
        let params = segs[right].joint_in;
        let residual = if mode.is_geometric() && params.is_none() {
            f64::INFINITY
        } else {
            joint_residual(l, r, mode, params.as_ref())?.max_abs()
        };
        let scale = peak_curvature(l)?.max(peak_curvature(r)?);
        out.push(JointReport {
            left,
            right,
            position_gap: l.last().distance(r.first()),
            tangent_angle_gap: angle,
            curvature_gap: gap,
            mode_residual: residual,
            curvature_verified: gap <= CURVATURE_GAP_TOLERANCE * scale.max(f64::MIN_POSITIVE),
        });
    }
    Ok(out)
}

/// Number of maximal monotone runs in a curvature sequence, ignoring
/// differences within `1e-9 · max|κ|`.
pub fn monotone_runs(kappa: &[f64]) -> usize {
    let peak = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let tol = 1e-9 * peak;
    let mut runs = 1;
    let mut direction = 0i8;
    for w in kappa.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tol {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if direction != 0 && s != direction {
            runs += 1;
        }
        direction = s;
    }
    runs
}

/// Monotone runs of the segment's curvature on 201 uniform samples.
pub fn monotone_interval_count(seg: &BezierSegment) -> Result<usize> {
    let kappa: Vec<f64> = seg
        .sample_curvature(MONOTONE_SAMPLES)?
        .iter()
        .map(|s| s.kappa)
        .collect();
    Ok(monotone_runs(&kappa))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombGeometry {
    pub base_points: Vec<Point2>,
    pub tip_points: Vec<Point2>,
    pub scale: f64,
    /// Samples per segment; consecutive runs of this length belong to one
    /// segment.
    pub samples_per_segment: usize,
}

/// Curvature comb: `tip = base + scale · κ · n` with `n` the left normal.
pub fn comb_geometry(doc: &CurveDocument, samples_per_segment: usize, scale: f64) -> Result<CombGeometry> {
    comb_for_segments(doc.segments().iter().map(|r| &r.curve), samples_per_segment, scale)
}

pub fn comb_for_segments<'a>(
    segments: impl IntoIterator<Item = &'a BezierSegment>,
    samples_per_segment: usize,
    scale: f64,
) -> Result<CombGeometry> {
    if samples_per_segment < 2 {
        return Err(Error::Domain(format!("comb needs ≥ 2 samples, got {samples_per_segment}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("comb scale {scale} must be positive")));
    }
    let mut base_points = Vec::new();
    let mut tip_points = Vec::new();
    for seg in segments {
        let last = (samples_per_segment - 1) as f64;
        for j in 0..samples_per_segment {
            let t = j as f64 / last;
            let base = seg.evaluate(t)?;
            let kappa = seg.curvature(t)?;
            let (d1, _) = seg.derivatives(t);
            let normal = d1.perp() * (1.0 / d1.norm());
            base_points.push(base);
            tip_points.push(base + normal * (scale * kappa));
        }
    }
    Ok(CombGeometry {
        base_points,
        tip_points,
        scale,
        samples_per_segment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn runs_examples() {
        assert_eq!(monotone_runs(&[1.0; 10]), 1);
        assert_eq!(monotone_runs(&[0.0, 1.0, 2.0, 1.0, 0.0]), 2);
        assert_eq!(monotone_runs(&[0.0, 1.0, 0.0, 1.0]), 3);
        assert_eq!(monotone_runs(&[1.0, 1.0 + 1e-12, 1.0, 2.0]), 1);
    }

    #[test]
    fn straight_segment_counts() {
        let s = BezierSegment::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)]).unwrap();
        assert_eq!(monotone_interval_count(&s).unwrap(), 1);
        let comb = comb_for_segments([&s], 5, 1.0).unwrap();
        assert_eq!(comb.base_points, comb.tip_points);
    }

    #[test]
    fn comb_length_is_scaled_curvature() {
        let s = BezierSegment::new(vec![p(0.0, 0.0), p(1.0, 2.0), p(3.0, -1.0), p(4.0, 1.0)]).unwrap();
        let comb = comb_for_segments([&s], 11, 0.5).unwrap();
        for (j, (b, tip)) in comb.base_points.iter().zip(&comb.tip_points).enumerate() {
            let kappa = s.curvature(j as f64 / 10.0).unwrap();
            assert!(((*tip - *b).norm() - 0.5 * kappa.abs()).abs() < 1e-12);
        }
    }
}
