// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Curve construction: incremental insertion, closure, local editing and
//! undo.
//!
//! In an open document with points `p_0..p_{n+1}`, segment `s` runs between
//! joints and interpolates `p_{s+1}`; the first segment starts at `p_0`
//! and the last ends at `p_{n+1}`. In a closed document segment `j`
//! interpolates `p_j` and the segments wrap around.

pub mod init;

use serde::{Deserialize, Serialize};

use crate::bezier::BezierSegment;
use crate::continuity::{ContinuityMode, GeometricJointParams};
use crate::energy::{EnergyWeights, ParabolaModel, QuadratureRule};
use crate::error::{Error, Result};
use crate::point::{BoundingBox, Point2};
use crate::solver::{
    solve_window, SolverSettings, StageReport, WindowInput, WindowJointInput, WindowSegmentInput, WindowSolution,
};

use init::{
    backward_tail, build_trailing_segment, chord_parameter, close_quartic, close_quintic, forward_head,
    quadratic_through, rescale_joint, smooth_joint,
};

pub use init::chord_parameter as chord_length_parameter;

/// Everything that shapes a document's solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentSettings {
    pub mode: ContinuityMode,
    pub weights: EnergyWeights,
    pub rule: QuadratureRule,
    pub solver: SolverSettings,
}

impl DocumentSettings {
    pub fn new(mode: ContinuityMode) -> Self {
        DocumentSettings {
            mode,
            weights: EnergyWeights::default(),
            rule: QuadratureRule::default(),
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.solver.validate()?;
        QuadratureRule::new(self.rule.subintervals)?;
        Ok(())
    }
}

impl Default for DocumentSettings {
    fn default() -> Self {
        DocumentSettings::new(ContinuityMode::C2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Open,
    Closed,
}

/// One segment of a document together with its solve state.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentRecord {
    pub curve: BezierSegment,
    /// Interpolation parameter.
    pub t: f64,
    /// Initial parameter `t̂` of the last solve; `t ∈ [t̂/2, (t̂+1)/2]`.
    pub t_init: f64,
    /// Index of the interpolated point.
    pub point_index: usize,
    pub parabola: ParabolaModel,
    /// Parameters of the joint with the previous segment (geometric modes).
    pub joint_in: Option<GeometricJointParams>,
}

/// The segments re-optimized by an edit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditWindow {
    pub segment_indices: Vec<usize>,
    /// Neighbours whose adjoining control points were held fixed.
    pub frozen_boundary: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EditReport {
    pub window: EditWindow,
    /// Segment indices whose content may differ from before the edit.
    pub changed_segment_indices: Vec<usize>,
    pub stage_reports: Vec<StageReport>,
    pub degraded: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Snapshot {
    points: Vec<Point2>,
    segments: Vec<SegmentRecord>,
    topology: Topology,
}

/// Interpolation points plus the stitched pκ-curve.
#[derive(Clone, Debug)]
pub struct CurveDocument {
    settings: DocumentSettings,
    points: Vec<Point2>,
    segments: Vec<SegmentRecord>,
    topology: Topology,
    revision: u64,
    undo: Vec<Snapshot>,
    redo: Vec<Snapshot>,
}

struct WindowSpec {
    /// Document indices, in window order.
    indices: Vec<usize>,
    segments: Vec<WindowSegmentInput>,
    joints: Vec<WindowJointInput>,
}

impl CurveDocument {
    pub fn new(mode: ContinuityMode) -> Self {
        CurveDocument::with_settings(DocumentSettings::new(mode)).expect("default settings are valid")
    }

    pub fn with_settings(settings: DocumentSettings) -> Result<Self> {
        settings.validate()?;
        Ok(CurveDocument {
            settings,
            points: Vec::new(),
            segments: Vec::new(),
            topology: Topology::Open,
            revision: 0,
            undo: Vec::new(),
            redo: Vec::new(),
        })
    }

    /// Reassembles a document from stored state, checking its layout.
    pub fn from_parts(
        settings: DocumentSettings,
        points: Vec<Point2>,
        segments: Vec<SegmentRecord>,
        topology: Topology,
    ) -> Result<Self> {
        settings.validate()?;
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Argument(format!("point {i} is not finite")));
        }
        let expected = match topology {
            Topology::Open if points.len() < 3 => 0,
            Topology::Open => points.len() - 2,
            Topology::Closed => points.len(),
        };
        if topology == Topology::Closed && points.len() < 3 {
            return Err(Error::Shape("a closed document needs at least 3 points".into()));
        }
        if segments.len() != expected {
            return Err(Error::Shape(format!(
                "{} points need {expected} segments, got {}",
                points.len(),
                segments.len()
            )));
        }
        let degree = settings.mode.degree();
        for (s, rec) in segments.iter().enumerate() {
            if rec.curve.degree() != degree {
                return Err(Error::Shape(format!("segment {s} has degree {}", rec.curve.degree())));
            }
            let expect_index = match topology {
                Topology::Open => s + 1,
                Topology::Closed => s,
            };
            if rec.point_index != expect_index {
                return Err(Error::Shape(format!(
                    "segment {s} interpolates point {}, expected {expect_index}",
                    rec.point_index
                )));
            }
        }
        Ok(CurveDocument {
            settings,
            points,
            segments,
            topology,
            revision: 0,
            undo: Vec::new(),
            redo: Vec::new(),
        })
    }

    /// Builds the single-segment document through three points.
    pub fn bootstrap_three_points(p0: Point2, p1: Point2, p2: Point2, settings: DocumentSettings) -> Result<Self> {
        let mut doc = CurveDocument::with_settings(settings)?;
        for p in [p0, p1, p2] {
            doc.insert_point(p)?;
        }
        Ok(doc)
    }

    pub fn settings(&self) -> &DocumentSettings {
        &self.settings
    }

    pub fn mode(&self) -> ContinuityMode {
        self.settings.mode
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn segments(&self) -> &[SegmentRecord] {
        &self.segments
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_closed(&self) -> bool {
        self.topology == Topology::Closed
    }

    /// Incremented by every successful edit, undo and redo.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn can_undo(&self) -> bool {
        !self.undo.is_empty()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo.is_empty()
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            points: self.points.clone(),
            segments: self.segments.clone(),
            topology: self.topology,
        }
    }

    fn restore_snapshot(&mut self, s: Snapshot) {
        self.points = s.points;
        self.segments = s.segments;
        self.topology = s.topology;
    }

    fn commit(&mut self, points: Vec<Point2>, segments: Vec<SegmentRecord>, topology: Topology) -> Vec<usize> {
        let changed = changed_indices(&self.segments, &segments);
        let prev = self.snapshot();
        self.undo.push(prev);
        self.redo.clear();
        self.points = points;
        self.segments = segments;
        self.topology = topology;
        self.revision += 1;
        changed
    }

    /// Restores the state before the last edit and returns the indices of
    /// segments that differ, or `None` when there is nothing to undo.
    pub fn undo(&mut self) -> Option<Vec<usize>> {
        let s = self.undo.pop()?;
        let current = self.snapshot();
        self.redo.push(current);
        let changed = changed_indices(&self.segments, &s.segments);
        self.restore_snapshot(s);
        self.revision += 1;
        Some(changed)
    }

    pub fn redo(&mut self) -> Option<Vec<usize>> {
        let s = self.redo.pop()?;
        let current = self.snapshot();
        self.undo.push(current);
        let changed = changed_indices(&self.segments, &s.segments);
        self.restore_snapshot(s);
        self.revision += 1;
        Some(changed)
    }

    fn degree(&self) -> usize {
        self.settings.mode.degree()
    }

    fn order(&self) -> usize {
        self.settings.mode.order()
    }

    fn geometric(&self) -> bool {
        self.settings.mode.is_geometric()
    }

    fn solve(&self, spec: &WindowSpec) -> Result<WindowSolution> {
        let input = WindowInput {
            segments: spec.segments.clone(),
            joints: spec.joints.clone(),
            mode: self.settings.mode,
            weights: self.settings.weights,
            rule: self.settings.rule,
        };
        let wrap = |e: Error| match e {
            Error::Infeasible { .. } | Error::Numerical { .. } | Error::DegenerateSpeed { .. } => Error::Solver {
                segments: spec.indices.clone(),
                source: Box::new(e),
            },
            e => e,
        };
        let sol = solve_window(&input, &self.settings.solver).map_err(wrap)?;
        // the solver measures feasibility in window-normalized units; the
        // document promises it relative to its own extent
        let extent = BoundingBox::of(self.points.iter().chain(spec.segments.iter().map(|s| &s.target)).copied())
            .map_or(0.0, |b| b.diagonal());
        let tolerance = self.settings.solver.constraint_tolerance * extent;
        for (w, seg) in spec.segments.iter().enumerate() {
            let miss = sol.geometry.segments[w].evaluate(sol.geometry.t[w])?.distance(seg.target);
            if !(miss <= tolerance) {
                return Err(wrap(Error::Infeasible { residual: miss }));
            }
        }
        Ok(sol)
    }

    fn joint_param_or_default(&self, p: Option<GeometricJointParams>) -> GeometricJointParams {
        p.unwrap_or(GeometricJointParams::PARAMETRIC)
    }

    /// Records for a solved window; `joint_in[w]` is used for window
    /// segments without a solved incoming joint.
    fn records(
        &self,
        spec: &WindowSpec,
        sol: &WindowSolution,
        point_index: impl Fn(usize) -> usize,
        mut joint_in: Vec<Option<GeometricJointParams>>,
    ) -> Vec<SegmentRecord> {
        let g = &sol.geometry;
        for (ji, jt) in spec.joints.iter().enumerate() {
            joint_in[jt.right] = self.geometric().then_some(g.joint_params[ji]);
        }
        (0..spec.indices.len())
            .map(|w| SegmentRecord {
                curve: g.segments[w].clone(),
                t: g.t[w],
                t_init: spec.segments[w].t_hat,
                point_index: point_index(spec.indices[w]),
                parabola: g.parabolas[w],
                joint_in: joint_in[w],
            })
            .collect()
    }

    fn report(spec: &WindowSpec, sol: &WindowSolution, frozen: Vec<usize>, changed: Vec<usize>) -> EditReport {
        EditReport {
            window: EditWindow {
                segment_indices: spec.indices.clone(),
                frozen_boundary: frozen,
            },
            changed_segment_indices: changed,
            stage_reports: sol.outcome.stage_reports.clone(),
            degraded: sol.outcome.degraded,
        }
    }

    /// Appends a point to an open document.
    ///
    /// The third point builds the first segment; every later point adds a
    /// segment and re-optimizes at most the last three.
    pub fn insert_point(&mut self, p: Point2) -> Result<EditReport> {
        if !p.is_finite() {
            return Err(Error::Argument("inserted point is not finite".into()));
        }
        if self.is_closed() {
            return Err(Error::Argument("cannot insert into a closed document".into()));
        }
        let (points, segments, mut report) = self.insert_open(&self.points, &self.segments, p)?;
        report.changed_segment_indices = self.commit(points, segments, Topology::Open);
        Ok(report)
    }

    fn insert_open(
        &self,
        points: &[Point2],
        segments: &[SegmentRecord],
        p: Point2,
    ) -> Result<(Vec<Point2>, Vec<SegmentRecord>, EditReport)> {
        let mut new_points = points.to_vec();
        new_points.push(p);
        let n = points.len();
        if n < 2 {
            if n == 1 && points[0] == p {
                return Err(Error::DegenerateInput("point coincides with the previous one".into()));
            }
            return Ok((new_points, Vec::new(), EditReport::default()));
        }
        if n == 2 {
            let (seg, report) = self.bootstrap(points[0], points[1], p)?;
            return Ok((new_points, vec![seg], report));
        }

        let k = self.degree();
        let order = self.order();
        let m = segments.len();
        let last = &segments[m - 1];
        let z = (1.0 + last.t) / 2.0;
        if !(last.t > 0.0 && last.t < 1.0) {
            return Err(Error::Invariant(format!("stored parameter {} not in (0, 1)", last.t)));
        }
        let (left, _) = last.curve.subdivide(z)?;
        let mut cur = left.into_points();
        let t_cur = last.t / z;

        let start = m.saturating_sub(2);
        let mut window_points = Vec::new();
        let mut t_hats = Vec::new();
        let mut joint_params = Vec::new();
        if m >= 2 {
            let prev = &segments[m - 2];
            let mut pp = prev.curve.control_points().to_vec();
            if !self.geometric() {
                smooth_joint(&mut pp, &mut cur, order);
            }
            window_points.push(pp);
            t_hats.push(prev.t);
            joint_params.push(rescale_joint(self.joint_param_or_default(last.joint_in), 1.0, z));
        }
        let cur_seg = BezierSegment::new(cur.clone())?;
        let target = points[n - 1];
        let t_new = chord_parameter(cur_seg.last(), target, p)?;
        let head = forward_head(&cur_seg, order);
        let new_seg = build_trailing_segment(&head, p, target, t_new, k)?;
        window_points.push(cur);
        t_hats.push(t_cur);
        window_points.push(new_seg.into_points());
        t_hats.push(t_new);
        joint_params.push(GeometricJointParams::PARAMETRIC);

        let indices: Vec<usize> = (start..=m).collect();
        let count = indices.len();
        let mut win_segments = Vec::with_capacity(count);
        for (w, (pts, &t_hat)) in window_points.into_iter().zip(&t_hats).enumerate() {
            let fixed_head = if w == 0 {
                if start > 0 {
                    order + 1
                } else {
                    1
                }
            } else {
                0
            };
            win_segments.push(WindowSegmentInput {
                curve: BezierSegment::new(pts)?,
                target: new_points[indices[w] + 1],
                t_hat,
                fixed_head,
                fixed_tail: usize::from(w + 1 == count),
            });
        }
        let joints = (0..count - 1)
            .map(|w| WindowJointInput {
                left: w,
                right: w + 1,
                params: joint_params[w],
            })
            .collect();
        let spec = WindowSpec {
            indices,
            segments: win_segments,
            joints,
        };
        let sol = self.solve(&spec)?;
        let mut joint_in = vec![None; count];
        joint_in[0] = if start > 0 { segments[start].joint_in } else { None };
        let records = self.records(&spec, &sol, |s| s + 1, joint_in);
        let mut new_segments = segments[..start].to_vec();
        new_segments.extend(records);
        let frozen = if start > 0 { vec![start - 1] } else { vec![] };
        let report = Self::report(&spec, &sol, frozen, spec.indices.clone());
        Ok((new_points, new_segments, report))
    }

    fn bootstrap(&self, p0: Point2, p1: Point2, p2: Point2) -> Result<(SegmentRecord, EditReport)> {
        let t_hat = chord_parameter(p0, p1, p2)?;
        let curve = quadratic_through(p0, p1, p2, t_hat)?.elevate_to(self.degree())?;
        let spec = WindowSpec {
            indices: vec![0],
            segments: vec![WindowSegmentInput {
                curve,
                target: p1,
                t_hat,
                fixed_head: 1,
                fixed_tail: 1,
            }],
            joints: vec![],
        };
        let sol = self.solve(&spec)?;
        let rec = self.records(&spec, &sol, |_| 1, vec![None]).remove(0);
        let report = Self::report(&spec, &sol, vec![], vec![0]);
        Ok((rec, report))
    }

    /// Closes an open document with at least three points.
    ///
    /// `p_0` is first appended as a final point, then a bridging segment
    /// interpolating `p_0` replaces the two segment ends around it.
    pub fn close(&mut self) -> Result<EditReport> {
        if self.is_closed() {
            return Err(Error::Argument("document is already closed".into()));
        }
        let big_n = self.points.len();
        if big_n < 3 {
            return Err(Error::Domain(format!("closing needs at least 3 points, have {big_n}")));
        }
        let (pts, segs, first_report) = self.insert_open(&self.points, &self.segments, self.points[0])?;
        debug_assert_eq!(pts.len(), big_n + 1);
        let n = big_n - 2;
        let k = self.degree();
        let order = self.order();
        let geometric = self.geometric();

        let a = &segs[n];
        let d = &segs[0];
        let z = (a.t + 1.0) / 2.0;
        let (a_left, _) = a.curve.subdivide(z)?;
        let t_a = a.t / z;
        let z1 = d.t / 2.0;
        let (_, d_right) = d.curve.subdivide(z1)?;
        let t_d = d.t / (2.0 - d.t);
        let mut ap = a_left.into_points();
        let mut dp = d_right.clone().into_points();
        let p0 = pts[0];
        let t_b = chord_parameter(ap[k], p0, dp[0])?;

        let mut a_joint_in = None;
        let mut after_d_joint = None;
        let mut cyclic_joint = GeometricJointParams::PARAMETRIC;
        if n >= 2 {
            if geometric {
                a_joint_in = Some(rescale_joint(self.joint_param_or_default(a.joint_in), 1.0, z));
                after_d_joint = Some(rescale_joint(self.joint_param_or_default(segs[1].joint_in), 1.0 - z1, 1.0));
            } else {
                let head = forward_head(&segs[n - 1].curve, order);
                ap[..=order].copy_from_slice(&head);
                let tail = backward_tail(&segs[1].curve, order);
                dp[k - order..].copy_from_slice(&tail);
            }
        } else if geometric {
            cyclic_joint = rescale_joint(self.joint_param_or_default(a.joint_in), 1.0 - z1, z);
        } else {
            let head = forward_head(&d_right, order);
            ap[..=order].copy_from_slice(&head);
        }

        let mut bp = vec![Point2::ZERO; k + 1];
        if order == 2 {
            close_quintic(&mut ap, &mut bp, &mut dp, t_a, t_b, t_d, pts[n + 1], p0, pts[1])?;
        } else {
            close_quartic(&ap, &mut bp, &dp, t_b, p0)?;
        }

        let fixed = if n >= 2 { order + 1 } else { 0 };
        let mut joints = vec![
            WindowJointInput {
                left: 0,
                right: 1,
                params: GeometricJointParams::PARAMETRIC,
            },
            WindowJointInput {
                left: 1,
                right: 2,
                params: GeometricJointParams::PARAMETRIC,
            },
        ];
        if n == 1 {
            joints.push(WindowJointInput {
                left: 2,
                right: 0,
                params: cyclic_joint,
            });
        }
        let spec = WindowSpec {
            indices: vec![n + 1, 0, 1],
            segments: vec![
                WindowSegmentInput {
                    curve: BezierSegment::new(ap)?,
                    target: pts[n + 1],
                    t_hat: t_a,
                    fixed_head: fixed,
                    fixed_tail: 0,
                },
                WindowSegmentInput {
                    curve: BezierSegment::new(bp)?,
                    target: p0,
                    t_hat: t_b,
                    fixed_head: 0,
                    fixed_tail: 0,
                },
                WindowSegmentInput {
                    curve: BezierSegment::new(dp)?,
                    target: pts[1],
                    t_hat: t_d,
                    fixed_head: 0,
                    fixed_tail: fixed,
                },
            ],
            joints,
        };
        let sol = self.solve(&spec)?;
        let recs = self.records(&spec, &sol, |j| j, vec![a_joint_in, None, None]);
        let [ra, rb, rd]: [SegmentRecord; 3] = recs.try_into().expect("three window segments");

        let mut closed = Vec::with_capacity(big_n);
        closed.push(rb);
        closed.push(rd);
        for (s, rec) in segs.iter().enumerate().take(n).skip(1) {
            let mut rec = rec.clone();
            rec.point_index = s + 1;
            if s == 1 && after_d_joint.is_some() {
                rec.joint_in = after_d_joint;
            }
            closed.push(rec);
        }
        closed.push(ra);
        let mut points = pts;
        points.pop();

        let mut stage_reports = first_report.stage_reports;
        stage_reports.extend(sol.outcome.stage_reports.iter().cloned());
        let frozen = if n >= 2 { vec![n, 2] } else { vec![] };
        let report = EditReport {
            window: EditWindow {
                segment_indices: spec.indices.clone(),
                frozen_boundary: frozen,
            },
            changed_segment_indices: Vec::new(),
            stage_reports,
            degraded: first_report.degraded || sol.outcome.degraded,
        };
        let mut report = report;
        report.changed_segment_indices = self.commit(points, closed, Topology::Closed);
        Ok(report)
    }

    /// Segment indices re-optimized when point `index` moves.
    pub fn edit_window(&self, index: usize) -> Result<EditWindow> {
        if index >= self.points.len() {
            return Err(Error::Domain(format!(
                "point index {index} out of range for {} points",
                self.points.len()
            )));
        }
        let m = self.segments.len();
        if m == 0 {
            return Ok(EditWindow::default());
        }
        match self.topology {
            Topology::Open => {
                let s = index.saturating_sub(1).min(m - 1);
                let lo = s.saturating_sub(1);
                let hi = (s + 1).min(m - 1);
                let mut frozen = Vec::new();
                if lo > 0 {
                    frozen.push(lo - 1);
                }
                if hi + 1 < m {
                    frozen.push(hi + 1);
                }
                Ok(EditWindow {
                    segment_indices: (lo..=hi).collect(),
                    frozen_boundary: frozen,
                })
            }
            Topology::Closed => {
                if m <= 3 {
                    let segment_indices = (0..m).map(|w| (index + m - 1 + w) % m).collect();
                    return Ok(EditWindow {
                        segment_indices,
                        frozen_boundary: vec![],
                    });
                }
                let idx = [(index + m - 1) % m, index, (index + 1) % m];
                let mut frozen = vec![(index + m - 2) % m];
                if m > 4 {
                    frozen.push((index + 2) % m);
                }
                Ok(EditWindow {
                    segment_indices: idx.to_vec(),
                    frozen_boundary: frozen,
                })
            }
        }
    }

    /// Moves one interpolation point and re-optimizes its window.
    pub fn move_point(&mut self, index: usize, p: Point2) -> Result<EditReport> {
        if !p.is_finite() {
            return Err(Error::Argument("moved point is not finite".into()));
        }
        let window = self.edit_window(index)?;
        let mut points = self.points.clone();
        points[index] = p;
        if let Some(j) = (0..points.len()).find(|&j| j != index && points[j] == p) {
            return Err(Error::DegenerateInput(format!("point coincides with point {j}")));
        }
        if window.segment_indices.is_empty() {
            self.commit(points, Vec::new(), self.topology);
            return Ok(EditReport {
                window,
                ..Default::default()
            });
        }

        let m = self.segments.len();
        let order = self.order();
        let k = self.degree();
        let closed = self.is_closed();
        let cyclic = closed && m <= 3;
        let idx = window.segment_indices.clone();
        let count = idx.len();
        let mut win_segments = Vec::with_capacity(count);
        for (w, &s) in idx.iter().enumerate() {
            let rec = &self.segments[s];
            let mut pts = rec.curve.control_points().to_vec();
            if !closed && s == 0 {
                pts[0] = points[0];
            }
            if !closed && s + 1 == m {
                pts[k] = points[m + 1];
            }
            let fixed_head = match (w, cyclic) {
                (_, true) => 0,
                (0, false) if closed || s > 0 => order + 1,
                (0, false) => 1,
                _ => 0,
            };
            let fixed_tail = match (w + 1 == count, cyclic) {
                (_, true) => 0,
                (true, false) if closed || s + 1 < m => order + 1,
                (true, false) => 1,
                _ => 0,
            };
            win_segments.push(WindowSegmentInput {
                curve: BezierSegment::new(pts)?,
                target: points[rec.point_index],
                t_hat: rec.t,
                fixed_head,
                fixed_tail,
            });
        }
        let mut joints: Vec<WindowJointInput> = (1..count)
            .map(|w| WindowJointInput {
                left: w - 1,
                right: w,
                params: self.joint_param_or_default(self.segments[idx[w]].joint_in),
            })
            .collect();
        if cyclic {
            joints.push(WindowJointInput {
                left: count - 1,
                right: 0,
                params: self.joint_param_or_default(self.segments[idx[0]].joint_in),
            });
        }
        let spec = WindowSpec {
            indices: idx.clone(),
            segments: win_segments,
            joints,
        };
        let sol = self.solve(&spec)?;
        let joint_in = idx.iter().map(|&s| self.segments[s].joint_in).collect();
        let point_index: Vec<usize> = idx.iter().map(|&s| self.segments[s].point_index).collect();
        let recs = self.records(
            &spec,
            &sol,
            |s| point_index[idx.iter().position(|&x| x == s).expect("window index")],
            joint_in,
        );
        let mut segments = self.segments.clone();
        for (w, rec) in recs.into_iter().enumerate() {
            segments[idx[w]] = rec;
        }
        let mut report = Self::report(&spec, &sol, window.frozen_boundary.clone(), idx.clone());
        report.changed_segment_indices = self.commit(points, segments, self.topology);
        Ok(report)
    }
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

/// Bitwise equality of two records.
pub fn records_identical(a: &SegmentRecord, b: &SegmentRecord) -> bool {
    let pa = a.curve.control_points();
    let pb = b.curve.control_points();
    let params = |r: &SegmentRecord| r.joint_in.map(|j| (j.alpha.to_bits(), j.eta.to_bits()));
    pa.len() == pb.len()
        && pa
            .iter()
            .zip(pb)
            .all(|(x, y)| same_bits(x.x, y.x) && same_bits(x.y, y.y))
        && same_bits(a.t, b.t)
        && same_bits(a.t_init, b.t_init)
        && a.point_index == b.point_index
        && same_bits(a.parabola.a0, b.parabola.a0)
        && same_bits(a.parabola.a1, b.parabola.a1)
        && same_bits(a.parabola.a2, b.parabola.a2)
        && params(a) == params(b)
}

/// Indices of `new` whose record is not bitwise equal to `old` at the same
/// index.
pub fn changed_indices(old: &[SegmentRecord], new: &[SegmentRecord]) -> Vec<usize> {
    (0..new.len())
        .filter(|&i| old.get(i).is_none_or(|o| !records_identical(o, &new[i])))
        .collect()
}
