// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! The optimization problem over a window of consecutive segments.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bezier::{
    bernstein, bernstein_derivative, bernstein_second_derivative, BezierSegment, SPEED_EPSILON_FACTOR,
};
use crate::continuity::{ContinuityMode, GeometricJointParams, ALPHA_MAX, ALPHA_MIN};
use crate::energy::{
    best_vertex_parabola, edge_term, length_term, parabolic_term, EnergyWeights, ParabolaModel, QuadratureRule, QuadratureTable,
    A2_MIN,
};
use crate::error::{Error, Result};
use crate::point::{BoundingBox, Point2};

use super::nlp::NlpProblem;

/// Largest move of a control point per iteration, in window units.
const MAX_POINT_STEP: f64 = 0.1;
/// Largest relative decrease of a joint's α per iteration.
const MAX_ALPHA_SHRINK: f64 = 0.75;

/// Relative step of the finite-difference energy Hessian.
const HESSIAN_STEP: f64 = 1e-6;

/// Samples used by [`fit_parabola`].
pub const FIT_SAMPLES: usize = 100;

/// Least-squares fit of `Q(s) = a0 + a2 (s² − 2 t̂ s)` to the curvature of
/// `seg`, so that the extremum of `Q` sits at `t_hat`.
///
/// A constant curvature profile fits `(mean, 0, 0)`.
pub fn fit_parabola(seg: &BezierSegment, t_hat: f64) -> Result<ParabolaModel> {
    let mut kappa = Vec::with_capacity(FIT_SAMPLES);
    let mut u = Vec::with_capacity(FIT_SAMPLES);
    for i in 0..FIT_SAMPLES {
        let s = i as f64 / (FIT_SAMPLES - 1) as f64;
        kappa.push(seg.curvature(s)?);
        u.push(s * s - 2.0 * t_hat * s);
    }
    let n = FIT_SAMPLES as f64;
    let mean = kappa.iter().sum::<f64>() / n;
    if kappa.iter().all(|&k| k == kappa[0]) {
        return Ok(ParabolaModel::new(mean, 0.0, 0.0));
    }
    let su: f64 = u.iter().sum();
    let suu: f64 = u.iter().map(|v| v * v).sum();
    let sk: f64 = kappa.iter().sum();
    let suk: f64 = u.iter().zip(&kappa).map(|(a, b)| a * b).sum();
    let det = n * suu - su * su;
    if !(det.abs() > 1e-300) {
        return Ok(ParabolaModel::new(mean, 0.0, 0.0));
    }
    let a0 = (suu * sk - su * suk) / det;
    let a2 = (n * suk - su * sk) / det;
    Ok(ParabolaModel::new(a0, -2.0 * a2 * t_hat, a2))
}

/// One segment of a window in document coordinates.
#[derive(Clone, Debug)]
pub struct WindowSegmentInput {
    /// Starting geometry.
    pub curve: BezierSegment,
    /// Data point the segment must interpolate.
    pub target: Point2,
    /// Initial interpolation parameter; its box is `[t̂/2, (t̂+1)/2]`.
    pub t_hat: f64,
    /// Leading control points held fixed.
    pub fixed_head: usize,
    /// Trailing control points held fixed.
    pub fixed_tail: usize,
}

/// A joint between two window segments; `right` starts where `left` ends.
#[derive(Clone, Copy, Debug)]
pub struct WindowJointInput {
    pub left: usize,
    pub right: usize,
    /// Starting values for geometric modes, ignored otherwise.
    pub params: GeometricJointParams,
}

#[derive(Clone, Debug)]
pub struct WindowInput {
    pub segments: Vec<WindowSegmentInput>,
    pub joints: Vec<WindowJointInput>,
    pub mode: ContinuityMode,
    pub weights: EnergyWeights,
    pub rule: QuadratureRule,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Fixed(Point2),
    Var(usize),
}

#[derive(Clone, Copy, Debug)]
struct JointVars {
    left: usize,
    right: usize,
    alpha: Option<usize>,
    eta: Option<usize>,
}

/// Row pattern shared by the x and y component of a constraint.
struct RowTemplate {
    terms: Vec<(usize, usize, f64)>,
    target: Point2,
    dtheta: Vec<(usize, Point2)>,
}

/// A window of segments posed as an [`NlpProblem`], in normalized
/// coordinates (window bounding box translated to the origin and scaled to
/// unit size).
///
/// Unknowns are laid out as `[free control points (x, y)…, per segment
/// (b0, a2, t)…, per geometric joint (α[, η])…]`. The per-segment parabola
/// is kept in vertex form `Q(s) = b0 + a2 (s − t)²`, so its extremum is at
/// the interpolation parameter by construction. Control points shared by a
/// joint are a single unknown.
#[derive(Clone, Debug)]
pub struct SegmentProblem {
    mode: ContinuityMode,
    degree: usize,
    weights: EnergyWeights,
    table: Arc<QuadratureTable>,
    origin: Point2,
    scale: f64,
    slots: Vec<Vec<Slot>>,
    world_fixed: Vec<Vec<Option<Point2>>>,
    targets: Vec<Point2>,
    joints: Vec<JointVars>,
    point_vars: usize,
    bounds: Vec<(f64, f64)>,
    restore_vars: Vec<usize>,
    start: Vec<f64>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl SegmentProblem {
    pub fn new(input: &WindowInput) -> Result<Self> {
        input.weights.validate()?;
        let mode = input.mode;
        let degree = mode.degree();
        let nseg = input.segments.len();
        if nseg == 0 {
            return Err(Error::Argument("empty window".into()));
        }
        for (s, seg) in input.segments.iter().enumerate() {
            if seg.curve.degree() != degree {
                return Err(Error::Shape(format!(
                    "window segment {s} has degree {}, {mode} needs {degree}",
                    seg.curve.degree()
                )));
            }
            if !(seg.t_hat > 0.0 && seg.t_hat < 1.0) {
                return Err(Error::Domain(format!("t_hat {} outside (0, 1)", seg.t_hat)));
            }
            if seg.fixed_head + seg.fixed_tail > degree + 1 {
                return Err(Error::Argument(format!("window segment {s} fixes too many points")));
            }
        }
        for j in &input.joints {
            if j.left >= nseg || j.right >= nseg || j.left == j.right {
                return Err(Error::Argument(format!("bad joint {}→{}", j.left, j.right)));
            }
        }

        let bbox = BoundingBox::of(
            input
                .segments
                .iter()
                .flat_map(|s| s.curve.control_points().iter().copied().chain([s.target])),
        )
        .expect("window is nonempty");
        let scale = bbox.width().max(bbox.height());
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegenerateInput("window has zero extent".into()));
        }
        let origin = bbox.min;
        let norm = |p: Point2| (p - origin) * (1.0 / scale);

        // union the joint slots, then number the free ones
        let k = degree;
        let key = |s: usize, j: usize| s * (k + 1) + j;
        let total = nseg * (k + 1);
        let mut parent: Vec<usize> = (0..total).collect();
        for jt in &input.joints {
            let a = find(&mut parent, key(jt.left, k));
            let b = find(&mut parent, key(jt.right, 0));
            parent[b] = a;
        }
        let mut fixed: Vec<Option<Point2>> = vec![None; total];
        for (s, seg) in input.segments.iter().enumerate() {
            let pts = seg.curve.control_points();
            for j in 0..=k {
                if j < seg.fixed_head || j + seg.fixed_tail > k {
                    let r = find(&mut parent, key(s, j));
                    fixed[r].get_or_insert(pts[j]);
                }
            }
        }
        let mut var_of_root: Vec<Option<usize>> = vec![None; total];
        let mut start = Vec::new();
        let mut slots = Vec::with_capacity(nseg);
        let mut world_fixed = Vec::with_capacity(nseg);
        for (s, seg) in input.segments.iter().enumerate() {
            let pts = seg.curve.control_points();
            let mut row = Vec::with_capacity(k + 1);
            let mut wrow = Vec::with_capacity(k + 1);
            for (j, &p) in pts.iter().enumerate() {
                let r = find(&mut parent, key(s, j));
                if let Some(w) = fixed[r] {
                    row.push(Slot::Fixed(norm(w)));
                    wrow.push(Some(w));
                } else {
                    let v = *var_of_root[r].get_or_insert_with(|| {
                        let q = norm(p);
                        start.push(q.x);
                        start.push(q.y);
                        start.len() / 2 - 1
                    });
                    row.push(Slot::Var(v));
                    wrow.push(None);
                }
            }
            slots.push(row);
            world_fixed.push(wrow);
        }
        let point_vars = start.len() / 2;
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); start.len()];
        let restore_vars: Vec<usize> = (0..start.len()).collect();

        let mut targets = Vec::with_capacity(nseg);
        for seg in &input.segments {
            let ncurve = seg.curve.map_points(norm);
            let fit = fit_parabola(&ncurve, seg.t_hat)?;
            let t = seg.t_hat;
            let base = fit.eval(t);
            start.extend([base, fit.a2, t]);
            bounds.push((f64::NEG_INFINITY, f64::INFINITY));
            bounds.push((f64::NEG_INFINITY, f64::INFINITY));
            if fit.a2.abs() < A2_MIN {
                bounds.push((t, t));
            } else {
                bounds.push((t / 2.0, (t + 1.0) / 2.0));
            }
            targets.push(norm(seg.target));
        }

        let mut joints = Vec::with_capacity(input.joints.len());
        for jt in &input.joints {
            let mut jv = JointVars {
                left: jt.left,
                right: jt.right,
                alpha: None,
                eta: None,
            };
            if mode.is_geometric() {
                jv.alpha = Some(start.len());
                start.push(jt.params.alpha.clamp(ALPHA_MIN, ALPHA_MAX));
                bounds.push((ALPHA_MIN, ALPHA_MAX));
                if mode.order() == 2 {
                    jv.eta = Some(start.len());
                    start.push(jt.params.eta);
                    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
                }
            }
            joints.push(jv);
        }

        Ok(SegmentProblem {
            mode,
            degree,
            weights: input.weights,
            table: QuadratureTable::cached(degree, input.rule),
            origin,
            scale,
            slots,
            world_fixed,
            targets,
            joints,
            point_vars,
            bounds,
            restore_vars,
            start,
        })
    }

    /// The same problem with different regularization weights.
    pub fn with_weights(&self, weights: EnergyWeights) -> Self {
        SegmentProblem {
            weights,
            ..self.clone()
        }
    }

    /// Initial unknowns built from the window input.
    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn num_segments(&self) -> usize {
        self.slots.len()
    }

    /// Uniform scale from document to normalized coordinates.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn param_offset(&self, s: usize) -> usize {
        2 * self.point_vars + 3 * s
    }

    fn point(&self, z: &[f64], slot: Slot) -> Point2 {
        match slot {
            Slot::Fixed(p) => p,
            Slot::Var(v) => Point2::new(z[2 * v], z[2 * v + 1]),
        }
    }

    fn points(&self, z: &[f64], s: usize) -> Vec<Point2> {
        self.slots[s].iter().map(|&sl| self.point(z, sl)).collect()
    }

    /// Interpolation parameter of window segment `s`.
    pub fn t_of(&self, z: &[f64], s: usize) -> f64 {
        z[self.param_offset(s) + 2]
    }

    /// Normalized-unit parabola of window segment `s`.
    pub fn parabola_of(&self, z: &[f64], s: usize) -> ParabolaModel {
        let o = self.param_offset(s);
        ParabolaModel::from_vertex(z[o], z[o + 1], z[o + 2])
    }

    fn joint_params(&self, z: &[f64], jv: &JointVars) -> GeometricJointParams {
        GeometricJointParams {
            alpha: jv.alpha.map_or(1.0, |i| z[i]),
            eta: jv.eta.map_or(2.0, |i| z[i]),
        }
    }

    fn speed_eps(points: &[Point2]) -> f64 {
        let bb = BoundingBox::of(points.iter().copied()).expect("nonempty");
        SPEED_EPSILON_FACTOR * bb.diagonal()
    }

    /// Energy of segment `s` from its control points and `(b0, a2, t)`;
    /// `grad`, when given, receives the gradient in that same local layout.
    fn local_energy(&self, pts: &[Point2], vertex: [f64; 3], grad: Option<&mut [f64]>, weighted: bool) -> Result<f64> {
        let k = self.degree;
        let [b0, a2, t] = vertex;
        let parabola = ParabolaModel::from_vertex(b0, a2, t);
        let mut local = [0.0; 2 * 6 + 3];
        let local = &mut local[..2 * (k + 1) + 3];
        let want_grad = grad.is_some();
        let mut value = parabolic_term(
            &self.table,
            pts,
            &parabola,
            Self::speed_eps(pts),
            want_grad.then_some(&mut local[..]),
        )?;
        if weighted {
            if self.weights.lambda_e != 0.0 {
                value += self.weights.lambda_e
                    * edge_term(pts, want_grad.then_some(&mut local[..]), self.weights.lambda_e);
            }
            if self.weights.lambda_c != 0.0 {
                value += self.weights.lambda_c
                    * length_term(pts, want_grad.then_some(&mut local[..]), self.weights.lambda_c);
            }
        }
        if let Some(g) = grad {
            let off = 2 * (k + 1);
            g[..off].copy_from_slice(&local[..off]);
            let (fa0, fa1, fa2) = (local[off], local[off + 1], local[off + 2]);
            // a0 = b0 + a2 t², a1 = −2 a2 t
            g[off] = fa0;
            g[off + 1] = fa0 * t * t - 2.0 * t * fa1 + fa2;
            g[off + 2] = 2.0 * a2 * t * fa0 - 2.0 * a2 * fa1;
        }
        Ok(value)
    }

    /// Global index of each local variable of segment `s`.
    fn local_indices(&self, s: usize) -> Vec<Option<usize>> {
        let mut idx = Vec::with_capacity(2 * (self.degree + 1) + 3);
        for slot in &self.slots[s] {
            match *slot {
                Slot::Var(v) => idx.extend([Some(2 * v), Some(2 * v + 1)]),
                Slot::Fixed(_) => idx.extend([None, None]),
            }
        }
        let o = self.param_offset(s);
        idx.extend([Some(o), Some(o + 1), Some(o + 2)]);
        idx
    }

    fn vertex_of(&self, z: &[f64], s: usize) -> [f64; 3] {
        let o = self.param_offset(s);
        [z[o], z[o + 1], z[o + 2]]
    }

    fn segment_energy(&self, z: &[f64], s: usize, grad: Option<&mut [f64]>, weighted: bool) -> Result<f64> {
        let pts = self.points(z, s);
        let Some(g) = grad else {
            return self.local_energy(&pts, self.vertex_of(z, s), None, weighted);
        };
        let mut local = [0.0; 2 * 6 + 3];
        let local = &mut local[..2 * (self.degree + 1) + 3];
        let value = self.local_energy(&pts, self.vertex_of(z, s), Some(local), weighted)?;
        for (l, gi) in self.local_indices(s).into_iter().enumerate() {
            if let Some(gi) = gi {
                g[gi] += local[l];
            }
        }
        Ok(value)
    }

    /// Hessian of the weighted energy, by central differences of each
    /// segment's analytic gradient in its local variables.
    fn energy_hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let nl = 2 * (self.degree + 1) + 3;
        let mut gp = vec![0.0; nl];
        let mut gm = vec![0.0; nl];
        let mut block = DMatrix::<f64>::zeros(nl, nl);
        for s in 0..self.num_segments() {
            let idx = self.local_indices(s);
            let pts = self.points(z, s);
            let vertex = self.vertex_of(z, s);
            for c in 0..nl {
                if idx[c].is_none() {
                    block.column_mut(c).fill(0.0);
                    continue;
                }
                let bump = |sign: f64, out: &mut [f64]| -> Result<f64> {
                    let mut p = pts.clone();
                    let mut v = vertex;
                    let base = if c < 2 * (self.degree + 1) {
                        let q = &mut p[c / 2];
                        if c % 2 == 0 { &mut q.x } else { &mut q.y }
                    } else {
                        &mut v[c - 2 * (self.degree + 1)]
                    };
                    let step = HESSIAN_STEP * (1.0 + base.abs());
                    *base += sign * step;
                    self.local_energy(&p, v, Some(out), true)?;
                    Ok(step)
                };
                let step = bump(1.0, &mut gp)?;
                bump(-1.0, &mut gm)?;
                for r in 0..nl {
                    block[(r, c)] = (gp[r] - gm[r]) / (2.0 * step);
                }
            }
            for (r, gr) in idx.iter().enumerate() {
                let Some(gr) = *gr else { continue };
                for (c, gc) in idx.iter().enumerate() {
                    if let Some(gc) = *gc {
                        h[(gr, gc)] += 0.5 * (block[(r, c)] + block[(c, r)]);
                    }
                }
            }
        }
        Ok(h)
    }

    /// Adds `c λ` to the `(θ, P)` block of point slot `(s, j)`.
    fn mixed(&self, h: &mut DMatrix<f64>, theta: usize, s: usize, j: usize, c: f64, l: (f64, f64)) {
        if let Slot::Var(v) = self.slots[s][j] {
            sym(h, theta, 2 * v, c * l.0);
            sym(h, theta, 2 * v + 1, c * l.1);
        }
    }

    /// Whole-window difference Hessian, the oracle for [`Self::energy_hessian`].
    #[cfg(test)]
    fn energy_hessian_fd(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let mut zp = z.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for c in 0..n {
            let step = 1e-6 * (1.0 + z[c].abs());
            zp[c] = z[c] + step;
            gp.iter_mut().for_each(|v| *v = 0.0);
            self.objective(&zp, Some(&mut gp))?;
            zp[c] = z[c] - step;
            gm.iter_mut().for_each(|v| *v = 0.0);
            self.objective(&zp, Some(&mut gm))?;
            zp[c] = z[c];
            for r in 0..n {
                h[(r, c)] = (gp[r] - gm[r]) / (2.0 * step);
            }
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Adds `Σ λᵢ ∇²hᵢ` for the interpolation and geometric joint rows.
    fn add_constraint_curvature(&self, z: &[f64], lambda: &[f64], h: &mut DMatrix<f64>) {
        let k = self.degree;
        let mut row = 0;
        for s in 0..self.num_segments() {
            let l = (lambda[2 * row], lambda[2 * row + 1]);
            row += 1;
            let it = self.param_offset(s) + 2;
            let t = self.t_of(z, s);
            let db = bernstein_derivative(k, t);
            let d2b = bernstein_second_derivative(k, t);
            let pts = self.points(z, s);
            let acc = pts.iter().zip(&d2b).fold(Point2::ZERO, |a, (&p, &w)| a + p * w);
            sym(h, it, it, l.0 * acc.x + l.1 * acc.y);
            for (j, &c) in db.iter().enumerate() {
                self.mixed(h, it, s, j, c, l);
            }
        }
        for jv in &self.joints {
            let (lft, order) = (jv.left, self.mode.order());
            let l1 = (lambda[2 * row], lambda[2 * row + 1]);
            row += 1;
            let Some(ia) = jv.alpha else {
                row += order - 1;
                continue;
            };
            self.mixed(h, ia, lft, k, 1.0, l1);
            self.mixed(h, ia, lft, k - 1, -1.0, l1);
            if let Some(ie) = jv.eta {
                let l2 = (lambda[2 * row], lambda[2 * row + 1]);
                row += 1;
                let alpha = z[ia];
                let p = |j: usize| self.point(z, self.slots[lft][j]);
                let dd = (p(k - 2) - p(k - 1)) * 2.0;
                sym(h, ia, ia, l2.0 * dd.x + l2.1 * dd.y);
                self.mixed(h, ia, lft, k - 2, 2.0 * alpha, l2);
                self.mixed(h, ia, lft, k - 1, -2.0 * alpha, l2);
                self.mixed(h, ie, lft, k, 1.0, l2);
                self.mixed(h, ie, lft, k - 1, -1.0, l2);
            }
        }
    }

    /// Parabolic energy of each window segment, in normalized units.
    pub fn segment_parabolic_energies(&self, z: &[f64]) -> Result<Vec<f64>> {
        (0..self.num_segments())
            .map(|s| self.segment_energy(z, s, None, false))
            .collect()
    }

    fn row_templates(&self, z: &[f64]) -> Vec<RowTemplate> {
        let k = self.degree;
        let mut rows = Vec::new();
        for s in 0..self.num_segments() {
            let t = self.t_of(z, s);
            let b = bernstein(k, t);
            let db = bernstein_derivative(k, t);
            let pts = self.points(z, s);
            let dt = pts.iter().zip(&db).fold(Point2::ZERO, |acc, (&p, &w)| acc + p * w);
            rows.push(RowTemplate {
                terms: (0..=k).map(|j| (s, j, b[j])).collect(),
                target: self.targets[s],
                dtheta: vec![(self.param_offset(s) + 2, dt)],
            });
        }
        for jv in &self.joints {
            let (l, r) = (jv.left, jv.right);
            let lp = |j: usize| self.point(z, self.slots[l][j]);
            let GeometricJointParams { alpha, eta } = self.joint_params(z, jv);
            match jv.alpha {
                None => {
                    rows.push(RowTemplate {
                        terms: vec![(l, k, 1.0), (l, k - 1, -1.0), (r, 1, -1.0), (r, 0, 1.0)],
                        target: Point2::ZERO,
                        dtheta: vec![],
                    });
                    if self.mode.order() == 2 {
                        rows.push(RowTemplate {
                            terms: vec![(l, k - 2, 1.0), (l, k - 1, -2.0), (r, 2, -1.0), (r, 1, 2.0)],
                            target: Point2::ZERO,
                            dtheta: vec![],
                        });
                    }
                }
                Some(ia) => {
                    rows.push(RowTemplate {
                        terms: vec![(l, k, alpha), (l, k - 1, -alpha), (r, 1, -1.0), (r, 0, 1.0)],
                        target: Point2::ZERO,
                        dtheta: vec![(ia, lp(k) - lp(k - 1))],
                    });
                    if let Some(ie) = jv.eta {
                        let a2 = alpha * alpha;
                        rows.push(RowTemplate {
                            terms: vec![
                                (l, k - 1, -a2 - eta),
                                (l, k - 2, a2),
                                (l, k, eta),
                                (r, 2, -1.0),
                                (r, 1, 1.0),
                            ],
                            target: Point2::ZERO,
                            dtheta: vec![
                                (ia, (lp(k - 1) - lp(k - 2)) * (-2.0 * alpha)),
                                (ie, lp(k) - lp(k - 1)),
                            ],
                        });
                    }
                }
            }
        }
        rows
    }

    /// The start with its free control points replaced by the fairest
    /// polygon (least squared second differences) that meets the
    /// constraints at the start's parameters, and parabolas refitted.
    pub fn faired_start(&self) -> Result<Vec<f64>> {
        let np = 2 * self.point_vars;
        let z0 = &self.start;
        if np == 0 {
            return Ok(z0.clone());
        }
        // quadratic form Σ |c_{j+1} − 2c_j + c_{j−1}|² over the free points
        let mut q = DMatrix::<f64>::zeros(np, np);
        let mut lin = vec![0.0; np];
        for s in 0..self.num_segments() {
            for j in 1..self.degree {
                for axis in 0..2 {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    let mut constant = 0.0;
                    for (o, w) in [(j - 1, 1.0), (j, -2.0), (j + 1, 1.0)] {
                        match self.slots[s][o] {
                            Slot::Var(v) => row.push((2 * v + axis, w)),
                            Slot::Fixed(p) => constant += w * if axis == 0 { p.x } else { p.y },
                        }
                    }
                    for &(a, wa) in &row {
                        lin[a] += 2.0 * wa * constant;
                        for &(b, wb) in &row {
                            q[(a, b)] += 2.0 * wa * wb;
                        }
                    }
                }
            }
        }
        // keep unpenalized directions near the start
        for i in 0..np {
            q[(i, i)] += 1e-8;
            lin[i] -= 1e-8 * z0[i];
        }
        let jac = self.jacobian(z0).columns(0, np).into_owned();
        let h = self.constraints(z0);
        let m = jac.nrows();
        // constraints are affine in the points: J x = J x0 − h
        let x0 = nalgebra::DVector::from_column_slice(&z0[..np]);
        let target = &jac * &x0 - nalgebra::DVector::from_column_slice(&h);
        let mut kkt = DMatrix::<f64>::zeros(np + m, np + m);
        kkt.view_mut((0, 0), (np, np)).copy_from(&q);
        kkt.view_mut((np, 0), (m, np)).copy_from(&jac);
        kkt.view_mut((0, np), (np, m)).copy_from(&jac.transpose());
        let mut rhs = nalgebra::DVector::<f64>::zeros(np + m);
        for i in 0..np {
            rhs[i] = -lin[i];
        }
        rhs.rows_mut(np, m).copy_from(&target);
        let sol = kkt
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Invariant(format!("fairing solve: {e}")))?;
        let mut z = z0.clone();
        z[..np].copy_from_slice(sol.rows(0, np).as_slice());
        for s in 0..self.num_segments() {
            let o = self.param_offset(s);
            let t = z[o + 2];
            let fit = fit_parabola(&BezierSegment::new(self.points(&z, s))?, t)?;
            z[o] = fit.eval(t);
            z[o + 1] = fit.a2;
        }
        Ok(z)
    }

    /// Segments, parameters, parabolas and joint parameters in document
    /// coordinates. Fixed control points are returned bitwise unchanged.
    pub fn unpack(&self, z: &[f64]) -> Result<WindowGeometry> {
        let inv = self.scale;
        let mut segments = Vec::with_capacity(self.num_segments());
        let mut t = Vec::with_capacity(self.num_segments());
        let mut parabolas = Vec::with_capacity(self.num_segments());
        for s in 0..self.num_segments() {
            let pts: Vec<Point2> = self.slots[s]
                .iter()
                .zip(&self.world_fixed[s])
                .map(|(&slot, w)| match w {
                    Some(p) => *p,
                    None => self.point(z, slot) * inv + self.origin,
                })
                .collect();
            segments.push(BezierSegment::new(pts)?);
            t.push(self.t_of(z, s));
            parabolas.push(self.parabola_of(z, s).scaled(1.0 / self.scale));
        }
        let joint_params = self.joints.iter().map(|jv| self.joint_params(z, jv)).collect();
        Ok(WindowGeometry {
            segments,
            t,
            parabolas,
            joint_params,
        })
    }
}

/// Window result in document coordinates.
#[derive(Clone, Debug)]
pub struct WindowGeometry {
    pub segments: Vec<BezierSegment>,
    pub t: Vec<f64>,
    pub parabolas: Vec<ParabolaModel>,
    /// One entry per window joint; `(1, 2)` in parametric modes.
    pub joint_params: Vec<GeometricJointParams>,
}

fn sym(h: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    h[(i, j)] += v;
    if i != j {
        h[(j, i)] += v;
    }
}

impl NlpProblem for SegmentProblem {
    fn dim(&self) -> usize {
        self.start.len()
    }

    fn num_constraints(&self) -> usize {
        2 * (self.num_segments() + self.joints.len() * self.mode.order())
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn objective(&self, z: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let mut total = 0.0;
        for s in 0..self.num_segments() {
            total += self.segment_energy(z, s, grad.as_deref_mut(), true)?;
        }
        Ok(total)
    }

    fn constraints(&self, z: &[f64]) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.num_constraints());
        for row in self.row_templates(z) {
            let mut acc = Point2::ZERO;
            for &(s, j, c) in &row.terms {
                acc += self.point(z, self.slots[s][j]) * c;
            }
            acc -= row.target;
            h.push(acc.x);
            h.push(acc.y);
        }
        h
    }

    fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.num_constraints(), self.dim());
        for (i, row) in self.row_templates(z).iter().enumerate() {
            for &(s, j, c) in &row.terms {
                if let Slot::Var(v) = self.slots[s][j] {
                    jac[(2 * i, 2 * v)] += c;
                    jac[(2 * i + 1, 2 * v + 1)] += c;
                }
            }
            for &(col, d) in &row.dtheta {
                jac[(2 * i, col)] += d.x;
                jac[(2 * i + 1, col)] += d.y;
            }
        }
        jac
    }

    fn restoration_variables(&self) -> &[usize] {
        &self.restore_vars
    }

    // (b0, a2) enter no constraint and the parabolic term is quadratic in
    // them, so they can be set to their exact minimizer after every step.
    fn polish(&self, z: &mut [f64]) {
        for s in 0..self.num_segments() {
            let pts = self.points(z, s);
            let o = self.param_offset(s);
            if let Ok(Some((b0, a2))) = best_vertex_parabola(&self.table, &pts, z[o + 2], Self::speed_eps(&pts)) {
                if b0.is_finite() && a2.is_finite() {
                    z[o] = b0;
                    z[o + 1] = a2;
                }
            }
        }
    }

    fn step_limit(&self, z: &[f64], d: &[f64]) -> f64 {
        let mut limit = 1.0f64;
        let largest = d[..2 * self.point_vars].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if largest > MAX_POINT_STEP {
            limit = MAX_POINT_STEP / largest;
        }
        for jv in &self.joints {
            if let Some(ia) = jv.alpha {
                if d[ia] < 0.0 {
                    limit = limit.min(MAX_ALPHA_SHRINK * z[ia] / -d[ia]);
                }
            }
        }
        limit
    }

    fn lagrangian_hessian(&self, z: &[f64], lambda: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = self.energy_hessian(z).ok()?;
        self.add_constraint_curvature(z, lambda, &mut h);
        Some(h)
    }

    fn max_component_energy(&self, z: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in 0..self.num_segments() {
            worst = worst.max(self.segment_energy(z, s, None, true)?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    /// Three quintics chained by joints with wobbly interior points.
    fn window(mode: ContinuityMode) -> WindowInput {
        let k = mode.degree();
        let mut segments = Vec::new();
        let mut start = p(0.0, 0.0);
        for s in 0..3 {
            let pts: Vec<Point2> = (0..=k)
                .map(|j| {
                    let u = j as f64 / k as f64;
                    let x = s as f64 + u;
                    if j == 0 {
                        start
                    } else {
                        p(x, 0.3 * (2.0 * x).sin() + 0.05 * ((j * 7 + s * 3) % 5) as f64)
                    }
                })
                .collect();
            start = pts[k];
            let curve = BezierSegment::new(pts).unwrap();
            let target = curve.evaluate(0.45).unwrap() + p(0.01, -0.02);
            segments.push(WindowSegmentInput {
                curve,
                target,
                t_hat: 0.45,
                fixed_head: usize::from(s == 0),
                fixed_tail: usize::from(s == 2),
            });
        }
        let joints = (0..2)
            .map(|l| WindowJointInput {
                left: l,
                right: l + 1,
                params: GeometricJointParams { alpha: 1.1, eta: 2.3 },
            })
            .collect();
        WindowInput {
            segments,
            joints,
            mode,
            weights: EnergyWeights::default(),
            rule: QuadratureRule::default(),
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for mode in [ContinuityMode::C1, ContinuityMode::C2, ContinuityMode::G1, ContinuityMode::G2] {
            let prob = SegmentProblem::new(&window(mode)).unwrap();
            let mut z = prob.start().to_vec();
            for (i, v) in z.iter_mut().enumerate() {
                *v += 0.01 * ((i * 13 % 7) as f64 - 3.0) / 3.0;
            }
            let n = prob.dim();
            let m = prob.num_constraints();
            let mut g = vec![0.0; n];
            prob.objective(&z, Some(&mut g)).unwrap();
            let jac = prob.jacobian(&z);
            let lambda: Vec<f64> = (0..m).map(|i| 0.3 - 0.1 * (i % 5) as f64).collect();
            let hl = prob.lagrangian_hessian(&z, &lambda).unwrap();
            let hg = prob.lagrangian_hessian(&z, &vec![0.0; m]).unwrap();
            let curvature = &hl - &hg;
            let oracle = prob.energy_hessian_fd(&z).unwrap();
            let scale = 1.0 + oracle.amax();
            assert!((&hg - &oracle).amax() < 1e-5 * scale, "{mode} energy hessian");
            let h = 1e-6;
            for c in 0..n {
                let mut up = z.clone();
                up[c] += h;
                let mut down = z.clone();
                down[c] -= h;
                let fd = (prob.objective(&up, None).unwrap() - prob.objective(&down, None).unwrap()) / (2.0 * h);
                assert!((fd - g[c]).abs() < 1e-6 * (1.0 + fd.abs()), "{mode} grad {c}: {fd} vs {}", g[c]);
                let (cu, cd) = (prob.constraints(&up), prob.constraints(&down));
                let (ju, jd) = (prob.jacobian(&up), prob.jacobian(&down));
                for r in 0..m {
                    let fd = (cu[r] - cd[r]) / (2.0 * h);
                    assert!((fd - jac[(r, c)]).abs() < 1e-7, "{mode} jac ({r},{c}): {fd} vs {}", jac[(r, c)]);
                }
                // column c of Σ λᵢ ∇²hᵢ
                for col in 0..n {
                    let fd: f64 = (0..m).map(|r| lambda[r] * (ju[(r, col)] - jd[(r, col)])).sum::<f64>() / (2.0 * h);
                    let got = curvature[(col, c)];
                    assert!((fd - got).abs() < 1e-6, "{mode} curvature ({col},{c}): {fd} vs {got}");
                }
            }
        }
    }
}
