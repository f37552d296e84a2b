// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Fairing energies of a single segment.
//!
//! * parabolic term: `∫₀¹ (κ(t) − Q(t))² ‖P′(t)‖ dt`, integrated with the
//!   composite Simpson rule,
//! * edge term: squared differences of consecutive squared leg lengths,
//! * length term: sum of squared leg lengths.
//!
//! Gradients differentiate the discretized objective, so they are exact for
//! the value returned by the same rule.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::bezier::{BasisTable, BezierSegment};
use crate::error::{Error, Result};
use crate::point::Point2;

/// Below this |a2| (in bounding-box-normalized units) a parabola is treated
/// as having no interior extremum.
pub const A2_MIN: f64 = 1e-8;

/// `Q(t) = a0 + a1 t + a2 t²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct ParabolaModel {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl ParabolaModel {
    pub const ZERO: ParabolaModel = ParabolaModel { a0: 0.0, a1: 0.0, a2: 0.0 };

    pub const fn new(a0: f64, a1: f64, a2: f64) -> Self {
        ParabolaModel { a0, a1, a2 }
    }

    /// Parabola `base + a2 (t − vertex)²`; the extremum coupling
    /// `a1 + 2 a2 vertex = 0` holds exactly.
    pub fn from_vertex(base: f64, a2: f64, vertex: f64) -> Self {
        let slope = 2.0 * a2 * vertex;
        ParabolaModel {
            a0: base + a2 * vertex * vertex,
            a1: -slope,
            a2,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.a0 + t * (self.a1 + t * self.a2)
    }

    /// Parameter of the extremum, `−a1 / (2 a2)`, if `|a2| ≥ a2_min`.
    pub fn extremum(&self, a2_min: f64) -> Option<f64> {
        (self.a2.abs() >= a2_min).then(|| -self.a1 / (2.0 * self.a2))
    }

    /// `a1 + 2 a2 t`.
    pub fn coupling_residual(&self, t: f64) -> f64 {
        self.a1 + 2.0 * self.a2 * t
    }

    /// Every coefficient multiplied by `s` (curvature rescaling).
    pub fn scaled(&self, s: f64) -> Self {
        ParabolaModel::new(self.a0 * s, self.a1 * s, self.a2 * s)
    }

    pub fn is_finite(&self) -> bool {
        self.a0.is_finite() && self.a1.is_finite() && self.a2.is_finite()
    }
}

impl From<[f64; 3]> for ParabolaModel {
    fn from([a0, a1, a2]: [f64; 3]) -> Self {
        ParabolaModel { a0, a1, a2 }
    }
}

impl From<ParabolaModel> for [f64; 3] {
    fn from(p: ParabolaModel) -> Self {
        [p.a0, p.a1, p.a2]
    }
}

/// Weights of the edge and length terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyWeights {
    pub lambda_e: f64,
    pub lambda_c: f64,
}

impl EnergyWeights {
    pub const ZERO: EnergyWeights = EnergyWeights { lambda_e: 0.0, lambda_c: 0.0 };

    pub fn new(lambda_e: f64, lambda_c: f64) -> Result<Self> {
        let w = EnergyWeights { lambda_e, lambda_c };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_e", self.lambda_e), ("lambda_c", self.lambda_c)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights {
            lambda_e: 0.1,
            lambda_c: 0.1,
        }
    }
}

/// Composite Simpson rule over equal sub-intervals of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub subintervals: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { subintervals: 100 }
    }
}

impl QuadratureRule {
    pub fn new(subintervals: usize) -> Result<Self> {
        if subintervals == 0 {
            return Err(Error::Argument("quadrature needs at least one sub-interval".into()));
        }
        Ok(QuadratureRule { subintervals })
    }

    /// `2n + 1` nodes; sub-interval endpoints are shared.
    pub fn nodes(&self) -> Vec<f64> {
        let m = 2 * self.subintervals;
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let n = self.subintervals;
        let h = 1.0 / n as f64;
        let mut w = vec![0.0; 2 * n + 1];
        for s in 0..n {
            w[2 * s] += h / 6.0;
            w[2 * s + 1] += 4.0 * h / 6.0;
            w[2 * s + 2] += h / 6.0;
        }
        w
    }

    /// Integrates a scalar function with this rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes()
            .iter()
            .zip(self.weights())
            .map(|(&t, w)| w * f(t))
            .sum()
    }
}

/// Bernstein tables and Simpson weights for one (degree, rule) pair.
#[derive(Debug)]
pub struct QuadratureTable {
    pub basis: BasisTable,
    pub weights: Vec<f64>,
    /// `(1, t, t²)` per node.
    pub powers: Vec<[f64; 3]>,
}

impl QuadratureTable {
    pub fn new(degree: usize, rule: QuadratureRule) -> Self {
        let nodes = rule.nodes();
        let powers = nodes.iter().map(|&t| [1.0, t, t * t]).collect();
        QuadratureTable {
            basis: BasisTable::new(degree, nodes),
            weights: rule.weights(),
            powers,
        }
    }

    /// Shared table for a (degree, rule) pair.
    pub fn cached(degree: usize, rule: QuadratureRule) -> Arc<QuadratureTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<QuadratureTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry((degree, rule.subintervals))
            .or_insert_with(|| Arc::new(QuadratureTable::new(degree, rule)))
            .clone()
    }
}

/// Parabolic term of one segment, optionally accumulating its gradient.
///
/// `grad`, when given, has length `2 (k + 1) + 3` and is laid out as
/// `[c0.x, c0.y, c1.x, …, a0, a1, a2]`; the contribution is added.
pub(crate) fn parabolic_term(
    table: &QuadratureTable,
    points: &[Point2],
    parabola: &ParabolaModel,
    speed_eps: f64,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let k = table.basis.degree;
    debug_assert_eq!(points.len(), k + 1);
    let mut total = 0.0;
    for (i, &w) in table.weights.iter().enumerate() {
        let d1b = &table.basis.d1[i];
        let d2b = &table.basis.d2[i];
        let mut d1 = Point2::ZERO;
        let mut d2 = Point2::ZERO;
        for j in 0..=k {
            d1 += points[j] * d1b[j];
            d2 += points[j] * d2b[j];
        }
        let speed = d1.norm();
        if !(speed > speed_eps) {
            return Err(Error::DegenerateSpeed {
                t: table.basis.nodes[i],
            });
        }
        let cross = d1.cross(d2);
        let s3 = speed * speed * speed;
        let kappa = cross / s3;
        let pw = table.powers[i];
        let q = parabola.a0 * pw[0] + parabola.a1 * pw[1] + parabola.a2 * pw[2];
        let r = kappa - q;
        total += w * r * r * speed;

        if let Some(g) = grad.as_deref_mut() {
            // F = r² s, dF = 2 r s dκ + r² ds, dκ = dcross / s³ − 3 κ ds / s
            let a = 2.0 * r * speed * w;
            let b = r * r * w;
            let inv_s3 = 1.0 / s3;
            let kappa_over_s = 3.0 * kappa / speed;
            for j in 0..=k {
                let (p, q2) = (d1b[j], d2b[j]);
                let ds_x = d1.x * p / speed;
                let ds_y = d1.y * p / speed;
                let dc_x = p * d2.y - d1.y * q2;
                let dc_y = d1.x * q2 - p * d2.x;
                g[2 * j] += a * (dc_x * inv_s3 - kappa_over_s * ds_x) + b * ds_x;
                g[2 * j + 1] += a * (dc_y * inv_s3 - kappa_over_s * ds_y) + b * ds_y;
            }
            let off = 2 * (k + 1);
            for m in 0..3 {
                g[off + m] -= a * pw[m];
            }
        }
    }
    Ok(total)
}

/// Vertex-form parabola `(b0, a2)` with axis `t` that minimizes the
/// parabolic term for fixed control points; `None` if the normal
/// equations are singular.
pub(crate) fn best_vertex_parabola(
    table: &QuadratureTable,
    points: &[Point2],
    t: f64,
    speed_eps: f64,
) -> Result<Option<(f64, f64)>> {
    let k = table.basis.degree;
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &w) in table.weights.iter().enumerate() {
        let mut d1 = Point2::ZERO;
        let mut d2 = Point2::ZERO;
        for j in 0..=k {
            d1 += points[j] * table.basis.d1[i][j];
            d2 += points[j] * table.basis.d2[i][j];
        }
        let speed = d1.norm();
        if !(speed > speed_eps) {
            return Err(Error::DegenerateSpeed {
                t: table.basis.nodes[i],
            });
        }
        let kappa = d1.cross(d2) / (speed * speed * speed);
        let u = (table.basis.nodes[i] - t).powi(2);
        let ws = w * speed;
        s00 += ws;
        s01 += ws * u;
        s11 += ws * u * u;
        r0 += ws * kappa;
        r1 += ws * u * kappa;
    }
    let det = s00 * s11 - s01 * s01;
    if !(det > 1e-14 * s00 * s11) {
        return Ok(None);
    }
    Ok(Some(((s11 * r0 - s01 * r1) / det, (s00 * r1 - s01 * r0) / det)))
}

/// Edge term, accumulating into an interleaved control-point gradient.
pub(crate) fn edge_term(points: &[Point2], grad: Option<&mut [f64]>, scale: f64) -> f64 {
    let legs: Vec<Point2> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let lens: Vec<f64> = legs.iter().map(|l| l.norm_squared()).collect();
    let mut total = 0.0;
    let mut g = grad;
    for j in 0..lens.len().saturating_sub(1) {
        let d = lens[j] - lens[j + 1];
        total += d * d;
        if let Some(g) = g.as_deref_mut() {
            // ∂L_j/∂c_{j+1} = 2 leg_j, ∂L_j/∂c_j = −2 leg_j
            let f = 2.0 * d * scale;
            let lj = legs[j] * (2.0 * f);
            let lj1 = legs[j + 1] * (2.0 * f);
            add_point(g, j, -lj);
            add_point(g, j + 1, lj);
            add_point(g, j + 1, lj1);
            add_point(g, j + 2, -lj1);
        }
    }
    total
}

/// Length term, accumulating into an interleaved control-point gradient.
pub(crate) fn length_term(points: &[Point2], mut grad: Option<&mut [f64]>, scale: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..points.len().saturating_sub(1) {
        let leg = points[j + 1] - points[j];
        total += leg.norm_squared();
        if let Some(g) = grad.as_deref_mut() {
            let d = leg * (2.0 * scale);
            add_point(g, j + 1, d);
            add_point(g, j, -d);
        }
    }
    total
}

#[inline]
fn add_point(g: &mut [f64], j: usize, v: Point2) {
    g[2 * j] += v.x;
    g[2 * j + 1] += v.y;
}

/// `∫₀¹ (κ − Q)² ‖P′‖ dt` by the composite Simpson rule.
pub fn parabolic_energy(seg: &BezierSegment, parabola: &ParabolaModel, rule: QuadratureRule) -> Result<f64> {
    let table = QuadratureTable::cached(seg.degree(), rule);
    parabolic_term(&table, seg.control_points(), parabola, seg.speed_epsilon(), None)
}

/// Variation of squared leg lengths of the control polygon.
pub fn edge_length_energy(seg: &BezierSegment) -> f64 {
    edge_term(seg.control_points(), None, 1.0)
}

/// Sum of squared leg lengths of the control polygon.
pub fn curve_length_energy(seg: &BezierSegment) -> f64 {
    length_term(seg.control_points(), None, 1.0)
}

/// `E_p + λ_e E_e + λ_c E_c`.
pub fn segment_energy(
    seg: &BezierSegment,
    parabola: &ParabolaModel,
    weights: EnergyWeights,
    rule: QuadratureRule,
) -> Result<f64> {
    Ok(parabolic_energy(seg, parabola, rule)?
        + weights.lambda_e * edge_length_energy(seg)
        + weights.lambda_c * curve_length_energy(seg))
}

/// Gradient of [`segment_energy`] with respect to
/// `[c0.x, c0.y, …, ck.x, ck.y, a0, a1, a2]`.
pub fn segment_energy_gradient(
    seg: &BezierSegment,
    parabola: &ParabolaModel,
    weights: EnergyWeights,
    rule: QuadratureRule,
) -> Result<Vec<f64>> {
    let pts = seg.control_points();
    let table = QuadratureTable::cached(seg.degree(), rule);
    let mut g = vec![0.0; 2 * pts.len() + 3];
    parabolic_term(&table, pts, parabola, seg.speed_epsilon(), Some(&mut g))?;
    if weights.lambda_e != 0.0 {
        edge_term(pts, Some(&mut g), weights.lambda_e);
    }
    if weights.lambda_c != 0.0 {
        length_term(pts, Some(&mut g), weights.lambda_c);
    }
    Ok(g)
}
