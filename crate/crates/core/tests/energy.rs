// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{rng, smooth_segment};
use pkcurve::bezier::BezierSegment;
use pkcurve::energy::{
    curve_length_energy, edge_length_energy, parabolic_energy, segment_energy, segment_energy_gradient, EnergyWeights,
    ParabolaModel, QuadratureRule,
};
use pkcurve::point::Point2;
use proptest::prelude::*;
use rand::Rng;

fn parabola() -> impl Strategy<Value = ParabolaModel> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| ParabolaModel::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energies_are_nonnegative(seed in any::<u64>(), q in parabola()) {
        let seg = smooth_segment(&mut rng(seed), 5);
        prop_assert!(parabolic_energy(&seg, &q, QuadratureRule::default()).unwrap() >= 0.0);
        prop_assert!(edge_length_energy(&seg) >= 0.0);
        prop_assert!(curve_length_energy(&seg) > 0.0);
    }

    #[test]
    fn rigid_motion_invariance(seed in any::<u64>(), q in parabola(), angle in 0.0f64..6.28, shift in -3.0f64..3.0) {
        let seg = smooth_segment(&mut rng(seed), 4);
        let (s, c) = angle.sin_cos();
        let moved = seg.map_points(|p| Point2::new(c * p.x - s * p.y + shift, s * p.x + c * p.y - shift));
        let w = EnergyWeights::default();
        let rule = QuadratureRule::default();
        let a = segment_energy(&seg, &q, w, rule).unwrap();
        let b = segment_energy(&moved, &q, w, rule).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    /// Scaling by `s` scales curvature by `1/s` and speed by `s`, so a
    /// parabola scaled by `1/s` gives `E_p / s`.
    #[test]
    fn parabolic_energy_scaling(seed in any::<u64>(), q in parabola(), s in 0.2f64..5.0) {
        let seg = smooth_segment(&mut rng(seed), 5);
        let big = seg.map_points(|p| p * s);
        let qs = ParabolaModel::new(q.a0 / s, q.a1 / s, q.a2 / s);
        let rule = QuadratureRule::default();
        let a = parabolic_energy(&seg, &q, rule).unwrap() / s;
        let b = parabolic_energy(&big, &qs, rule).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-3));
    }

    #[test]
    fn vertex_form_couples_exactly(base in -5.0f64..5.0, a2 in -5.0f64..5.0, t in 0.0f64..1.0) {
        let q = ParabolaModel::from_vertex(base, a2, t);
        prop_assert!((q.a1 + 2.0 * q.a2 * t).abs() <= 1e-15 * (1.0 + q.a1.abs()));
    }
}

#[test]
fn gradient_matches_differences_on_cubics_and_quartics() {
    let mut r = rng(11);
    let rule = QuadratureRule::default();
    let w = EnergyWeights::default();
    for k in [3, 4] {
        for _ in 0..10 {
            let seg = smooth_segment(&mut r, k);
            let q = ParabolaModel::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let g = segment_energy_gradient(&seg, &q, w, rule).unwrap();
            assert_eq!(g.len(), 2 * (k + 1) + 3);
            let h = 1e-6;
            let bump = |j: usize, d: f64| {
                let mut pts = seg.control_points().to_vec();
                if j % 2 == 0 {
                    pts[j / 2].x += d;
                } else {
                    pts[j / 2].y += d;
                }
                segment_energy(&BezierSegment::new(pts).unwrap(), &q, w, rule).unwrap()
            };
            let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for j in 0..2 * (k + 1) {
                let fd = (bump(j, h) - bump(j, -h)) / (2.0 * h);
                assert!((g[j] - fd).abs() <= 1e-5 * fd.abs().max(1e-3 * peak), "k={k} j={j}: {} vs {fd}", g[j]);
            }
        }
    }
}

#[test]
fn shallow_arc_prefers_its_own_curvature() {
    // a shallow parabolic arc has nearly constant curvature
    let seg = BezierSegment::new(vec![Point2::new(0.0, 0.0), Point2::new(0.5, 0.05), Point2::new(1.0, 0.0)])
        .unwrap()
        .elevate_to(5)
        .unwrap();
    let mid = seg.curvature(0.5).unwrap();
    let e = parabolic_energy(&seg, &ParabolaModel::new(mid, 0.0, 0.0), QuadratureRule::default()).unwrap();
    let off = parabolic_energy(&seg, &ParabolaModel::new(mid + 1.0, 0.0, 0.0), QuadratureRule::default()).unwrap();
    assert!(e < off);
}

#[test]
fn refined_quadrature_converges() {
    let mut r = rng(12);
    let seg = smooth_segment(&mut r, 5);
    let q = ParabolaModel::new(0.3, -0.2, 0.1);
    let fine = parabolic_energy(&seg, &q, QuadratureRule::new(4000).unwrap()).unwrap();
    let mut prev = f64::INFINITY;
    for n in [10, 40, 160] {
        let err = (parabolic_energy(&seg, &q, QuadratureRule::new(n).unwrap()).unwrap() - fine).abs();
        assert!(err <= prev, "n={n}: {err:e} after {prev:e}");
        prev = err;
    }
    assert!(QuadratureRule::new(0).is_err());
}
