//! Curvature, closedness and self-intersections of parametric curves.

use serde::Serialize;

use crate::autocorr::CurveAcSolver;
use crate::error::{Error, Result};
use crate::geom2d::Vec2;
use crate::measures::CurveSpec;

/// Speeds below this make a curve irregular.
pub const MIN_SPEED: f64 = 1e-9;
/// Tangent-line angle (radians) above which a crossing counts as transverse.
pub const TRANSVERSE_ANGLE: f64 = 1e-4;
/// Cells on each side of the diagonal skipped by the intersection scan.
pub const DIAGONAL_BAND_CELLS: usize = 4;
pub const MAX_INTERSECTIONS: usize = 64;
pub const DEFAULT_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureRange {
    pub min: f64,
    pub max: f64,
    pub argmin: f64,
    pub argmax: f64,
}

/// Signed curvature `cross(γ′, γ″)/‖γ′‖³` in scene coordinates.
pub fn curvature(c: &CurveSpec, t: f64) -> f64 {
    let (_, d1, d2) = c.jet(t);
    d1.cross(d2) / d1.norm().powi(3)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Sampled extremes of the signed curvature, refined by golden-section search.
pub fn curvature_range(c: &CurveSpec, samples: usize) -> Result<CurvatureRange> {
    let samples = samples.max(8);
    let (lo, hi) = c.domain;
    let h = (hi - lo) / samples as f64;
    let ts: Vec<f64> = (0..=samples).map(|i| lo + i as f64 * h).collect();
    let mut ks = Vec::with_capacity(ts.len());
    for t in &ts {
        let speed = c.speed(*t);
        if speed.is_nan() || speed < MIN_SPEED {
            return Err(Error::IrregularCurve { t: *t, speed });
        }
        ks.push(curvature(c, *t));
    }
    let refine = |k: usize, sign: f64| -> (f64, f64) {
        let a = ts[k.saturating_sub(1)];
        let b = ts[(k + 1).min(samples)];
        let (t, v) = golden_min(|t| sign * curvature(c, t), a, b);
        // Keep the sample if refinement did not improve it.
        if v <= sign * ks[k] {
            (t, sign * v)
        } else {
            (ts[k], ks[k])
        }
    };
    let kmin = (0..ks.len()).min_by(|a, b| ks[*a].total_cmp(&ks[*b])).unwrap_or(0);
    let kmax = (0..ks.len()).max_by(|a, b| ks[*a].total_cmp(&ks[*b])).unwrap_or(0);
    let (argmin, min) = refine(kmin, 1.0);
    let (argmax, max) = refine(kmax, -1.0);
    Ok(CurvatureRange {
        min,
        max,
        argmin,
        argmax,
    })
}

/// `γ`, `γ′`, `γ″` agree at the domain endpoints within `1e-9` relative.
pub fn is_closed_smooth(c: &CurveSpec) -> bool {
    c.is_periodic()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionRecord {
    pub point: Vec2,
    /// Distinct parameters visiting `point`, sorted.
    pub params: Vec<f64>,
    pub transverse: bool,
    /// Smallest angle between the tangent lines of any two visits.
    pub min_tangent_angle: f64,
}

/// Angle in `[0, π/2]` between the lines spanned by `a` and `b`.
fn line_angle_between(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).abs().atan2(a.dot(b).abs())
}

/// Self-intersection points with `s ≠ t`, found on a `grid × grid` parameter mesh.
pub fn self_intersections(c: &CurveSpec, grid: usize) -> Result<Vec<IntersectionRecord>> {
    let solver = CurveAcSolver::new(c, grid)?;
    let roots = solver.roots(Vec2::ZERO, DIAGONAL_BAND_CELLS);
    let tol = 1e-8 * c.extent().max(1.0);
    let mut records: Vec<IntersectionRecord> = Vec::new();
    for (s, t) in roots {
        let p = c.point(s);
        let rec = match records.iter_mut().find(|r| r.point.distance(p) <= tol) {
            Some(r) => r,
            None => {
                records.push(IntersectionRecord {
                    point: p,
                    params: Vec::new(),
                    transverse: true,
                    min_tangent_angle: f64::INFINITY,
                });
                records.last_mut().expect("just pushed")
            }
        };
        for x in [s, t] {
            if !rec.params.iter().any(|y| solver.parameter_distance(*y, x) <= 1e-6) {
                rec.params.push(x);
            }
        }
    }
    if records.len() > MAX_INTERSECTIONS {
        return Err(Error::TooManyIntersections {
            count: records.len(),
            limit: MAX_INTERSECTIONS,
        });
    }
    for r in &mut records {
        r.params.sort_by(f64::total_cmp);
        r.point = r.params.iter().fold(Vec2::ZERO, |a, t| a + c.point(*t)) * (1.0 / r.params.len() as f64);
        let mut angle = f64::INFINITY;
        for (i, a) in r.params.iter().enumerate() {
            for b in &r.params[i + 1..] {
                angle = angle.min(line_angle_between(c.tangent(*a), c.tangent(*b)));
            }
        }
        r.min_tangent_angle = angle;
        r.transverse = angle > TRANSVERSE_ANGLE;
    }
    records.sort_by(|a, b| a.point.x.total_cmp(&b.point.x).then(a.point.y.total_cmp(&b.point.y)));
    Ok(records)
}

/// Everything the curve classifier needs, bundled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub family: &'static str,
    pub closed: bool,
    pub curvature: Option<CurvatureRange>,
    pub intersections: Option<Vec<IntersectionRecord>>,
    pub grid: usize,
    pub samples: usize,
    pub arc_length: f64,
    pub errors: Vec<String>,
}

pub fn curve_report(c: &CurveSpec, samples: usize, grid: usize) -> CurveReport {
    let mut errors = Vec::new();
    let curvature = curvature_range(c, samples).map_err(|e| errors.push(e.to_string())).ok();
    let intersections = self_intersections(c, grid).map_err(|e| errors.push(e.to_string())).ok();
    CurveReport {
        family: c.family.name(),
        closed: is_closed_smooth(c),
        curvature,
        intersections,
        grid,
        samples,
        arc_length: c.arc_length(),
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::geom2d::Similarity;
    use crate::measures::CurveFamily;
    use std::f64::consts::PI;

    fn curve(s: crate::measures::SceneMeasure) -> CurveSpec {
        s.curves[0].clone()
    }

    #[test]
    fn curvature_examples() {
        let k = curvature_range(&curve(catalog::circle()), 512).unwrap();
        assert!((k.min - 1.0).abs() < 1e-12 && (k.max - 1.0).abs() < 1e-12);
        let k = curvature_range(&curve(catalog::ellipse(2.0, 1.0)), 512).unwrap();
        assert!((k.min - 0.25).abs() < 1e-9, "{k:?}");
        assert!((k.max - 2.0).abs() < 1e-9, "{k:?}");
        let k = curvature_range(&curve(catalog::limacon(1.0, 2.0)), 512).unwrap();
        assert!(k.min > 0.1, "{k:?}");
    }

    #[test]
    fn limacon_curvature_matches_polar_formula() {
        let c = curve(catalog::limacon(1.0, 2.0));
        for i in 0..50 {
            let th = 2.0 * PI * i as f64 / 50.0;
            let (r, r1, r2) = (1.0 + 2.0 * th.cos(), -2.0 * th.sin(), -2.0 * th.cos());
            let polar = (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5);
            assert!((curvature(&c, th) - polar).abs() < 1e-12);
            // Numerator 9 + 6cos θ ≥ 3.
            assert!(((r * r + 2.0 * r1 * r1 - r * r2) - (9.0 + 6.0 * th.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn irregular_curve_is_rejected() {
        // Cardioid r = 1 + cos θ has zero speed at θ = π.
        let c = CurveSpec::new(CurveFamily::Limacon { a: 1.0, b: 1.0 }).unwrap();
        let (lo, hi) = c.domain;
        let samples = 512;
        assert!((lo + (hi - lo) * 256.0 / samples as f64 - PI).abs() < 1e-15);
        assert!(matches!(curvature_range(&c, samples), Err(Error::IrregularCurve { .. })));
    }

    #[test]
    fn closedness() {
        assert!(is_closed_smooth(&curve(catalog::circle())));
        assert!(is_closed_smooth(&curve(catalog::limacon(1.0, 2.0))));
        assert!(!is_closed_smooth(&curve(catalog::semicircle_arclength())));
    }

    #[test]
    fn intersection_examples() {
        assert!(self_intersections(&curve(catalog::circle()), 256).unwrap().is_empty());
        assert!(self_intersections(&curve(catalog::ellipse(2.0, 1.0)), 256).unwrap().is_empty());
        let recs = self_intersections(&curve(catalog::limacon(1.0, 2.0)), 256).unwrap();
        assert_eq!(recs.len(), 1, "{recs:?}");
        let r = &recs[0];
        assert!(r.point.norm() <= 1e-9, "{:?}", r.point);
        assert_eq!(r.params.len(), 2);
        assert!((r.params[0] - 2.0 * PI / 3.0).abs() < 1e-8);
        assert!((r.params[1] - 4.0 * PI / 3.0).abs() < 1e-8);
        assert!(r.transverse);
        let c = curve(catalog::limacon(1.0, 2.0));
        let j = c.tangent(r.params[1]).cross(c.tangent(r.params[0]));
        assert!(j.abs() > 1e-8);
    }

    #[test]
    fn brute_force_grid_agrees() {
        // Minimum of |γ(s) − γ(t)| over a coarse off-diagonal grid is only
        // small near the known crossing.
        let c = curve(catalog::limacon(1.0, 2.0));
        let n = 600;
        let ts: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let mut hits = 0;
        for i in 0..n {
            for j in i + 1..n {
                if (j - i).min(n - (j - i)) < 20 {
                    continue;
                }
                if c.point(ts[i]).distance(c.point(ts[j])) < 2e-2 {
                    assert!(c.point(ts[i]).norm() < 0.05, "{} {}", ts[i], ts[j]);
                    hits += 1;
                }
            }
        }
        assert!(hits > 0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_under_similarity(dx in -3.0..3.0f64, dy in -3.0..3.0f64, rot in 0.0..std::f64::consts::TAU, scale in 0.3..3.0f64) {
            let m = Similarity::new(Vec2::new(dx, dy), rot, scale);
            let base = curve(catalog::limacon(1.0, 2.0));
            let moved = base.moved(&m);
            let k0 = curvature_range(&base, 512).unwrap();
            let k1 = curvature_range(&moved, 512).unwrap();
            proptest::prop_assert!((k1.min * scale - k0.min).abs() < 1e-9);
            proptest::prop_assert!((k1.max * scale - k0.max).abs() < 1e-9);
            let r0 = self_intersections(&base, 128).unwrap();
            let r1 = self_intersections(&moved, 128).unwrap();
            proptest::prop_assert_eq!(r0.len(), r1.len());
            proptest::prop_assert!(m.apply_point(r0[0].point).distance(r1[0].point) < 1e-8);
        }
    }
}
