//! Fourier transforms `μ̂(ξ) = ∫ e^{−2πi ξ·x} dμ(x)` of scene measures.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom2d::Vec2;
use crate::measures::{CurveSpec, SceneMeasure, SegmentMeasure};
use crate::quadrature;

pub type FtValue = Complex64;

/// Minimum panel count for curve quadrature.
pub const MIN_PANELS: usize = 32;
/// Largest accepted difference between successive panel refinements.
pub const QUADRATURE_TOL: f64 = 1e-7;
const MAX_DOUBLINGS: u32 = 3;
/// Phase budget (radians) per 16-point panel of a [`CurveRule`].
const BULK_PANEL_PHASE: f64 = 12.0;

/// `(sin πx, cos πx)` with exact reduction of the argument to `[−1, 1]`.
pub fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (0.5 * x).round();
    (PI * r).sin_cos()
}

pub fn sin_pi(x: f64) -> f64 {
    sin_cos_pi(x).0
}

pub fn cos_pi(x: f64) -> f64 {
    sin_cos_pi(x).1
}

/// `sin(πu)/(πu)` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        let z = (PI * u) * (PI * u);
        1.0 - z / 6.0 * (1.0 - z / 20.0 * (1.0 - z / 42.0))
    } else {
        sin_pi(u) / (PI * u)
    }
}

/// `e^{−2πi t}`.
pub fn cis_neg(t: f64) -> Complex64 {
    let (s, c) = sin_cos_pi(2.0 * t);
    Complex64::new(c, -s)
}

pub fn ft_segment(s: &SegmentMeasure, xi: Vec2) -> FtValue {
    let mid = s.segment.start + s.segment.dir * 0.5;
    cis_neg(xi.dot(mid)) * (s.weight * sinc(xi.dot(s.segment.dir)))
}

fn ft_segment_part(scene: &SceneMeasure, xi: Vec2) -> FtValue {
    scene.segments.iter().map(|s| ft_segment(s, xi)).sum()
}

/// Closed-form transform of a segment scene.
pub fn ft_segments(scene: &SceneMeasure, xi: Vec2) -> Result<FtValue> {
    if !scene.is_segments_only() {
        return Err(Error::UnsupportedForCurves);
    }
    Ok(ft_segment_part(scene, xi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFt {
    pub value: FtValue,
    /// `|I(P) − I(2P)|` for the final panel count.
    pub error: f64,
    pub panels: usize,
}

/// Composite-rule nodes over the smooth pieces of `c`, panels shared in
/// proportion to piece length.
fn curve_nodes(c: &CurveSpec, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let total = c.domain_length();
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for (a, b) in c.smooth_pieces() {
        let p = ((panels as f64 * (b - a) / total).ceil() as usize).max(2);
        let (t, w) = quadrature::composite_nodes(a, b, p, order);
        ts.extend(t);
        ws.extend(w);
    }
    (ts, ws)
}

fn curve_sum(c: &CurveSpec, xi: Vec2, panels: usize) -> FtValue {
    let (ts, ws) = curve_nodes(c, panels, 8);
    ts.iter()
        .zip(&ws)
        .map(|(t, w)| cis_neg(xi.dot(c.point(*t))) * (w * c.density(*t)))
        .sum()
}

/// Transform of a curve measure by panel-doubling Gauss–Legendre quadrature.
pub fn ft_curve(c: &CurveSpec, xi: Vec2) -> Result<CurveFt> {
    let extent = c.extent();
    let mut panels = MIN_PANELS.max((8.0 * (1.0 + xi.norm() * extent)).ceil() as usize);
    let mut coarse = curve_sum(c, xi, panels);
    let mut error = f64::INFINITY;
    for _ in 0..=MAX_DOUBLINGS {
        let fine = curve_sum(c, xi, 2 * panels);
        error = (fine - coarse).norm();
        panels *= 2;
        if error <= QUADRATURE_TOL {
            return Ok(CurveFt {
                value: fine,
                error,
                panels,
            });
        }
        coarse = fine;
    }
    Err(Error::QuadratureFailure { difference: error })
}

/// `μ̂(ξ)` for any scene: closed form on segments, quadrature on curves.
pub fn ft(scene: &SceneMeasure, xi: Vec2) -> Result<FtValue> {
    let mut v = ft_segment_part(scene, xi);
    for c in &scene.curves {
        v += ft_curve(c, xi)?.value;
    }
    Ok(v)
}

/// `|μ̂(ξ)|²`.
pub fn power(scene: &SceneMeasure, xi: Vec2) -> Result<f64> {
    Ok(ft(scene, xi)?.norm_sqr())
}

/// A fixed quadrature rule for one curve, accurate for all `‖ξ‖ ≤ xi_max`.
#[derive(Debug, Clone)]
pub struct CurveRule {
    pub points: Vec<Vec2>,
    /// Quadrature weight times measure density at each node.
    pub weights: Vec<f64>,
    pub xi_max: f64,
}

impl CurveRule {
    pub fn new(c: &CurveSpec, xi_max: f64) -> Self {
        let max_speed = c.family.speed_bound() * c.placement.scale;
        let phase = 2.0 * PI * xi_max * max_speed * c.domain_length();
        let panels = 64.max((phase / BULK_PANEL_PHASE).ceil() as usize);
        let (ts, ws) = curve_nodes(c, panels, 16);
        let points = ts.iter().map(|t| c.point(*t)).collect();
        let weights = ts.iter().zip(&ws).map(|(t, w)| w * c.density(*t)).collect();
        Self {
            points,
            weights,
            xi_max,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn eval(&self, xi: Vec2) -> FtValue {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| cis_neg(xi.dot(*p)) * *w)
            .sum()
    }
}

/// Below this `|ξ·v|` the factored segment formula loses digits to cancellation.
const FACTORED_MIN: f64 = 1e-2;

/// Adds `w·e^{−2πi ξ·a}·(1 − e^{−2πi ξ·v})/(2πi ξ·v)` at `ξ = x − λ`, with every
/// exponential split into an `x` factor and a `λ` factor.
fn add_segment_amplitudes(s: &SegmentMeasure, xs: &[Vec2], lambdas: &[Vec2], out: &mut Array2<Complex64>) {
    let (a, v) = (s.segment.start, s.segment.dir);
    let row: Vec<(Complex64, Complex64, f64)> = xs.iter().map(|x| (cis_neg(x.dot(a)), cis_neg(x.dot(v)), x.dot(v))).collect();
    let col: Vec<(Complex64, Complex64, f64)> = lambdas
        .iter()
        .map(|l| (cis_neg(-l.dot(a)), cis_neg(-l.dot(v)), l.dot(v)))
        .collect();
    let scale = Complex64::new(0.0, 2.0 * PI);
    for (i, (ax, bx, fx)) in row.iter().enumerate() {
        for (j, (al, bl, fl)) in col.iter().enumerate() {
            let f = fx - fl;
            let base = ax * al;
            out[[i, j]] += if f.abs() < FACTORED_MIN {
                base * cis_neg(0.5 * f) * (s.weight * sinc(f))
            } else {
                base * (Complex64::new(1.0, 0.0) - bx * bl) * s.weight / (scale * f)
            };
        }
    }
}

/// `μ̂(x − λ)` for every `x` in `xs` (rows) and `λ` in `lambdas` (columns).
///
/// Curve terms factor as `e^{−2πi x·γ}·e^{2πi λ·γ}` and are evaluated as
/// real matrix products over one [`CurveRule`] per curve.
pub fn shifted_amplitudes(scene: &SceneMeasure, xs: &[Vec2], lambdas: &[Vec2]) -> Array2<Complex64> {
    let (nx, nl) = (xs.len(), lambdas.len());
    let mut out = Array2::<Complex64>::zeros((nx, nl));
    for s in &scene.segments {
        add_segment_amplitudes(s, xs, lambdas, &mut out);
    }
    if scene.curves.is_empty() || nx == 0 || nl == 0 {
        return out;
    }
    let xr = xs.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let lr = lambdas.iter().map(|p| p.norm()).fold(0.0, f64::max);
    for c in &scene.curves {
        let rule = CurveRule::new(c, xr + lr);
        let nk = rule.len();
        let mut gr = Array2::<f64>::zeros((nx, nk));
        let mut gi = Array2::<f64>::zeros((nx, nk));
        for (i, x) in xs.iter().enumerate() {
            for (k, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let z = cis_neg(x.dot(*p)) * *w;
                gr[[i, k]] = z.re;
                gi[[i, k]] = z.im;
            }
        }
        let mut lr_ = Array2::<f64>::zeros((nk, nl));
        let mut li = Array2::<f64>::zeros((nk, nl));
        for (k, p) in rule.points.iter().enumerate() {
            for (j, l) in lambdas.iter().enumerate() {
                let z = cis_neg(-l.dot(*p));
                lr_[[k, j]] = z.re;
                li[[k, j]] = z.im;
            }
        }
        let re = gr.dot(&lr_) - gi.dot(&li);
        let im = gr.dot(&li) + gi.dot(&lr_);
        ndarray::Zip::from(&mut out)
            .and(&re)
            .and(&im)
            .for_each(|o, r, i| *o += Complex64::new(*r, *i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn riemann(scene: &SceneMeasure, xi: Vec2, n: usize) -> FtValue {
        // midpoint rule per segment
        let mut v = Complex64::new(0.0, 0.0);
        for s in &scene.segments {
            for k in 0..n {
                let t = (k as f64 + 0.5) / n as f64;
                let p = s.segment.point_at(t);
                let ph = -2.0 * PI * xi.dot(p);
                v += Complex64::new(ph.cos(), ph.sin()) * (s.weight / n as f64);
            }
        }
        v
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(1.0).abs() < 1e-16);
        assert!(sinc(1e6).abs() < 1e-16);
        let u = 9e-7;
        let direct = (PI * u).sin() / (PI * u);
        assert!((sinc(u) - direct).abs() < 1e-15);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn segment_examples() {
        for s in [catalog::square(), catalog::l_shape(), catalog::pi_shape()] {
            assert_eq!(ft_segments(&s, Vec2::ZERO).unwrap(), Complex64::new(1.0, 0.0));
        }
        let v = ft_segments(&catalog::unit_segment(), Vec2::new(1.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-16);
        let l = catalog::l_shape();
        for k in [-7, -3, -1, 1, 5, 9] {
            let xi = Vec2::new(k as f64 / 2.0, -k as f64 / 2.0);
            assert!(ft_segments(&l, xi).unwrap().norm() < 1e-15, "k = {k}");
            assert!(riemann(&l, xi, 10_000).norm() <= 1e-8);
        }
    }

    #[test]
    fn stacked_power_closed_form() {
        let s = catalog::stacked_segments();
        let p = power(&s, Vec2::new(0.5, 0.25)).unwrap();
        let expected = (2.0 / PI).powi(2) * 0.5;
        assert!((p - expected).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let xi = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let closed = sinc(xi.x).powi(2) * cos_pi(xi.y).powi(2);
            assert!((power(&s, xi).unwrap() - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_riemann_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.gen_range(1..5);
            let segs: Vec<_> = (0..n)
                .map(|_| {
                    crate::geom2d::Segment::new(
                        Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                    .unwrap()
                })
                .collect();
            let scene = SceneMeasure::uniform_segments(&segs);
            let xi = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let a = ft_segments(&scene, xi).unwrap();
            let b = riemann(&scene, xi, 10_000);
            assert!((a - b).norm() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn curve_transform_at_zero_is_mass() {
        for s in [catalog::circle(), catalog::limacon(1.0, 2.0), catalog::semicircle_pushforward()] {
            let v = ft_curve(&s.curves[0], Vec2::ZERO).unwrap().value;
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn semicircle_pushforward_on_axis_is_sinc() {
        let c = &catalog::semicircle_pushforward().curves[0];
        for x1 in [0.5, 1.0, 1.7, 3.25, 10.0] {
            let v = ft_curve(c, Vec2::new(x1, 0.0)).unwrap().value;
            assert!((v - Complex64::new(sinc(2.0 * x1), 0.0)).norm() < 1e-8, "ξ₁ = {x1}: {v}");
        }
    }

    #[test]
    fn curve_rule_matches_adaptive_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [catalog::circle(), catalog::limacon(1.0, 2.0), catalog::semicircle_pushforward(), catalog::ellipse(2.0, 1.0)] {
            let c = &s.curves[0];
            let rule = CurveRule::new(c, 40.0);
            for _ in 0..10 {
                let xi = Vec2::from_angle(rng.gen_range(0.0..6.3)) * rng.gen_range(0.0..40.0);
                let a = ft_curve(c, xi).unwrap().value;
                assert!((rule.eval(xi) - a).norm() < 1e-9, "{:?} at {xi:?}", c.family);
            }
        }
    }

    #[test]
    fn shifted_amplitudes_match_pointwise() {
        let mut scene = catalog::semicircle_pushforward();
        scene.segments = catalog::l_shape().segments;
        let (scene, _) = scene.normalized().unwrap();
        let xs = [Vec2::new(0.1, -0.3), Vec2::new(1.5, 0.7)];
        let ls: Vec<Vec2> = (-4..5).map(|n| Vec2::new(n as f64 * 2.5, 0.5 * n as f64)).collect();
        let a = shifted_amplitudes(&scene, &xs, &ls);
        for (i, x) in xs.iter().enumerate() {
            for (j, l) in ls.iter().enumerate() {
                let b = ft(&scene, *x - *l).unwrap();
                assert!((a[[i, j]] - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn factored_segment_amplitudes_are_exact() {
        let scene = catalog::pi_shape();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec2> = (0..20)
            .map(|_| Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
            .collect();
        let mut ls: Vec<Vec2> = (0..200)
            .map(|_| Vec2::new(rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0)))
            .collect();
        // Straddle the switch between the factored and sinc forms.
        for d in [0.0, 1e-9, 0.0099, 0.0101, 0.5] {
            ls.push(xs[0] - Vec2::new(d, d));
        }
        let a = shifted_amplitudes(&scene, &xs, &ls);
        for (i, x) in xs.iter().enumerate() {
            for (j, l) in ls.iter().enumerate() {
                let b = ft_segments(&scene, *x - *l).unwrap();
                assert!((a[[i, j]] - b).norm() < 1e-13, "{x:?} {l:?}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn hermitian_bounded_and_covariant(x in -20.0..20.0f64, y in -20.0..20.0f64, dx in -2.0..2.0f64, dy in -2.0..2.0f64) {
            let xi = Vec2::new(x, y);
            for s in [catalog::square(), catalog::pi_shape(), catalog::plus_space()] {
                let a = ft_segments(&s, xi).unwrap();
                let b = ft_segments(&s, -xi).unwrap();
                proptest::prop_assert!((a - b.conj()).norm() <= 1e-15);
                proptest::prop_assert!(a.norm() <= 1.0 + 1e-15);
                let d = Vec2::new(dx, dy);
                let t = ft_segments(&s.translated(d), xi).unwrap();
                proptest::prop_assert!((t - a * cis_neg(xi.dot(d))).norm() < 1e-12);
            }
        }

        #[test]
        fn curve_hermitian(x in -5.0..5.0f64, y in -5.0..5.0f64) {
            let xi = Vec2::new(x, y);
            let c = &catalog::limacon(1.0, 2.0).curves[0];
            let a = ft_curve(c, xi).unwrap().value;
            let b = ft_curve(c, -xi).unwrap().value;
            proptest::prop_assert!((a - b.conj()).norm() <= 1e-12);
            proptest::prop_assert!(a.norm() <= 1.0 + 1e-12);
        }
    }
}
