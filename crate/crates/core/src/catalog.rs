//! Canonical scenes used by tests, benches and the CLI examples.

use crate::geom2d::{Segment, Vec2};
use crate::measures::{CurveFamily, CurveSpec, SceneMeasure, WeightFn};

fn seg(x0: f64, y0: f64, vx: f64, vy: f64) -> Segment {
    Segment {
        start: Vec2::new(x0, y0),
        dir: Vec2::new(vx, vy),
    }
}

/// Boundary of the unit square, traversed counter-clockwise.
pub fn square() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[
        seg(0.0, 0.0, 1.0, 0.0),
        seg(1.0, 0.0, 0.0, 1.0),
        seg(1.0, 1.0, -1.0, 0.0),
        seg(0.0, 1.0, 0.0, -1.0),
    ])
}

/// Two unit segments crossing at their midpoints.
pub fn plus_space() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[seg(-0.5, 0.0, 1.0, 0.0), seg(0.0, -0.5, 0.0, 1.0)])
}

pub fn l_shape() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[seg(0.0, 0.0, 1.0, 0.0), seg(0.0, 0.0, 0.0, 1.0)])
}

/// The open polygonal line (0,0)–(0,1)–(1,1)–(1,0).
pub fn pi_shape() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[
        seg(0.0, 0.0, 0.0, 1.0),
        seg(0.0, 1.0, 1.0, 0.0),
        seg(1.0, 1.0, 0.0, -1.0),
    ])
}

/// `[0,1]×{0} ∪ [0,1]×{1}` with equal weights.
pub fn stacked_segments() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[seg(0.0, 0.0, 1.0, 0.0), seg(0.0, 1.0, 1.0, 0.0)])
}

pub fn unit_segment() -> SceneMeasure {
    SceneMeasure::uniform_segments(&[seg(0.0, 0.0, 1.0, 0.0)])
}

fn curve(family: CurveFamily, weight_fn: WeightFn) -> SceneMeasure {
    let c = CurveSpec::new(family)
        .and_then(|c| c.with_weight_fn(weight_fn))
        .expect("catalog curve parameters are valid");
    SceneMeasure::from_curve(c)
}

pub fn circle() -> SceneMeasure {
    curve(CurveFamily::Circle { radius: 1.0 }, WeightFn::Arclength)
}

pub fn ellipse(a: f64, b: f64) -> SceneMeasure {
    curve(CurveFamily::Ellipse { a, b }, WeightFn::Arclength)
}

pub fn limacon(a: f64, b: f64) -> SceneMeasure {
    curve(CurveFamily::Limacon { a, b }, WeightFn::Arclength)
}

/// Arc-length measure on the upper unit semicircle.
pub fn semicircle_arclength() -> SceneMeasure {
    curve(CurveFamily::Semicircle { radius: 1.0 }, WeightFn::Arclength)
}

/// `∫f dν = ½∫₋₁¹ f(x, √(1−x²)) dx` on the upper unit semicircle.
pub fn semicircle_pushforward() -> SceneMeasure {
    curve(CurveFamily::Semicircle { radius: 1.0 }, WeightFn::XLebesgue)
}
