//! Weighted unions of segment measures and parametric curve measures.
//!
//! A [`SegmentMeasure`] integrates `f` as `weight·∫₀¹ f(x₀ + t·v) dt`, so its
//! mass is its weight whatever the segment length. A [`CurveSpec`] integrates
//! `f` as `weight·∫ f(γ(t)) w(t) dt` with `∫ w = 1` over the parameter domain.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom2d::{Segment, Similarity, Vec2};
use crate::quadrature;

/// Tolerance on `|total mass - 1|` for a scene to count as normalized.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentMeasure {
    pub segment: Segment,
    pub weight: f64,
}

impl SegmentMeasure {
    pub fn new(segment: Segment, weight: f64) -> Self {
        Self { segment, weight }
    }
}

/// Closed-form curve families with analytic first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveFamily {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// Polar curve `r(θ) = a + b·cos θ`.
    Limacon { a: f64, b: f64 },
    /// Upper half of a circle, parametrized by angle on `[0, pi]`.
    Semicircle { radius: f64 },
}

impl CurveFamily {
    pub fn natural_domain(&self) -> (f64, f64) {
        match self {
            CurveFamily::Semicircle { .. } => (0.0, PI),
            _ => (0.0, TAU),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurveFamily::Circle { .. } => "circle",
            CurveFamily::Ellipse { .. } => "ellipse",
            CurveFamily::Limacon { .. } => "limacon",
            CurveFamily::Semicircle { .. } => "semicircle",
        }
    }

    /// `(γ, γ′, γ″)` in family coordinates.
    pub fn jet(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let (s, c) = t.sin_cos();
        match *self {
            CurveFamily::Circle { radius: r } | CurveFamily::Semicircle { radius: r } => (
                Vec2::new(r * c, r * s),
                Vec2::new(-r * s, r * c),
                Vec2::new(-r * c, -r * s),
            ),
            CurveFamily::Ellipse { a, b } => (
                Vec2::new(a * c, b * s),
                Vec2::new(-a * s, b * c),
                Vec2::new(-a * c, -b * s),
            ),
            CurveFamily::Limacon { a, b } => {
                let r = a + b * c;
                let r1 = -b * s;
                let r2 = -b * c;
                (
                    Vec2::new(r * c, r * s),
                    Vec2::new(r1 * c - r * s, r1 * s + r * c),
                    Vec2::new(r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s),
                )
            }
        }
    }

    /// Upper bound on the family-coordinate speed `‖γ′‖`.
    pub fn speed_bound(&self) -> f64 {
        match *self {
            CurveFamily::Circle { radius } | CurveFamily::Semicircle { radius } => radius.abs(),
            CurveFamily::Ellipse { a, b } => a.abs().max(b.abs()),
            CurveFamily::Limacon { a, b } => a.abs() + b.abs(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CurveFamily::Circle { radius } | CurveFamily::Semicircle { radius } => {
                radius.is_finite() && radius > 0.0
            }
            CurveFamily::Ellipse { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0,
            CurveFamily::Limacon { a, b } => a.is_finite() && b.is_finite() && (a != 0.0 || b != 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad parameters for {self:?}")))
        }
    }
}

/// Parameter density of a curve measure before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFn {
    /// `w ∝ ‖γ′‖`: the arc-length measure.
    Arclength,
    /// `w` constant in the curve parameter.
    Parameter,
    /// `w ∝ |x′|` in family coordinates: the pushforward of Lebesgue measure
    /// on the family's horizontal coordinate.
    XLebesgue,
}

impl WeightFn {
    pub fn name(&self) -> &'static str {
        match self {
            WeightFn::Arclength => "arclength",
            WeightFn::Parameter => "parameter",
            WeightFn::XLebesgue => "x_lebesgue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSpec {
    pub family: CurveFamily,
    pub domain: (f64, f64),
    pub weight_fn: WeightFn,
    pub weight: f64,
    pub placement: Similarity,
    /// `∫ raw_weight(t) dt` over the domain.
    normalizer: f64,
    /// Domain endpoints plus interior kinks of the raw weight, sorted.
    #[serde(skip)]
    breaks: Vec<f64>,
}

impl CurveSpec {
    /// Unit-mass curve on the family's natural domain with arc-length weight.
    pub fn new(family: CurveFamily) -> Result<Self> {
        Self::build(family, family.natural_domain(), WeightFn::Arclength, 1.0, Similarity::IDENTITY)
    }

    pub fn build(
        family: CurveFamily,
        domain: (f64, f64),
        weight_fn: WeightFn,
        weight: f64,
        placement: Similarity,
    ) -> Result<Self> {
        family.validate()?;
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
            return Err(Error::InvalidInput(format!("bad curve domain {domain:?}")));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidInput(format!("bad curve weight {weight}")));
        }
        if !(placement.scale.is_finite() && placement.scale > 0.0) {
            return Err(Error::InvalidInput("placement scale must be positive".into()));
        }
        let mut c = Self {
            family,
            domain,
            weight_fn,
            weight,
            placement,
            normalizer: 1.0,
            breaks: Vec::new(),
        };
        c.breaks = c.weight_kinks();
        c.normalizer = c
            .smooth_pieces()
            .map(|(a, b)| quadrature::integrate(|t| c.raw_weight(t), a, b, 256))
            .sum();
        if c.normalizer.is_nan() || c.normalizer <= 0.0 {
            return Err(Error::InvalidInput("curve weight function integrates to zero".into()));
        }
        Ok(c)
    }

    pub fn with_weight_fn(self, weight_fn: WeightFn) -> Result<Self> {
        Self::build(self.family, self.domain, weight_fn, self.weight, self.placement)
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_domain(self, domain: (f64, f64)) -> Result<Self> {
        Self::build(self.family, domain, self.weight_fn, self.weight, self.placement)
    }

    /// Apply `motion` after the current placement.
    pub fn moved(&self, motion: &Similarity) -> Self {
        let mut c = self.clone();
        c.placement = motion.compose(&self.placement);
        c
    }

    /// `(γ, γ′, γ″)` in scene coordinates.
    pub fn jet(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let (p, d1, d2) = self.family.jet(t);
        let m = &self.placement;
        (m.apply_point(p), m.apply_vector(d1), m.apply_vector(d2))
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.jet(t).0
    }

    pub fn tangent(&self, t: f64) -> Vec2 {
        self.jet(t).1
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.tangent(t).norm()
    }

    pub fn domain_length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    /// Unnormalized parameter weight in family coordinates.
    pub fn raw_weight(&self, t: f64) -> f64 {
        match self.weight_fn {
            WeightFn::Parameter => 1.0,
            WeightFn::Arclength => self.family.jet(t).1.norm(),
            WeightFn::XLebesgue => self.family.jet(t).1.x.abs(),
        }
    }

    /// Upper bound of [`Self::raw_weight`] over the domain.
    pub fn raw_weight_bound(&self) -> f64 {
        match self.weight_fn {
            WeightFn::Parameter => 1.0,
            _ => self.family.speed_bound(),
        }
    }

    /// Measure density in the curve parameter: `weight · w(t)` with `∫ w = 1`.
    pub fn density(&self, t: f64) -> f64 {
        self.weight * self.raw_weight(t) / self.normalizer
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Arc length in scene units.
    pub fn arc_length(&self) -> f64 {
        let (lo, hi) = self.domain;
        self.placement.scale * quadrature::integrate(|t| self.family.jet(t).1.norm(), lo, hi, 256)
    }

    /// Diagonal of the bounding box of 256 sampled curve points.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.domain;
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..=256 {
            let p = self.point(lo + (hi - lo) * i as f64 / 256.0);
            min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
            max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
        }
        (max - min).norm()
    }

    /// Whether the parameter domain wraps (closed smooth curve).
    pub fn is_periodic(&self) -> bool {
        let (lo, hi) = self.domain;
        let (p0, a0, b0) = self.jet(lo);
        let (p1, a1, b1) = self.jet(hi);
        let scale = 1.0 + p0.norm() + a0.norm() + b0.norm();
        [(p0, p1), (a0, a1), (b0, b1)]
            .iter()
            .all(|(u, v)| u.distance(*v) <= 1e-9 * scale)
    }

    /// Subintervals of the domain on which the weight is smooth.
    pub fn smooth_pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breaks.windows(2).map(|w| (w[0], w[1]))
    }

    fn weight_kinks(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let mut cuts = vec![lo];
        // |x′| has kinks where x′ changes sign.
        if self.weight_fn == WeightFn::XLebesgue {
            let f = |t: f64| self.family.jet(t).1.x;
            let n = 4096;
            let h = (hi - lo) / n as f64;
            for i in 0..n {
                let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
                let (fa, fb) = (f(a), f(b));
                if fa * fb < 0.0 {
                    let (mut x0, mut x1, mut f0) = (a, b, fa);
                    while x1 - x0 > 1e-15 * (1.0 + x0.abs()) {
                        let m = 0.5 * (x0 + x1);
                        if m <= x0 || m >= x1 {
                            break;
                        }
                        let fm = f(m);
                        if fm * f0 <= 0.0 {
                            x1 = m;
                        } else {
                            x0 = m;
                            f0 = fm;
                        }
                    }
                    cuts.push(0.5 * (x0 + x1));
                }
            }
        }
        cuts.push(hi);
        cuts
    }

    /// Draw a parameter value distributed as the normalized weight.
    pub fn sample_parameter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.domain;
        if self.weight_fn == WeightFn::Parameter {
            return rng.gen_range(lo..hi);
        }
        let bound = self.raw_weight_bound();
        loop {
            let t = rng.gen_range(lo..hi);
            if rng.gen::<f64>() * bound <= self.raw_weight(t) {
                return t;
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SceneMeasure {
    pub segments: Vec<SegmentMeasure>,
    pub curves: Vec<CurveSpec>,
}

impl SceneMeasure {
    pub fn from_segments(segments: Vec<SegmentMeasure>) -> Self {
        Self {
            segments,
            curves: Vec::new(),
        }
    }

    pub fn from_curve(curve: CurveSpec) -> Self {
        Self {
            segments: Vec::new(),
            curves: vec![curve],
        }
    }

    /// Segments with equal weights `1/N`.
    pub fn uniform_segments(segments: &[Segment]) -> Self {
        let w = 1.0 / segments.len() as f64;
        Self::from_segments(segments.iter().map(|s| SegmentMeasure::new(*s, w)).collect())
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.weight).sum::<f64>()
            + self.curves.iter().map(|c| c.weight).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= MASS_TOL
    }

    pub fn is_segments_only(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn segment_list(&self) -> Vec<Segment> {
        self.segments.iter().map(|s| s.segment).collect()
    }

    /// Rescale all weights to total mass 1. Returns the scene and the factor applied.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let total = self.total_mass();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized { total });
        }
        if self.is_normalized() {
            return Ok((self.clone(), 1.0));
        }
        let factor = 1.0 / total;
        log::warn!("scene weights sum to {total}; rescaling to a probability measure");
        let mut out = self.clone();
        for s in &mut out.segments {
            s.weight *= factor;
        }
        for c in &mut out.curves {
            c.weight *= factor;
        }
        Ok((out, factor))
    }

    /// Image of the scene under a similarity (masses unchanged).
    pub fn transformed(&self, motion: &Similarity) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| SegmentMeasure {
                    segment: Segment {
                        start: motion.apply_point(s.segment.start),
                        dir: motion.apply_vector(s.segment.dir),
                    },
                    weight: s.weight,
                })
                .collect(),
            curves: self.curves.iter().map(|c| c.moved(motion)).collect(),
        }
    }

    pub fn translated(&self, d: Vec2) -> Self {
        self.transformed(&Similarity::new(d, 0.0, 1.0))
    }

    /// Diameter of the support (segment endpoints and sampled curve points).
    pub fn diameter(&self) -> f64 {
        let mut pts: Vec<Vec2> = self
            .segments
            .iter()
            .flat_map(|s| [s.segment.start, s.segment.end()])
            .collect();
        for c in &self.curves {
            let (lo, hi) = c.domain;
            pts.extend((0..=64).map(|i| c.point(lo + (hi - lo) * i as f64 / 64.0)));
        }
        crate::geom2d::diameter(&pts)
    }

    fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                total: self.total_mass(),
            })
        }
    }

    pub fn sampler(&self) -> Result<Sampler<'_>> {
        self.require_normalized()?;
        let mut cumulative = Vec::with_capacity(self.segments.len() + self.curves.len());
        let mut acc = 0.0;
        for w in self
            .segments
            .iter()
            .map(|s| s.weight)
            .chain(self.curves.iter().map(|c| c.weight))
        {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Sampler {
            scene: self,
            cumulative,
        })
    }

    /// `n` independent draws from the scene measure, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec2>> {
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be positive".into()));
        }
        let sampler = self.sampler()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
    }

    /// Exact pushforward under `x ↦ u·x` for a unit vector `u`.
    pub fn project(&self, u: Vec2) -> Result<PiecewiseDensity1D> {
        if !self.is_segments_only() {
            return Err(Error::UnsupportedForCurves);
        }
        if (u.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("projection direction must be unit, got |u| = {}", u.norm())));
        }
        let scale = self.diameter().max(1e-300);
        let mut pieces = Vec::new();
        let mut atoms = Vec::new();
        for s in &self.segments {
            let a = u.dot(s.segment.start);
            let slope = u.dot(s.segment.dir);
            if slope.abs() <= 1e-12 * s.segment.length() {
                atoms.push(Atom {
                    position: a,
                    mass: s.weight,
                });
            } else {
                let b = a + slope;
                pieces.push(DensityInterval {
                    lo: a.min(b),
                    hi: a.max(b),
                    density: s.weight / slope.abs(),
                });
            }
        }
        Ok(PiecewiseDensity1D::assemble(pieces, atoms, 1e-12 * scale))
    }
}

/// Draws points from a normalized scene.
pub struct Sampler<'a> {
    scene: &'a SceneMeasure,
    cumulative: Vec<f64>,
}

impl Sampler<'_> {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let x = rng.gen::<f64>() * total;
        let k = self
            .cumulative
            .partition_point(|c| *c <= x)
            .min(self.cumulative.len() - 1);
        let ns = self.scene.segments.len();
        if k < ns {
            self.scene.segments[k].segment.point_at(rng.gen::<f64>())
        } else {
            let c = &self.scene.curves[k - ns];
            c.point(c.sample_parameter(rng))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityInterval {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// A 1-D measure: piecewise-constant density on sorted disjoint intervals plus atoms.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PiecewiseDensity1D {
    pub intervals: Vec<DensityInterval>,
    pub atoms: Vec<Atom>,
}

impl PiecewiseDensity1D {
    fn assemble(pieces: Vec<DensityInterval>, atoms: Vec<Atom>, tol: f64) -> Self {
        let mut breaks: Vec<f64> = pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let mut intervals: Vec<DensityInterval> = Vec::new();
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let density: f64 = pieces
                .iter()
                .filter(|p| p.lo - tol <= mid && mid <= p.hi + tol)
                .map(|p| p.density)
                .sum();
            if density <= 0.0 {
                continue;
            }
            match intervals.last_mut() {
                Some(last)
                    if (last.hi - w[0]).abs() <= tol
                        && (last.density - density).abs() <= 1e-12 * density.max(last.density) =>
                {
                    last.hi = w[1];
                }
                _ => intervals.push(DensityInterval {
                    lo: w[0],
                    hi: w[1],
                    density,
                }),
            }
        }
        let mut merged: Vec<Atom> = Vec::new();
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        for a in atoms {
            match merged.last_mut() {
                Some(m) if (m.position - a.position).abs() <= tol => m.mass += a.mass,
                _ => merged.push(a),
            }
        }
        Self {
            intervals,
            atoms: merged,
        }
    }

    pub fn mass(&self) -> f64 {
        self.intervals
            .iter()
            .map(|i| i.density * (i.hi - i.lo))
            .sum::<f64>()
            + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Maximal runs of contiguous intervals.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let scale = self
            .intervals
            .iter()
            .map(|i| i.hi.abs().max(i.lo.abs()))
            .fold(1e-300, f64::max);
        for i in &self.intervals {
            match out.last_mut() {
                Some(last) if (last.1 - i.lo).abs() <= 1e-12 * scale => last.1 = i.hi,
                _ => out.push((i.lo, i.hi)),
            }
        }
        out
    }

    /// The common density value if the measure is atom-free and constant on its support.
    pub fn constant_density(&self, rel_tol: f64) -> Option<f64> {
        if self.has_atoms() || self.intervals.is_empty() {
            return None;
        }
        let d0 = self.intervals[0].density;
        self.intervals
            .iter()
            .all(|i| (i.density - d0).abs() <= rel_tol * d0)
            .then_some(d0)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .filter(|i| i.lo <= x && x < i.hi)
            .map(|i| i.density)
            .sum()
    }
}
