//! The autocorrelation `μ∗μ̃` (law of `x − y` for independent `x, y ~ μ`).
//!
//! Segment scenes decompose exactly into constant-density parallelograms and
//! line-supported trapezoid profiles. Curve measures are handled pointwise by
//! solving `γ(s) − γ(t) = u` and summing `w(s)w(t)/|J|`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{cis_neg, sinc, FtValue};
use crate::geom2d::{
    box_polygon, convex_intersection_area, initial_radius, is_parallel, point_segment_distance,
    segment_meets_box, union_contains, Parallelogram, Vec2, GEO_REL_TOL, MAX_HALVINGS,
};
use crate::measures::{CurveSpec, SceneMeasure, SegmentMeasure};
use crate::probe::{ShiftedHalton, DEFAULT_PROBES};

/// Width of the exclusion band around singular carriers, relative to the scene diameter.
pub const LINE_REL_TOL: f64 = 1e-6;
/// Smallest probe radius, in units of the exclusion band width.
const MIN_RADIUS_BANDS: f64 = 100.0;

/// Constant-density part of `μ_a ∗ μ̃_b` for non-parallel `a`, `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcPiece {
    pub region: Parallelogram,
    pub density: f64,
    /// Indices `(a, b)` of the generating segments.
    pub pair: (usize, usize),
}

impl AcPiece {
    pub fn mass(&self) -> f64 {
        self.density * self.region.area()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.region.contains(p, GEO_REL_TOL).unwrap_or(false)
    }

    pub fn box_mass(&self, lo: Vec2, hi: Vec2) -> f64 {
        self.density * convex_intersection_area(&self.region.corners(), &box_polygon(lo, hi))
    }

    pub fn fourier(&self, xi: Vec2) -> FtValue {
        let q = &self.region;
        cis_neg(xi.dot(q.center())) * (self.mass() * sinc(xi.dot(q.e1)) * sinc(xi.dot(q.e2)))
    }
}

/// Line-supported part of `μ_a ∗ μ̃_b` for parallel `a`, `b`.
///
/// Points are `line_point + u·direction`; the density in `u` is a trapezoid
/// with corners `knots` and plateau `height` (times `mass`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPiece {
    pub line_point: Vec2,
    pub direction: Vec2,
    /// `b.dir = −beta · a.dir`.
    pub beta: f64,
    pub knots: [f64; 4],
    pub height: f64,
    pub mass: f64,
    pub through_origin: bool,
    pub pair: (usize, usize),
}

impl SingularPiece {
    /// Density in the line parameter `u`, integrating to `mass`.
    pub fn profile(&self, u: f64) -> f64 {
        let [k0, k1, k2, k3] = self.knots;
        let shape = if u <= k0 || u >= k3 {
            0.0
        } else if u < k1 {
            (u - k0) / (k1 - k0)
        } else if u <= k2 {
            1.0
        } else {
            (k3 - u) / (k3 - k2)
        };
        self.mass * self.height * shape
    }

    /// `∫_{lo}^{hi} profile(u) du`.
    pub fn profile_mass(&self, lo: f64, hi: f64) -> f64 {
        let [k0, k1, k2, k3] = self.knots;
        let (lo, hi) = (lo.max(k0), hi.min(k3));
        if lo >= hi {
            return 0.0;
        }
        // Exact for the piecewise-linear profile: Simpson on each linear piece.
        let mut cuts = vec![lo];
        cuts.extend([k1, k2].into_iter().filter(|k| *k > lo && *k < hi));
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.profile(w[0]) + self.profile(w[1])))
            .sum()
    }

    pub fn carrier(&self) -> (Vec2, Vec2) {
        (
            self.line_point + self.direction * self.knots[0],
            self.line_point + self.direction * self.knots[3],
        )
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        let (a, b) = self.carrier();
        point_segment_distance(p, a, b)
    }

    pub fn box_mass(&self, lo: Vec2, hi: Vec2) -> f64 {
        // Parameter range of the carrier line inside the box.
        let (p, d) = (self.line_point, self.direction);
        let (mut u0, mut u1) = (f64::NEG_INFINITY, f64::INFINITY);
        for (pc, dc, l, h) in [(p.x, d.x, lo.x, hi.x), (p.y, d.y, lo.y, hi.y)] {
            if dc == 0.0 {
                if pc < l || pc > h {
                    return 0.0;
                }
            } else {
                let (a, b) = ((l - pc) / dc, (h - pc) / dc);
                u0 = u0.max(a.min(b));
                u1 = u1.min(a.max(b));
            }
        }
        if u0 >= u1 {
            0.0
        } else {
            self.profile_mass(u0, u1)
        }
    }

    pub fn fourier(&self, xi: Vec2) -> FtValue {
        let f = xi.dot(self.direction);
        cis_neg(xi.dot(self.line_point) + 0.5 * f * (1.0 + self.beta))
            * (self.mass * sinc(f) * sinc(f * self.beta))
    }
}

/// One term of the pairwise decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPiece {
    Ac(AcPiece),
    Singular(SingularPiece),
}

/// `μ_a ∗ μ̃_b` for two weighted segments.
pub fn pair_convolution(a: &SegmentMeasure, b: &SegmentMeasure) -> PairPiece {
    pair_convolution_indexed(a, b, (0, 0), 0.0)
}

fn pair_convolution_indexed(a: &SegmentMeasure, b: &SegmentMeasure, pair: (usize, usize), tau_geo: f64) -> PairPiece {
    let (va, vb) = (a.segment.dir, b.segment.dir);
    let origin = a.segment.start - b.segment.start;
    let mass = a.weight * b.weight;
    if !is_parallel(va, vb) {
        let region = Parallelogram::new(origin, va, -vb);
        return PairPiece::Ac(AcPiece {
            region,
            density: mass / region.area(),
            pair,
        });
    }
    let beta = -vb.dot(va) / va.norm_sq();
    let lo = beta.min(0.0);
    let ab = beta.abs();
    let knots = [lo, lo + ab.min(1.0), lo + ab.max(1.0), lo + 1.0 + ab];
    let mut piece = SingularPiece {
        line_point: origin,
        direction: va,
        beta,
        knots,
        height: 1.0 / ab.max(1.0),
        mass,
        through_origin: false,
        pair,
    };
    piece.through_origin = piece.distance_to(Vec2::ZERO) <= tau_geo;
    PairPiece::Singular(piece)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OriginReport {
    /// Distinct directions (up to sign) of singular carriers through 0.
    pub singular_dirs_through_origin: Vec<Vec2>,
    /// Largest probed radius at which every probe off the through-origin
    /// lines lies in an AC piece (0 when none passed).
    pub covered_radius: f64,
    pub uncovered_witness: Option<Vec2>,
    /// Radius below which, in addition, every singular carrier and every AC
    /// edge meeting the ball lies on a line through 0 (0 if not covered).
    pub certified_radius: f64,
    pub probes: usize,
    pub seed: u64,
    pub halvings: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityDecomposition {
    pub ac: Vec<AcPiece>,
    pub singular: Vec<SingularPiece>,
    pub origin_report: OriginReport,
    pub tau_geo: f64,
    pub tau_line: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageOptions {
    pub probes: usize,
    pub seed: u64,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            probes: DEFAULT_PROBES,
            seed: 0,
        }
    }
}

pub fn decompose(scene: &SceneMeasure) -> Result<DensityDecomposition> {
    decompose_with(scene, CoverageOptions::default())
}

pub fn decompose_with(scene: &SceneMeasure, opts: CoverageOptions) -> Result<DensityDecomposition> {
    if !scene.is_segments_only() {
        return Err(Error::UnsupportedForCurves);
    }
    if scene.segments.is_empty() {
        return Err(Error::InvalidInput("scene has no segments".into()));
    }
    let diam = scene.diameter();
    let tau_geo = GEO_REL_TOL * diam;
    let tau_line = LINE_REL_TOL * diam;
    let mut ac = Vec::new();
    let mut singular = Vec::new();
    for (i, a) in scene.segments.iter().enumerate() {
        for (j, b) in scene.segments.iter().enumerate() {
            match pair_convolution_indexed(a, b, (i, j), tau_geo) {
                PairPiece::Ac(p) => ac.push(p),
                PairPiece::Singular(p) => singular.push(p),
            }
        }
    }
    let mut d = DensityDecomposition {
        ac,
        singular,
        origin_report: OriginReport::default(),
        tau_geo,
        tau_line,
    };
    let dirs: Vec<Vec2> = scene.segments.iter().map(|s| s.segment.dir).collect();
    d.origin_report = d.probe_origin(initial_radius(&dirs), opts);
    Ok(d)
}

impl DensityDecomposition {
    pub fn total_mass(&self) -> f64 {
        self.ac.iter().map(|p| p.mass()).sum::<f64>() + self.singular.iter().map(|p| p.mass).sum::<f64>()
    }

    fn through_origin(&self) -> impl Iterator<Item = &SingularPiece> {
        self.singular.iter().filter(|p| p.through_origin)
    }

    fn near_origin_line(&self, p: Vec2) -> bool {
        self.through_origin()
            .any(|s| crate::geom2d::point_line_distance(p, s.line_point, s.direction) <= self.tau_line)
    }

    pub fn ac_contains(&self, p: Vec2) -> bool {
        let regions: Vec<Parallelogram> = self.ac.iter().map(|a| a.region).collect();
        union_contains(&regions, p, GEO_REL_TOL)
    }

    /// Coverage of punctured disks `B(0, r0/2^k)` by the AC pieces.
    pub fn probe_origin(&self, r0: f64, opts: CoverageOptions) -> OriginReport {
        let mut dirs: Vec<Vec2> = Vec::new();
        for s in self.through_origin() {
            let u = s.direction.normalized();
            if !dirs.iter().any(|d| is_parallel(*d, u)) {
                dirs.push(u);
            }
        }
        let regions: Vec<Parallelogram> = self.ac.iter().map(|a| a.region).collect();
        let halton = ShiftedHalton::new(opts.seed);
        let mut radius = r0;
        let mut witness = None;
        let mut report = OriginReport {
            singular_dirs_through_origin: dirs,
            probes: opts.probes,
            seed: opts.seed,
            ..OriginReport::default()
        };
        for halvings in 0..=MAX_HALVINGS {
            // Below this the exclusion bands swallow the probe disk.
            if radius < MIN_RADIUS_BANDS * self.tau_line {
                report.halvings = halvings;
                break;
            }
            report.halvings = halvings;
            let miss = halton
                .disk_points(opts.probes, radius)
                .filter(|p| !self.near_origin_line(*p))
                .find(|p| !union_contains(&regions, *p, GEO_REL_TOL));
            match miss {
                None => {
                    report.covered_radius = radius;
                    report.halvings = halvings;
                    report.certified_radius = self.certified_radius(radius);
                    return report;
                }
                Some(p) => witness = Some(p),
            }
            radius *= 0.5;
        }
        report.uncovered_witness = witness;
        report
    }

    fn certified_radius(&self, covered: f64) -> f64 {
        let o = Vec2::ZERO;
        let mut r = covered;
        for s in &self.singular {
            if s.through_origin {
                let (a, b) = s.carrier();
                r = r.min(a.norm()).min(b.norm());
            } else {
                r = r.min(s.distance_to(o));
            }
        }
        for p in &self.ac {
            for (a, b) in p.region.edges() {
                if crate::geom2d::point_line_distance(o, a, b - a) > self.tau_geo {
                    r = r.min(point_segment_distance(o, a, b));
                }
            }
        }
        r
    }

    /// Density of the absolutely continuous part at `p`.
    pub fn eval_density(&self, p: Vec2) -> Result<f64> {
        if self.singular.iter().any(|s| s.distance_to(p) <= self.tau_line) {
            return Err(Error::SingularPointQuery { point: p });
        }
        Ok(self.ac.iter().filter(|a| a.contains(p)).map(|a| a.density).sum())
    }

    /// Exact mass of the closed box `[lo, hi]`, split into AC and singular parts.
    pub fn box_mass(&self, lo: Vec2, hi: Vec2) -> (f64, f64) {
        (
            self.ac.iter().map(|a| a.box_mass(lo, hi)).sum(),
            self.singular.iter().map(|s| s.box_mass(lo, hi)).sum(),
        )
    }

    /// Whether some singular carrier meets the closed box grown by `tau_line`.
    pub fn box_meets_singular(&self, lo: Vec2, hi: Vec2) -> bool {
        self.singular.iter().any(|s| {
            let (a, b) = s.carrier();
            segment_meets_box(a, b, lo, hi, self.tau_line)
        })
    }

    /// Closed-form Fourier transform; equals `|μ̂(ξ)|²`.
    pub fn fourier(&self, xi: Vec2) -> FtValue {
        self.ac.iter().map(|a| a.fourier(xi)).sum::<Complex64>()
            + self.singular.iter().map(|s| s.fourier(xi)).sum::<Complex64>()
    }

    /// Largest deviation of the decomposition from its reflection through 0.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.ac {
            let r = a.region.reflected();
            let best = self
                .ac
                .iter()
                .map(|b| {
                    let cb = b.region.corners();
                    let cr = r.corners();
                    let corner = cr
                        .iter()
                        .map(|p| cb.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max);
                    corner + (a.density - b.density).abs()
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        for s in &self.singular {
            let (a, b) = s.carrier();
            let best = self
                .singular
                .iter()
                .map(|t| {
                    let (c, d) = t.carrier();
                    let ends = (c.distance(-b) + d.distance(-a)).min(c.distance(-a) + d.distance(-b));
                    ends + (s.mass - t.mass).abs()
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }
}

/// Axis-aligned grid of `nx × ny` boxes covering `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxGrid {
    pub lo: Vec2,
    pub hi: Vec2,
    pub nx: usize,
    pub ny: usize,
}

impl BoxGrid {
    pub fn new(lo: Vec2, hi: Vec2, nx: usize, ny: usize) -> Result<Self> {
        if !(lo.x < hi.x && lo.y < hi.y && nx > 0 && ny > 0) {
            return Err(Error::InvalidInput("empty box grid".into()));
        }
        Ok(Self { lo, hi, nx, ny })
    }

    /// `n × n` boxes over `[−half_width, half_width]²`.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(Vec2::new(-half_width, -half_width), Vec2::new(half_width, half_width), n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box `k` (row-major from the bottom-left) as `(lo, hi)`.
    pub fn cell(&self, k: usize) -> (Vec2, Vec2) {
        let (i, j) = (k % self.nx, k / self.nx);
        let w = (self.hi.x - self.lo.x) / self.nx as f64;
        let h = (self.hi.y - self.lo.y) / self.ny as f64;
        let lo = Vec2::new(self.lo.x + i as f64 * w, self.lo.y + j as f64 * h);
        (lo, lo + Vec2::new(w, h))
    }

    pub fn index(&self, p: Vec2) -> Option<usize> {
        let fx = (p.x - self.lo.x) / (self.hi.x - self.lo.x) * self.nx as f64;
        let fy = (p.y - self.lo.y) / (self.hi.y - self.lo.y) * self.ny as f64;
        if fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64 {
            Some(fy as usize * self.nx + fx as usize)
        } else {
            None
        }
    }
}

/// Monte Carlo histogram of `x − y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McHistogram {
    pub grid: BoxGrid,
    pub samples: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
}

impl McHistogram {
    pub fn mass(&self, k: usize) -> f64 {
        self.counts[k] as f64 / self.samples as f64
    }

    /// Binomial standard error of [`Self::mass`].
    pub fn std_error(&self, k: usize) -> f64 {
        let p = self.mass(k);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// Whether the count in box `k` lies within `z` binomial standard
    /// deviations of `n·expected`.
    pub fn agrees(&self, k: usize, expected: f64, z: f64) -> bool {
        let n = self.samples as f64;
        let sd = (n * expected * (1.0 - expected)).max(0.0).sqrt();
        (self.counts[k] as f64 - n * expected).abs() <= z * sd
    }
}

/// Number of independent sample streams; fixed so results do not depend on
/// the thread count.
pub const MC_SHARDS: u64 = 64;

/// Sharded draws of `x − y`; `tally` adds one difference into the counts.
fn mc_counts<F>(scene: &SceneMeasure, n: u64, seed: u64, bins: usize, tally: F) -> Result<Vec<u64>>
where
    F: Fn(Vec2, &mut [u64]) + Sync,
{
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let sampler = scene.sampler()?;
    Ok((0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let m = n / MC_SHARDS + u64::from(shard < n % MC_SHARDS);
            let mut c = vec![0u64; bins];
            for _ in 0..m {
                let x = sampler.draw(&mut rng);
                let y = sampler.draw(&mut rng);
                tally(x - y, &mut c);
            }
            c
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        ))
}

pub fn mc_autocorr(scene: &SceneMeasure, n: u64, seed: u64, grid: BoxGrid) -> Result<McHistogram> {
    let counts = mc_counts(scene, n, seed, grid.len(), |d, c| {
        if let Some(k) = grid.index(d) {
            c[k] += 1;
        }
    })?;
    Ok(McHistogram {
        grid,
        samples: n,
        seed,
        counts,
    })
}

/// Counts of `x − y` in each closed box `[lo, hi]`; boxes may overlap.
pub fn mc_box_counts(scene: &SceneMeasure, n: u64, seed: u64, boxes: &[(Vec2, Vec2)]) -> Result<Vec<u64>> {
    mc_counts(scene, n, seed, boxes.len(), |d, c| {
        for (k, (lo, hi)) in boxes.iter().enumerate() {
            if d.x >= lo.x && d.x <= hi.x && d.y >= lo.y && d.y <= hi.y {
                c[k] += 1;
            }
        }
    })
}

/// Default parameter mesh resolution for [`curve_ac_density`].
pub const DEFAULT_CURVE_GRID: usize = 512;
const NEWTON_MAX_ITER: usize = 50;
const NEWTON_RESIDUAL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-8;
/// Below this `|J|` the area formula is not applied.
pub const JACOBIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcSolution {
    pub s: f64,
    pub t: f64,
    /// `x′(t)y′(s) − x′(s)y′(t)`.
    pub jacobian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveAcValue {
    pub value: f64,
    pub solutions: Vec<AcSolution>,
}

/// Cached parameter mesh for repeated density queries on one curve.
#[derive(Debug, Clone)]
pub struct CurveAcSolver {
    curve: CurveSpec,
    grid: usize,
    params: Vec<f64>,
    /// Enclosures of `x` and `y` on each parameter cell.
    xr: Vec<(f64, f64)>,
    yr: Vec<(f64, f64)>,
    periodic: bool,
    residual_tol: f64,
}

impl CurveAcSolver {
    pub fn new(curve: &CurveSpec, grid: usize) -> Result<Self> {
        if grid < 4 {
            return Err(Error::InvalidInput("curve mesh needs at least 4 cells".into()));
        }
        let (lo, hi) = curve.domain;
        let h = (hi - lo) / grid as f64;
        let params: Vec<f64> = (0..=grid).map(|i| lo + i as f64 * h).collect();
        let pts: Vec<Vec2> = params.iter().map(|t| curve.point(*t)).collect();
        let max_acc = (0..=4096)
            .map(|i| curve.jet(lo + (hi - lo) * i as f64 / 4096.0).2.norm())
            .fold(0.0, f64::max);
        let slack = 1.5 * h * h / 8.0 * max_acc;
        let enclose = |a: f64, b: f64| (a.min(b) - slack, a.max(b) + slack);
        let xr = pts.windows(2).map(|w| enclose(w[0].x, w[1].x)).collect();
        let yr = pts.windows(2).map(|w| enclose(w[0].y, w[1].y)).collect();
        Ok(Self {
            curve: curve.clone(),
            grid,
            params,
            xr,
            yr,
            periodic: curve.is_periodic(),
            residual_tol: NEWTON_RESIDUAL * curve.extent().max(1.0),
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn jacobian(&self, s: f64, t: f64) -> f64 {
        self.curve.tangent(t).cross(self.curve.tangent(s))
    }

    fn newton(&self, u: Vec2, mut s: f64, mut t: f64) -> Option<(f64, f64)> {
        let c = &self.curve;
        let resid = |s: f64, t: f64| c.point(s) - c.point(t) - u;
        let mut r = resid(s, t);
        for _ in 0..NEWTON_MAX_ITER {
            if r.norm() <= self.residual_tol {
                return Some((s, t));
            }
            let (gs, gt) = (c.tangent(s), -c.tangent(t));
            let det = gs.cross(gt);
            if det == 0.0 {
                return None;
            }
            // Solve [gs gt]·(ds, dt) = −r.
            let ds = -r.cross(gt) / det;
            let dt = -gs.cross(r) / det;
            let mut step = 1.0;
            loop {
                let (ns, nt) = (s + step * ds, t + step * dt);
                let nr = resid(ns, nt);
                if nr.norm() < r.norm() || step < 1e-6 {
                    s = ns;
                    t = nt;
                    r = nr;
                    break;
                }
                step *= 0.5;
            }
        }
        (r.norm() <= self.residual_tol).then_some((s, t))
    }

    fn normalize(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.curve.domain;
        if self.periodic {
            Some(lo + (x - lo).rem_euclid(hi - lo))
        } else {
            let tol = 1e-12 * (hi - lo);
            (x >= lo - tol && x <= hi + tol).then(|| x.clamp(lo, hi))
        }
    }

    fn param_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.periodic {
            d.min(self.curve.domain_length() - d)
        } else {
            d
        }
    }

    /// All solutions of `γ(s) − γ(t) = u`.
    pub fn solutions(&self, u: Vec2) -> Vec<(f64, f64)> {
        self.roots(u, 0)
    }

    /// Solutions seeded from mesh cells at least `band` cells off the
    /// diagonal; roots closer than `1e-6` to `s = t` are dropped when `band > 0`.
    pub(crate) fn roots(&self, u: Vec2, band: usize) -> Vec<(f64, f64)> {
        let n = self.grid;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for i in 0..n {
            let (xi, yi) = (self.xr[i], self.yr[i]);
            for j in 0..n {
                if band > 0 {
                    let d = i.abs_diff(j);
                    let d = if self.periodic { d.min(n - d) } else { d };
                    if d < band {
                        continue;
                    }
                }
                let (xj, yj) = (self.xr[j], self.yr[j]);
                if u.x < xi.0 - xj.1 || u.x > xi.1 - xj.0 || u.y < yi.0 - yj.1 || u.y > yi.1 - yj.0 {
                    continue;
                }
                let s0 = 0.5 * (self.params[i] + self.params[i + 1]);
                let t0 = 0.5 * (self.params[j] + self.params[j + 1]);
                let Some((s, t)) = self.newton(u, s0, t0) else { continue };
                let (Some(s), Some(t)) = (self.normalize(s), self.normalize(t)) else { continue };
                if band > 0 && self.param_distance(s, t) <= 1e-6 {
                    continue;
                }
                if !out
                    .iter()
                    .any(|(a, b)| self.param_distance(*a, s) <= MERGE_TOL && self.param_distance(*b, t) <= MERGE_TOL)
                {
                    out.push((s, t));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    pub(crate) fn parameter_distance(&self, a: f64, b: f64) -> f64 {
        self.param_distance(a, b)
    }

    /// Density of `μ∗μ̃` at `u` by the area formula.
    pub fn density(&self, u: Vec2) -> Result<CurveAcValue> {
        if u.norm() == 0.0 {
            return Err(Error::InvalidInput("query point must be nonzero".into()));
        }
        let sols = self.solutions(u);
        if sols.is_empty() {
            return Err(Error::NoSolution);
        }
        let mut value = 0.0;
        let mut solutions = Vec::with_capacity(sols.len());
        for (s, t) in sols {
            let jacobian = self.jacobian(s, t);
            if jacobian.abs() < JACOBIAN_TOL {
                return Err(Error::Degenerate { s, t, jacobian });
            }
            value += self.curve.density(s) * self.curve.density(t) / jacobian.abs();
            solutions.push(AcSolution { s, t, jacobian });
        }
        Ok(CurveAcValue { value, solutions })
    }

    /// Density with `NoSolution` read as 0.
    pub fn density_or_zero(&self, u: Vec2) -> Result<f64> {
        match self.density(u) {
            Ok(v) => Ok(v.value),
            Err(Error::NoSolution) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Midpoint rule with `m × m` nodes for the density over a box.
    pub fn integrate_box(&self, lo: Vec2, hi: Vec2, m: usize) -> Result<f64> {
        let (w, h) = ((hi.x - lo.x) / m as f64, (hi.y - lo.y) / m as f64);
        let vals: Result<Vec<f64>> = (0..m * m)
            .into_par_iter()
            .map(|k| {
                let p = lo + Vec2::new(((k % m) as f64 + 0.5) * w, ((k / m) as f64 + 0.5) * h);
                self.density_or_zero(p)
            })
            .collect();
        Ok(vals?.iter().sum::<f64>() * w * h)
    }
}

/// One-shot density query; see [`CurveAcSolver`] for repeated queries.
pub fn curve_ac_density(c: &CurveSpec, u: Vec2, grid: usize) -> Result<CurveAcValue> {
    CurveAcSolver::new(c, grid)?.density(u)
}
