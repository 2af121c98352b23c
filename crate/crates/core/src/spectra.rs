//! Candidate spectra and the checks behind them: orthogonality, the tiling
//! identity `Σ_λ |μ̂(x − λ)|² = const`, Beurling densities and line spectra.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::shifted_amplitudes;
use crate::geom2d::{is_parallel, Vec2};
use crate::measures::SceneMeasure;

/// Largest number of points used by [`orthogonality_check`].
pub const ORTHOGONALITY_CAP: usize = 500;
const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    /// `{o + m·b1 + n·b2}` for each offset `o`.
    Lattice { basis: [Vec2; 2], offsets: Vec<Vec2> },
    /// `{o + k·step : k ∈ ℤ}` for each offset `o`.
    LineAp { step: Vec2, offsets: Vec<Vec2> },
    List { points: Vec<Vec2> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCandidate {
    #[serde(flatten)]
    pub kind: SpectrumKind,
    /// Default truncation radius `R`.
    pub truncation: f64,
}

fn sort_by_norm(pts: &mut [Vec2]) {
    pts.sort_by(|a, b| {
        a.norm_sq()
            .total_cmp(&b.norm_sq())
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
    });
}

/// Integer range `k` with `|p + k·d − c| ≤ r`.
fn line_range(p: Vec2, d: Vec2, c: Vec2, r: f64) -> Option<(i64, i64)> {
    let w = p - c;
    let dd = d.norm_sq();
    let k0 = -w.dot(d) / dd;
    let perp2 = (w + d * k0).norm_sq();
    if perp2 > r * r {
        return None;
    }
    let half = ((r * r - perp2) / dd).sqrt();
    let (lo, hi) = ((k0 - half).ceil() as i64, (k0 + half).floor() as i64);
    (lo <= hi).then_some((lo, hi))
}

impl SpectrumCandidate {
    pub fn new(kind: SpectrumKind, truncation: f64) -> Result<Self> {
        let ok = match &kind {
            SpectrumKind::Lattice { basis, offsets } => {
                !is_parallel(basis[0], basis[1]) && basis[0].norm() > 0.0 && !offsets.is_empty()
            }
            SpectrumKind::LineAp { step, offsets } => step.norm() > 0.0 && step.is_finite() && !offsets.is_empty(),
            SpectrumKind::List { points } => points.iter().all(|p| p.is_finite()),
        };
        if !ok || !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::InvalidInput("invalid spectrum candidate".into()));
        }
        Ok(Self { kind, truncation })
    }

    pub fn lattice(b1: Vec2, b2: Vec2, offsets: Vec<Vec2>, truncation: f64) -> Result<Self> {
        Self::new(SpectrumKind::Lattice { basis: [b1, b2], offsets }, truncation)
    }

    pub fn line(step: Vec2, offsets: Vec<Vec2>, truncation: f64) -> Result<Self> {
        Self::new(SpectrumKind::LineAp { step, offsets }, truncation)
    }

    pub fn list(points: Vec<Vec2>, truncation: f64) -> Result<Self> {
        Self::new(SpectrumKind::List { points }, truncation)
    }

    /// Points in the closed ball `B(c, r)`, sorted by norm.
    pub fn enumerate_ball(&self, c: Vec2, r: f64) -> Vec<Vec2> {
        let mut out = Vec::new();
        self.visit_ball(c, r, |p| out.push(p));
        sort_by_norm(&mut out);
        out.dedup();
        out
    }

    /// Points in `B(0, r)`, sorted by norm.
    pub fn enumerate(&self, r: f64) -> Vec<Vec2> {
        self.enumerate_ball(Vec2::ZERO, r)
    }

    /// `#(Λ ∩ B(c, r))` without materializing the points.
    pub fn count_ball(&self, c: Vec2, r: f64) -> usize {
        match &self.kind {
            SpectrumKind::List { .. } => self.enumerate_ball(c, r).len(),
            _ => {
                let mut n = 0;
                self.visit_ball(c, r, |_| n += 1);
                n
            }
        }
    }

    fn visit_ball<F: FnMut(Vec2)>(&self, c: Vec2, r: f64, mut f: F) {
        let inside = |p: Vec2| p.distance(c) <= r;
        match &self.kind {
            SpectrumKind::List { points } => points.iter().copied().filter(|p| inside(*p)).for_each(f),
            SpectrumKind::LineAp { step, offsets } => {
                for o in offsets {
                    if let Some((lo, hi)) = line_range(*o, *step, c, r) {
                        for k in lo..=hi {
                            let p = *o + *step * k as f64;
                            if inside(p) {
                                f(p);
                            }
                        }
                    }
                }
            }
            SpectrumKind::Lattice { basis: [b1, b2], offsets } => {
                // Range of the b1 coefficient over the ball.
                let det = b1.cross(*b2);
                let row = Vec2::new(b2.y, -b2.x) * (1.0 / det);
                let span = r * row.norm();
                for o in offsets {
                    let m0 = row.dot(c - *o);
                    for m in (m0 - span).floor() as i64..=(m0 + span).ceil() as i64 {
                        let base = *o + *b1 * m as f64;
                        if let Some((lo, hi)) = line_range(base, *b2, c, r) {
                            for n in lo..=hi {
                                let p = base + *b2 * n as f64;
                                if inside(p) {
                                    f(p);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    /// `max |μ̂(λ − λ′)|` over distinct pairs.
    pub max: f64,
    pub worst_pair: Option<(Vec2, Vec2)>,
    pub points: usize,
}

/// Largest `|μ̂(λ − λ′)|` over the (at most 500) enumerated points nearest 0.
pub fn orthogonality_check(scene: &SceneMeasure, spectrum: &SpectrumCandidate) -> Result<OrthogonalityReport> {
    let mut pts = spectrum.enumerate(spectrum.truncation);
    pts.truncate(ORTHOGONALITY_CAP);
    Ok(orthogonality_of(scene, &pts))
}

/// Largest `|μ̂(λ − λ′)|` over distinct pairs of `pts`, without a cap.
pub fn orthogonality_of(scene: &SceneMeasure, pts: &[Vec2]) -> OrthogonalityReport {
    let amps = shifted_amplitudes(scene, pts, pts);
    let mut report = OrthogonalityReport {
        max: 0.0,
        worst_pair: None,
        points: pts.len(),
    };
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i != j {
                let v = amps[[i, j]].norm();
                if v > report.max || report.worst_pair.is_none() {
                    report.max = v;
                    report.worst_pair = Some((pts[i], pts[j]));
                }
            }
        }
    }
    report
}

/// Axis-aligned evaluation window; a zero-height window is a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Window {
    pub fn square(half_width: f64) -> Self {
        Self {
            lo: Vec2::new(-half_width, -half_width),
            hi: Vec2::new(half_width, half_width),
        }
    }

    /// `grid` points per non-degenerate axis, endpoints included.
    pub fn points(&self, grid: usize) -> Vec<Vec2> {
        let axis = |lo: f64, hi: f64| -> Vec<f64> {
            if hi <= lo || grid <= 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect()
            }
        };
        let xs = axis(self.lo.x, self.hi.x);
        let ys = axis(self.lo.y, self.hi.y);
        ys.iter().flat_map(|y| xs.iter().map(move |x| Vec2::new(*x, *y))).collect()
    }

    pub fn translated(&self, d: Vec2) -> Self {
        Self {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TilingReport {
    /// Median of the truncated sums at `R`.
    pub constant_estimate: f64,
    /// `max |sum − constant_estimate|` at `R`.
    pub max_residual: f64,
    pub constant_estimate_2r: f64,
    pub max_residual_2r: f64,
    pub window: Window,
    pub grid: usize,
    pub grid_points: usize,
    pub truncations_used: (f64, f64),
    pub spectrum_points: (usize, usize),
    pub tolerance: f64,
    pub converged: bool,
}

impl TilingReport {
    pub fn passes(&self) -> bool {
        self.converged && self.max_residual <= self.tolerance
    }
}

/// Truncated sums `Σ_{λ ∈ Λ, |λ| ≤ r} |μ̂(x − λ)|²` for each cutoff radius.
pub fn tiling_sums(scene: &SceneMeasure, spectrum: &SpectrumCandidate, xs: &[Vec2], radii: &[f64]) -> Vec<Vec<f64>> {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let lambdas = spectrum.enumerate(rmax);
    let chunks: Vec<&[Vec2]> = lambdas.chunks(CHUNK).collect();
    let partial: Vec<Vec<Vec<f64>>> = chunks
        .par_iter()
        .map(|chunk| {
            let amps = shifted_amplitudes(scene, xs, chunk);
            radii
                .iter()
                .map(|r| {
                    let cols: Vec<usize> = (0..chunk.len()).filter(|j| chunk[*j].norm() <= *r).collect();
                    (0..xs.len())
                        .map(|i| cols.iter().map(|j| amps[[i, *j]].norm_sqr()).sum())
                        .collect()
                })
                .collect()
        })
        .collect();
    // Sequential reduction keeps results independent of the thread count.
    let mut sums = vec![vec![0.0; xs.len()]; radii.len()];
    for p in partial {
        for (s, q) in sums.iter_mut().zip(p) {
            s.iter_mut().zip(q).for_each(|(a, b)| *a += b);
        }
    }
    sums
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Tiling residual at truncations `R` (the candidate's) and `2R`.
pub fn tiling_residual(
    scene: &SceneMeasure,
    spectrum: &SpectrumCandidate,
    window: Window,
    grid: usize,
    tol: f64,
) -> Result<TilingReport> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let r = spectrum.truncation;
    let xs = window.points(grid);
    let sums = tiling_sums(scene, spectrum, &xs, &[r, 2.0 * r]);
    let stats = |s: &[f64]| {
        let c = median(s);
        (c, s.iter().map(|v| (v - c).abs()).fold(0.0, f64::max))
    };
    let (c1, r1) = stats(&sums[0]);
    let (c2, r2) = stats(&sums[1]);
    Ok(TilingReport {
        constant_estimate: c1,
        max_residual: r1,
        constant_estimate_2r: c2,
        max_residual_2r: r2,
        window,
        grid,
        grid_points: xs.len(),
        truncations_used: (r, 2.0 * r),
        spectrum_points: (spectrum.enumerate(r).len(), spectrum.enumerate(2.0 * r).len()),
        tolerance: tol,
        converged: (r1 - r2).abs() < 0.25 * tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub radius: f64,
    pub upper: f64,
    pub lower: f64,
}

/// `sup`/`inf` of `#(Λ ∩ B(x, r))/r²` over a 32×32 grid of centers in `window`
/// (default `[−r, r]²`).
pub fn beurling_density(spectrum: &SpectrumCandidate, radii: &[f64], window: Option<Window>) -> Vec<DensityEstimate> {
    radii
        .iter()
        .map(|r| {
            let w = window.unwrap_or_else(|| Window::square(*r));
            let counts: Vec<f64> = w
                .points(32)
                .par_iter()
                .map(|c| spectrum.count_ball(*c, *r) as f64 / (r * r))
                .collect();
            DensityEstimate {
                radius: *r,
                upper: counts.iter().copied().fold(0.0, f64::max),
                lower: counts.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

/// Verification settings for [`line_spectrum_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineSearchOptions {
    pub truncation: f64,
    pub window: Window,
    pub grid: usize,
    pub tol: f64,
}

impl Default for LineSearchOptions {
    fn default() -> Self {
        Self {
            truncation: 200.0,
            window: Window::square(1.0),
            grid: 16,
            tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineSpectrum {
    pub direction: Vec2,
    pub angle: f64,
    /// `single_interval`, `two_intervals` or `product`.
    pub case: &'static str,
    pub spectrum: SpectrumCandidate,
    pub report: TilingReport,
    pub verified: bool,
}

const PROJ_REL_TOL: f64 = 1e-9;

/// Perpendicular offsets when the scene is `interval × {c_0 < … < c_{K−1}}`
/// with equally spaced `c_m` and equal weights: `{m/(K·g)}·u⊥`.
fn product_offsets(scene: &SceneMeasure, u: Vec2) -> Option<Vec<Vec2>> {
    let n = u.perp();
    let first = scene.segments.first()?;
    let interval = |s: &crate::measures::SegmentMeasure| {
        let a = u.dot(s.segment.start);
        let b = a + u.dot(s.segment.dir);
        (a.min(b), a.max(b))
    };
    let (a0, b0) = interval(first);
    let scale = (b0 - a0).abs().max(1e-300);
    let mut cs = Vec::new();
    for s in &scene.segments {
        if !is_parallel(s.segment.dir, u) || (s.weight - first.weight).abs() > PROJ_REL_TOL * first.weight {
            return None;
        }
        let (a, b) = interval(s);
        if (a - a0).abs() > PROJ_REL_TOL * scale || (b - b0).abs() > PROJ_REL_TOL * scale {
            return None;
        }
        cs.push(n.dot(s.segment.start));
    }
    cs.sort_by(f64::total_cmp);
    let k = cs.len();
    if k < 2 {
        return None;
    }
    let g = cs[1] - cs[0];
    if g.is_nan() || g <= 0.0 || cs.windows(2).any(|w| ((w[1] - w[0]) - g).abs() > PROJ_REL_TOL * g) {
        return None;
    }
    Some((0..k).map(|m| n * (m as f64 / (k as f64 * g))).collect())
}

/// Line-spectrum candidate from the projection onto the unit vector `u`, if
/// the projection is a constant multiple of Lebesgue measure on one interval
/// or on two equal intervals whose gap is an integer multiple of their length.
pub fn line_spectrum_at(scene: &SceneMeasure, u: Vec2, opts: LineSearchOptions) -> Result<Option<LineSpectrum>> {
    let proj = scene.project(u)?;
    if proj.has_atoms() || proj.constant_density(PROJ_REL_TOL).is_none() {
        return Ok(None);
    }
    let support = proj.support();
    let (case, step, mut offsets) = match support.as_slice() {
        [(a, b)] => ("single_interval", u * (1.0 / (b - a)), vec![Vec2::ZERO]),
        [(a0, b0), (a1, b1)] => {
            let (d0, d1) = (b0 - a0, b1 - a1);
            if (d0 - d1).abs() > PROJ_REL_TOL * d0 {
                return Ok(None);
            }
            let ratio = (a1 - b0) / d0;
            let k = ratio.round();
            if k < 1.0 || (ratio - k).abs() > PROJ_REL_TOL {
                return Ok(None);
            }
            (
                "two_intervals",
                u * (1.0 / d0),
                vec![Vec2::ZERO, u * (1.0 / (2.0 * (k + 1.0) * d0))],
            )
        }
        _ => return Ok(None),
    };
    let verify = |offsets: &[Vec2]| -> Result<(SpectrumCandidate, TilingReport)> {
        let sp = SpectrumCandidate::line(step, offsets.to_vec(), opts.truncation)?;
        let rep = tiling_residual(scene, &sp, opts.window, opts.grid, opts.tol)?;
        Ok((sp, rep))
    };
    let (mut spectrum, mut report) = verify(&offsets)?;
    let mut case = case;
    if !report.passes() && case == "single_interval" {
        if let Some(perp) = product_offsets(scene, u) {
            offsets = perp;
            let (sp, rep) = verify(&offsets)?;
            if rep.passes() {
                spectrum = sp;
                report = rep;
                case = "product";
            }
        }
    }
    let verified = report.passes();
    Ok(Some(LineSpectrum {
        direction: u,
        angle: u.y.atan2(u.x),
        case,
        spectrum,
        report,
        verified,
    }))
}

/// [`line_spectrum_at`] over `angle_count` directions `πk/angle_count`.
pub fn line_spectrum_search(scene: &SceneMeasure, angle_count: usize, opts: LineSearchOptions) -> Result<Vec<LineSpectrum>> {
    if !scene.is_segments_only() {
        return Err(Error::UnsupportedForCurves);
    }
    let found: Result<Vec<Option<LineSpectrum>>> = (0..angle_count)
        .into_par_iter()
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / angle_count as f64;
            line_spectrum_at(scene, Vec2::from_angle(th), opts)
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}

/// `Σ_λ |⟨f, e_λ⟩|²` and `‖f‖²` for `f = Σ c_j e^{2πi ξ_j·x}`.
pub fn bessel_sums(scene: &SceneMeasure, lambdas: &[Vec2], freqs: &[Vec2], coeffs: &[Complex64]) -> (f64, f64) {
    // ⟨f, e_λ⟩ = Σ_j c_j μ̂(λ − ξ_j)
    let a = shifted_amplitudes(scene, lambdas, freqs);
    let lhs = (0..lambdas.len())
        .map(|i| (0..freqs.len()).map(|j| coeffs[j] * a[[i, j]]).sum::<Complex64>().norm_sqr())
        .sum();
    let g = shifted_amplitudes(scene, freqs, freqs);
    let mut norm = Complex64::new(0.0, 0.0);
    for (j, cj) in coeffs.iter().enumerate() {
        for (k, ck) in coeffs.iter().enumerate() {
            // ∫ e^{2πi(ξ_j − ξ_k)·x} dμ = μ̂(ξ_k − ξ_j)
            norm += cj * ck.conj() * g[[k, j]];
        }
    }
    (lhs, norm.re)
}
