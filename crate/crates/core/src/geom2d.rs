//! Planar primitives and the covering / half-plane / chain tests built on them.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{ShiftedHalton, DEFAULT_PROBES};

/// Relative tolerance of the parallelism test `|u×v| <= tol·|u||v|`.
pub const PARALLEL_REL_TOL: f64 = 1e-12;
/// Endpoint identification tolerance, relative to the scene diameter.
pub const GEO_REL_TOL: f64 = 1e-9;
/// Band around pi inside which the half-plane test refuses to decide.
pub const HALF_PLANE_AMBIGUITY: f64 = 1e-12;
pub(crate) const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Vec2 {
        self * (1.0 / self.norm())
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// `x ↦ offset + scale·R(rotation)·x`, a rotation-scaling followed by a shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Similarity {
    #[serde(default)]
    pub offset: Vec2,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Similarity {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        offset: Vec2::ZERO,
        rotation: 0.0,
        scale: 1.0,
    };

    pub fn new(offset: Vec2, rotation: f64, scale: f64) -> Self {
        Self {
            offset,
            rotation,
            scale,
        }
    }

    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        self.offset + self.apply_vector(p)
    }

    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        v.rotate(self.rotation) * self.scale
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity {
            offset: self.apply_point(inner.offset),
            rotation: self.rotation + inner.rotation,
            scale: self.scale * inner.scale,
        }
    }
}

/// Scale-invariant parallelism test (same or opposite direction).
pub fn is_parallel(u: Vec2, v: Vec2) -> bool {
    u.cross(v).abs() <= PARALLEL_REL_TOL * u.norm() * v.norm()
}

/// Parallel and pointing the same way.
pub fn same_direction(u: Vec2, v: Vec2) -> bool {
    is_parallel(u, v) && u.dot(v) > 0.0
}

/// Direction angle folded into `[0, pi)`, identifying `v` with `-v`.
pub fn line_angle(v: Vec2) -> f64 {
    let a = v.angle().rem_euclid(PI);
    if a >= PI - 1e-15 {
        0.0
    } else {
        a
    }
}

/// `{start + t·dir : t ∈ [0, 1]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec2,
    pub dir: Vec2,
}

impl Segment {
    pub fn new(start: Vec2, dir: Vec2) -> Result<Self> {
        if !start.is_finite() || !dir.is_finite() {
            return Err(Error::InvalidInput("non-finite segment coordinates".into()));
        }
        if dir.norm() == 0.0 {
            return Err(Error::InvalidInput("segment direction is the zero vector".into()));
        }
        Ok(Self { start, dir })
    }

    pub fn between(a: Vec2, b: Vec2) -> Result<Self> {
        Self::new(a, b - a)
    }

    pub fn end(&self) -> Vec2 {
        self.start + self.dir
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        self.start + self.dir * t
    }

    pub fn length(&self) -> f64 {
        self.dir.norm()
    }
}

/// `origin + {t·e1 + s·e2 : t, s ∈ [0, 1]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parallelogram {
    pub origin: Vec2,
    pub e1: Vec2,
    pub e2: Vec2,
}

impl Parallelogram {
    pub fn new(origin: Vec2, e1: Vec2, e2: Vec2) -> Self {
        Self { origin, e1, e2 }
    }

    pub fn area(&self) -> f64 {
        self.e1.cross(self.e2).abs()
    }

    pub fn is_degenerate(&self) -> bool {
        is_parallel(self.e1, self.e2)
    }

    pub fn center(&self) -> Vec2 {
        self.origin + (self.e1 + self.e2) * 0.5
    }

    /// Parameters `(t, s)` with `p = origin + t·e1 + s·e2`.
    pub fn coordinates(&self, p: Vec2) -> Result<(f64, f64)> {
        if self.is_degenerate() {
            return Err(Error::DegenerateRegion);
        }
        let det = self.e1.cross(self.e2);
        let d = p - self.origin;
        Ok((d.cross(self.e2) / det, self.e1.cross(d) / det))
    }

    /// Closed membership with tolerance `tol` applied to both parameters.
    pub fn contains(&self, p: Vec2, tol: f64) -> Result<bool> {
        let (t, s) = self.coordinates(p)?;
        Ok((-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&s))
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let (a, b) = if self.e1.cross(self.e2) >= 0.0 {
            (self.e1, self.e2)
        } else {
            (self.e2, self.e1)
        };
        let o = self.origin;
        [o, o + a, o + a + b, o + b]
    }

    pub fn translated(&self, d: Vec2) -> Self {
        Self::new(self.origin + d, self.e1, self.e2)
    }

    /// Reflection through the origin, expressed as a parallelogram again.
    pub fn reflected(&self) -> Self {
        Self::new(-(self.origin + self.e1 + self.e2), self.e1, self.e2)
    }

    /// The four edges as `(start, end)` pairs.
    pub fn edges(&self) -> [(Vec2, Vec2); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }
}

pub fn parallelogram_contains(q: &Parallelogram, p: Vec2, tol: f64) -> Result<bool> {
    q.contains(p, tol)
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Distance from `p` to the infinite line through `a` with direction `dir`.
pub fn point_line_distance(p: Vec2, a: Vec2, dir: Vec2) -> f64 {
    (p - a).cross(dir).abs() / dir.norm()
}

/// Whether the closed segment `[a, b]` meets the box `[lo, hi]` grown by `pad`.
pub fn segment_meets_box(a: Vec2, b: Vec2, lo: Vec2, hi: Vec2, pad: f64) -> bool {
    // Liang–Barsky on the padded box.
    let (lo, hi) = (lo - Vec2::new(pad, pad), hi + Vec2::new(pad, pad));
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Signed area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Sutherland–Hodgman clip of `subject` by the convex counter-clockwise polygon `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let edge = b - a;
        let inside = |p: Vec2| edge.cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let d = cur - prev;
                let denom = edge.cross(d);
                if denom != 0.0 {
                    let t = edge.cross(a - prev) / denom;
                    out.push(prev + d * t);
                }
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Area of the intersection of two convex counter-clockwise polygons.
pub fn convex_intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let clipped = clip_convex(a, b);
    if clipped.len() < 3 {
        0.0
    } else {
        polygon_area(&clipped).abs()
    }
}

/// Axis-aligned box as a counter-clockwise polygon.
pub fn box_polygon(lo: Vec2, hi: Vec2) -> [Vec2; 4] {
    [lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)]
}

/// Outcome of the angular-gap half-plane test.
#[derive(Debug, Clone, Copy, PartialEq)]
enum HalfPlane {
    /// No closed half-plane contains all vectors.
    Absent,
    /// All vectors satisfy `normal·v >= 0`.
    Present { normal: Vec2 },
}

fn half_plane_test(vectors: &[Vec2]) -> Result<HalfPlane> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("empty vector list".into()));
    }
    if vectors.iter().any(|v| !v.is_finite() || v.norm() == 0.0) {
        return Err(Error::InvalidInput("zero or non-finite vector".into()));
    }
    let mut ang: Vec<(f64, Vec2)> = vectors.iter().map(|v| (v.angle(), *v)).collect();
    ang.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = ang.len();
    // Gap from ang[i] to ang[i+1] (wrapping past 2pi for the last one).
    let (mut best, mut gap) = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let g = if i + 1 < n {
            ang[i + 1].0 - ang[i].0
        } else {
            ang[0].0 + 2.0 * PI - ang[i].0
        };
        if g > gap {
            gap = g;
            best = i;
        }
    }
    let lo = ang[best];
    let hi = ang[(best + 1) % n];
    let normal = || {
        // The vectors occupy the arc from `hi` counter-clockwise to `lo`.
        let width = 2.0 * PI - gap;
        Vec2::from_angle(hi.0 + 0.5 * width)
    };
    if gap < PI - HALF_PLANE_AMBIGUITY {
        return Ok(HalfPlane::Absent);
    }
    if gap > PI + HALF_PLANE_AMBIGUITY {
        return Ok(HalfPlane::Present { normal: normal() });
    }
    // Exactly opposite bounding vectors put everything in a closed half-plane.
    if gap == PI || (lo.1.cross(hi.1) == 0.0 && lo.1.dot(hi.1) < 0.0) {
        return Ok(HalfPlane::Present {
            normal: lo.1.normalized().perp(),
        });
    }
    Err(Error::Ambiguous {
        gap_minus_pi: gap - PI,
    })
}

/// True iff no closed half-plane `{x : u·x >= 0}` contains every vector.
///
/// Decided by the largest circular gap between sorted vector angles (strictly
/// below pi means no such half-plane). Gaps within `1e-12` of pi that are not
/// exactly pi return [`Error::Ambiguous`].
pub fn no_closed_half_plane(vectors: &[Vec2]) -> Result<bool> {
    Ok(matches!(half_plane_test(vectors)?, HalfPlane::Absent))
}

/// Parallelograms spanned by pairs of vectors together with a certified radius
/// `r*` such that their union contains the closed disk `B(0, r*)`.
#[derive(Debug, Clone, Serialize)]
pub struct Covering {
    pub parallelograms: Vec<Parallelogram>,
    pub radius: f64,
    pub halvings: u32,
}

impl Covering {
    pub fn covers(&self, p: Vec2) -> bool {
        union_contains(&self.parallelograms, p, GEO_REL_TOL)
    }
}

pub(crate) fn union_contains(pieces: &[Parallelogram], p: Vec2, tol: f64) -> bool {
    pieces
        .iter()
        .any(|q| q.contains(p, tol).unwrap_or(false))
}

/// Initial radius guess: half the shortest vector times the smallest nonzero
/// `|sin|` of a pairwise angle.
pub(crate) fn initial_radius(vectors: &[Vec2]) -> f64 {
    let min_len = vectors.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let mut min_sin = f64::INFINITY;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            if !is_parallel(*a, *b) {
                min_sin = min_sin.min((a.cross(*b) / (a.norm() * b.norm())).abs());
            }
        }
    }
    if !min_sin.is_finite() {
        min_sin = 1.0;
    }
    0.5 * min_len * min_sin
}

pub fn covering_parallelograms(vectors: &[Vec2]) -> Result<Covering> {
    covering_parallelograms_with(vectors, DEFAULT_PROBES, 0)
}

/// [`covering_parallelograms`] with an explicit probe count and probe seed.
pub fn covering_parallelograms_with(vectors: &[Vec2], probes: usize, seed: u64) -> Result<Covering> {
    if vectors.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 vectors, got {}",
            vectors.len()
        )));
    }
    if let HalfPlane::Present { normal } = half_plane_test(vectors)? {
        return Err(Error::HalfPlaneObstruction { normal });
    }
    let mut parallelograms = Vec::new();
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            if i != j && !is_parallel(*a, *b) {
                parallelograms.push(Parallelogram::new(Vec2::ZERO, *a, *b));
            }
        }
    }
    let halton = ShiftedHalton::new(seed);
    let mut radius = initial_radius(vectors);
    let mut witness = Vec2::ZERO;
    for halvings in 0..=MAX_HALVINGS {
        match halton
            .disk_points(probes, radius)
            .find(|p| !union_contains(&parallelograms, *p, GEO_REL_TOL))
        {
            None => {
                return Ok(Covering {
                    parallelograms,
                    radius,
                    halvings,
                })
            }
            Some(p) => witness = p,
        }
        radius *= 0.5;
    }
    Err(Error::CoverageFailure {
        halvings: MAX_HALVINGS,
        witness,
    })
}

/// A closed chain extracted from the segment graph.
#[derive(Debug, Clone, Serialize)]
pub struct Cycle {
    /// Vertex positions in traversal order (first vertex not repeated).
    pub vertices: Vec<Vec2>,
    /// Edge vectors in traversal order; they sum to zero.
    pub vectors: Vec<Vec2>,
    /// `vectors` after cyclically merging adjacent parallel entries.
    pub merged: Vec<Vec2>,
}

impl Cycle {
    pub fn merged_direction_count(&self) -> usize {
        self.merged.len()
    }

    pub fn closure_error(&self) -> f64 {
        self.vectors.iter().fold(Vec2::ZERO, |a, v| a + *v).norm()
    }
}

/// A junction of the segment graph and the unit directions leaving it.
#[derive(Debug, Clone, Serialize)]
pub struct Hub {
    pub point: Vec2,
    pub degree: usize,
    pub directions: Vec<Vec2>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ChainReport {
    pub cycles: Vec<Cycle>,
    pub hubs: Vec<Hub>,
    /// Endpoint identification tolerance used.
    pub tolerance: f64,
}

pub(crate) fn diameter(points: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(a.distance(*b));
        }
    }
    d
}

/// Split segments at every crossing and every endpoint that touches another
/// segment's interior.
fn split_segments(segments: &[Segment], tol: f64) -> Vec<(Vec2, Vec2)> {
    let mut pieces = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        let len = s.length();
        let mut cuts = vec![0.0, 1.0];
        for (j, o) in segments.iter().enumerate() {
            if i == j {
                continue;
            }
            for p in [o.start, o.end()] {
                if point_segment_distance(p, s.start, s.end()) <= tol {
                    cuts.push(((p - s.start).dot(s.dir) / (len * len)).clamp(0.0, 1.0));
                }
            }
            let det = s.dir.cross(o.dir);
            if !is_parallel(s.dir, o.dir) {
                let d = o.start - s.start;
                let t = d.cross(o.dir) / det;
                let u = d.cross(s.dir) / det;
                if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                    cuts.push(t);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() * len <= tol);
        if let Some(last) = cuts.last_mut() {
            *last = 1.0;
        }
        for w in cuts.windows(2) {
            pieces.push((s.point_at(w[0]), s.point_at(w[1])));
        }
    }
    pieces
}

fn merge_parallel_cyclic(mut v: Vec<Vec2>, tol: f64) -> Vec<Vec2> {
    loop {
        v.retain(|x| x.norm() > tol);
        if v.len() < 2 {
            return v;
        }
        let n = v.len();
        let hit = (0..n).find(|&i| is_parallel(v[i], v[(i + 1) % n]));
        match hit {
            Some(i) => {
                let j = (i + 1) % n;
                v[i] = v[i] + v[j];
                v.remove(j);
            }
            None => return v,
        }
    }
}

struct Graph {
    nodes: Vec<Vec2>,
    /// (a, b, vector from a to b)
    edges: Vec<(usize, usize, Vec2)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    fn build(segments: &[Segment]) -> (Graph, f64) {
        let pts: Vec<Vec2> = segments.iter().flat_map(|s| [s.start, s.end()]).collect();
        let tol = GEO_REL_TOL * diameter(&pts).max(f64::MIN_POSITIVE);
        let pieces = split_segments(segments, tol);
        let mut raw: Vec<Vec2> = Vec::new();
        let id_of = |p: Vec2, raw: &mut Vec<Vec2>| -> usize {
            match raw.iter().position(|q| q.distance(p) <= tol) {
                Some(k) => k,
                None => {
                    raw.push(p);
                    raw.len() - 1
                }
            }
        };
        let mut raw_edges = Vec::new();
        for (a, b) in &pieces {
            let ia = id_of(*a, &mut raw);
            let ib = id_of(*b, &mut raw);
            if ia != ib {
                raw_edges.push((ia, ib, *b - *a));
            }
        }
        // Lexicographic node order makes the traversal deterministic.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&i, &j| {
            raw[i]
                .x
                .total_cmp(&raw[j].x)
                .then(raw[i].y.total_cmp(&raw[j].y))
        });
        let mut rank = vec![0; raw.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let nodes: Vec<Vec2> = order.iter().map(|&i| raw[i]).collect();
        let edges: Vec<(usize, usize, Vec2)> = raw_edges
            .into_iter()
            .map(|(a, b, v)| (rank[a], rank[b], v))
            .collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for (e, &(a, b, _)) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        (Graph { nodes, edges, adj }, tol)
    }

    /// Depth-first search for a cycle through unused edges reachable from `start`.
    /// Returns the traversed `(from, edge)` steps.
    fn find_cycle(&self, start: usize, used: &[bool]) -> Option<Vec<(usize, usize)>> {
        let n = self.nodes.len();
        let mut on_path = vec![usize::MAX; n];
        let mut visited = vec![false; n];
        // (node, edge used to enter it, next adjacency index)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(start, None, 0)];
        on_path[start] = 0;
        visited[start] = true;
        while let Some(&mut (node, via, ref mut next)) = stack.last_mut() {
            if *next >= self.adj[node].len() {
                on_path[node] = usize::MAX;
                stack.pop();
                continue;
            }
            let (nb, e) = self.adj[node][*next];
            *next += 1;
            if used[e] || Some(e) == via {
                continue;
            }
            if on_path[nb] != usize::MAX {
                let k0 = on_path[nb];
                let mut steps = Vec::new();
                for k in k0 + 1..stack.len() {
                    steps.push((stack[k - 1].0, stack[k].1.expect("entered by an edge")));
                }
                steps.push((node, e));
                return Some(steps);
            }
            if visited[nb] {
                continue;
            }
            visited[nb] = true;
            on_path[nb] = stack.len();
            stack.push((nb, Some(e), 0));
        }
        None
    }
}

/// Builds the endpoint multigraph of a union of segments (after splitting at
/// crossings) and reports edge-disjoint closed chains plus junction points.
///
/// Cycles are peeled greedily: repeatedly search from the lexicographically
/// smallest node with unused edges and remove the first cycle found. A node is
/// reported as a hub when its degree is at least 3, or when it has degree 2 and
/// lies on no extracted cycle (the corner of an open chain).
pub fn chain_analysis(segments: &[Segment]) -> ChainReport {
    if segments.is_empty() {
        return ChainReport::default();
    }
    let (g, tol) = Graph::build(segments);
    let mut used = vec![false; g.edges.len()];
    let mut on_cycle = vec![false; g.nodes.len()];
    let mut cycles = Vec::new();
    'peel: loop {
        for start in 0..g.nodes.len() {
            if g.adj[start].iter().all(|&(_, e)| used[e]) {
                continue;
            }
            if let Some(steps) = g.find_cycle(start, &used) {
                let mut vertices = Vec::with_capacity(steps.len());
                let mut vectors = Vec::with_capacity(steps.len());
                for &(from, e) in &steps {
                    used[e] = true;
                    on_cycle[from] = true;
                    let (a, _, v) = g.edges[e];
                    vertices.push(g.nodes[from]);
                    vectors.push(if a == from { v } else { -v });
                }
                let merged = merge_parallel_cyclic(vectors.clone(), tol);
                cycles.push(Cycle {
                    vertices,
                    vectors,
                    merged,
                });
                continue 'peel;
            }
        }
        break;
    }
    let mut hubs = Vec::new();
    for (i, p) in g.nodes.iter().enumerate() {
        let degree = g.adj[i].len();
        if degree >= 3 || (degree == 2 && !on_cycle[i]) {
            let mut directions: Vec<Vec2> = Vec::new();
            for &(_, e) in &g.adj[i] {
                let (a, _, v) = g.edges[e];
                let d = if a == i { v } else { -v }.normalized();
                if !directions.iter().any(|q| same_direction(*q, d)) {
                    directions.push(d);
                }
            }
            hubs.push(Hub {
                point: *p,
                degree,
                directions,
            });
        }
    }
    ChainReport {
        cycles,
        hubs,
        tolerance: tol,
    }
}
