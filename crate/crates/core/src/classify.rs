//! Non-spectrality verdicts with re-checkable certificates.

use serde::Serialize;

use crate::autocorr::{decompose_with, CoverageOptions, OriginReport};
use crate::curves::{curve_report, CurveReport, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::geom2d::{
    chain_analysis, convex_intersection_area, initial_radius, is_parallel, same_direction, Hub, Parallelogram, Segment,
    Vec2,
};
use crate::measures::{CurveSpec, SceneMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// The segments contain a closed polygonal chain.
    #[serde(rename = "NonSpectral_T1_closed")]
    NonSpectralT1Closed,
    /// Three segments leave a common point in distinct directions.
    #[serde(rename = "NonSpectral_T1_hub")]
    NonSpectralT1Hub,
    /// The autocorrelation is locally constant off lines through the origin.
    #[serde(rename = "NonSpectral_T1_extended")]
    NonSpectralT1Extended,
    /// Smooth closed curve with positive curvature and transverse crossings.
    #[serde(rename = "NonSpectral_T2_curve")]
    NonSpectralT2Curve,
    Inconclusive,
}

impl Outcome {
    pub fn is_non_spectral(self) -> bool {
        self != Outcome::Inconclusive
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::NonSpectralT1Closed => "NonSpectral_T1_closed",
            Outcome::NonSpectralT1Hub => "NonSpectral_T1_hub",
            Outcome::NonSpectralT1Extended => "NonSpectral_T1_extended",
            Outcome::NonSpectralT2Curve => "NonSpectral_T2_curve",
            Outcome::Inconclusive => "Inconclusive",
        }
    }

    /// Result the outcome rests on.
    pub fn citation(self) -> &'static str {
        match self {
            Outcome::NonSpectralT1Closed => "Theorem 1(1)",
            Outcome::NonSpectralT1Hub => "Theorem 1(2)",
            Outcome::NonSpectralT1Extended => "Theorem 1(1), argument of its proof",
            Outcome::NonSpectralT2Curve => "Theorem 2",
            Outcome::Inconclusive => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HubCertificate {
    pub point: Vec2,
    /// Three unit directions leaving `point`.
    pub directions: [Vec2; 3],
    /// `"opposite_pair"` when two directions are opposite, else `"pairwise_non_parallel"`.
    pub case: &'static str,
    /// Radius of the punctured disk covered by the six `Q_{vi,−vj}` (off the three lines).
    pub covered_radius: f64,
    /// Whether the six parallelograms have pairwise disjoint interiors.
    pub interiors_disjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Cycle {
        vertices: Vec<Vec2>,
        vectors: Vec<Vec2>,
        merged: Vec<Vec2>,
        closure_error: f64,
    },
    Hub(HubCertificate),
    Origin(OriginReport),
    Curve(Box<CurveReport>),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub citation: &'static str,
    pub certificate: Certificate,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(outcome: Outcome, certificate: Certificate, notes: Vec<String>) -> Self {
        Self {
            outcome,
            citation: outcome.citation(),
            certificate,
            notes,
        }
    }
}

/// Options for the probabilistic parts of classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub coverage: CoverageOptions,
    pub curve_samples: usize,
    pub curve_grid: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            coverage: CoverageOptions::default(),
            curve_samples: DEFAULT_SAMPLES,
            curve_grid: 256,
        }
    }
}

fn hub_triple(hub: &Hub) -> Option<([Vec2; 3], &'static str)> {
    let mut distinct: Vec<Vec2> = Vec::new();
    for d in &hub.directions {
        if !distinct.iter().any(|e| same_direction(*d, *e)) {
            distinct.push(*d);
        }
    }
    // Prefer a pairwise non-parallel triple, then an opposite pair plus a third.
    let n = distinct.len();
    let mut fallback = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = [distinct[i], distinct[j], distinct[k]];
                let parallel = [(0, 1), (0, 2), (1, 2)]
                    .iter()
                    .filter(|(a, b)| is_parallel(t[*a], t[*b]))
                    .count();
                match parallel {
                    0 => return Some((t, "pairwise_non_parallel")),
                    1 if fallback.is_none() => fallback = Some((t, "opposite_pair")),
                    _ => {}
                }
            }
        }
    }
    fallback
}

/// The six parallelograms `Q_{vi,−vj}`, `i ≠ j`.
pub fn hub_parallelograms(dirs: &[Vec2; 3]) -> Vec<Parallelogram> {
    let mut out = Vec::new();
    for (i, a) in dirs.iter().enumerate() {
        for (j, b) in dirs.iter().enumerate() {
            if i != j && !is_parallel(*a, *b) {
                out.push(Parallelogram::new(Vec2::ZERO, *a, -*b));
            }
        }
    }
    out
}

fn hub_certificate(point: Vec2, dirs: [Vec2; 3], case: &'static str, opts: CoverageOptions) -> Result<HubCertificate> {
    let local = SceneMeasure::uniform_segments(
        &dirs
            .iter()
            .map(|d| Segment::new(Vec2::ZERO, *d))
            .collect::<Result<Vec<_>>>()?,
    );
    let covered_radius = decompose_with(&local, opts)?.origin_report.covered_radius;
    let qs = hub_parallelograms(&dirs);
    let mut interiors_disjoint = true;
    for (i, a) in qs.iter().enumerate() {
        for b in &qs[i + 1..] {
            if convex_intersection_area(&a.corners(), &b.corners()) > 1e-12 {
                interiors_disjoint = false;
            }
        }
    }
    Ok(HubCertificate {
        point,
        directions: dirs,
        case,
        covered_radius,
        interiors_disjoint,
    })
}

pub fn classify_segments(scene: &SceneMeasure) -> Result<Verdict> {
    classify_segments_with(scene, ClassifyOptions::default())
}

pub fn classify_segments_with(scene: &SceneMeasure, opts: ClassifyOptions) -> Result<Verdict> {
    if !scene.is_segments_only() {
        return Err(Error::UnsupportedForCurves);
    }
    let segments: Vec<Segment> = scene.segment_list();
    let chains = chain_analysis(&segments);
    let mut notes = Vec::new();
    if let Some(c) = chains.cycles.iter().find(|c| c.merged_direction_count() >= 2) {
        return Ok(Verdict::new(
            Outcome::NonSpectralT1Closed,
            Certificate::Cycle {
                vertices: c.vertices.clone(),
                vectors: c.vectors.clone(),
                merged: c.merged.clone(),
                closure_error: c.closure_error(),
            },
            notes,
        ));
    }
    for hub in &chains.hubs {
        let Some((dirs, case)) = hub_triple(hub) else { continue };
        let cert = hub_certificate(hub.point, dirs, case, opts.coverage)?;
        if cert.covered_radius > 0.0 {
            if !cert.interiors_disjoint {
                notes.push("hub parallelograms overlap; coverage was verified by probing".into());
            }
            return Ok(Verdict::new(Outcome::NonSpectralT1Hub, Certificate::Hub(cert), notes));
        }
        notes.push(format!(
            "hub at ({}, {}) has three distinct directions but probing found no covered disk",
            hub.point.x, hub.point.y
        ));
    }
    let d = decompose_with(scene, opts.coverage)?;
    let report = d.origin_report;
    if report.certified_radius > 0.0 {
        return Ok(Verdict::new(Outcome::NonSpectralT1Extended, Certificate::Origin(report), notes));
    }
    if report.covered_radius > 0.0 {
        notes.push("AC pieces cover a punctured disk but a carrier or edge off the origin lines meets it".into());
    } else {
        notes.push("AC pieces do not cover a punctured neighbourhood of the origin".into());
    }
    Ok(Verdict::new(Outcome::Inconclusive, Certificate::Origin(report), notes))
}

pub fn classify_curve(c: &CurveSpec) -> Verdict {
    classify_curve_with(c, ClassifyOptions::default())
}

pub fn classify_curve_with(c: &CurveSpec, opts: ClassifyOptions) -> Verdict {
    let report = curve_report(c, opts.curve_samples, opts.curve_grid);
    let mut notes: Vec<String> = report.errors.clone();
    if !report.closed {
        notes.push("curve is not closed".into());
    }
    match report.curvature {
        Some(k) if k.min > 0.0 || k.max < 0.0 => {}
        Some(k) => notes.push(format!("curvature changes sign or vanishes (min {}, max {})", k.min, k.max)),
        None => {}
    }
    if let Some(recs) = &report.intersections {
        if recs.iter().any(|r| !r.transverse) {
            notes.push("a self-intersection is not transverse".into());
        }
    }
    let outcome = if notes.is_empty() {
        Outcome::NonSpectralT2Curve
    } else {
        Outcome::Inconclusive
    };
    Verdict::new(outcome, Certificate::Curve(Box::new(report)), notes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentVerdict {
    /// `"segments"` or `"curve[i]"`.
    pub component: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneVerdict {
    pub components: Vec<ComponentVerdict>,
    pub combined: Verdict,
}

/// Classify every component; the union is non-spectral as soon as one
/// component is (restriction of a tight frame to a sub-measure).
pub fn classify_scene(scene: &SceneMeasure, opts: ClassifyOptions) -> Result<SceneVerdict> {
    let mut components = Vec::new();
    if !scene.segments.is_empty() {
        let segs = SceneMeasure::from_segments(scene.segments.clone());
        let (segs, _) = segs.normalized()?;
        components.push(ComponentVerdict {
            component: "segments".into(),
            verdict: classify_segments_with(&segs, opts)?,
        });
    }
    for (i, c) in scene.curves.iter().enumerate() {
        components.push(ComponentVerdict {
            component: format!("curve[{i}]"),
            verdict: classify_curve_with(c, opts),
        });
    }
    let combined = match components.iter().find(|c| c.verdict.outcome.is_non_spectral()) {
        Some(c) => {
            let mut v = c.verdict.clone();
            if components.len() > 1 {
                v.notes.push(format!("union contains non-spectral component {}", c.component));
            }
            v
        }
        None => Verdict::new(
            Outcome::Inconclusive,
            Certificate::None,
            vec!["no component satisfies a non-spectrality criterion".into()],
        ),
    };
    Ok(SceneVerdict { components, combined })
}

/// Re-check a segment verdict's certificate independently, using `seed` for any probing.
pub fn revalidate(scene: &SceneMeasure, verdict: &Verdict, seed: u64) -> Result<bool> {
    let opts = CoverageOptions {
        seed,
        ..CoverageOptions::default()
    };
    Ok(match (&verdict.outcome, &verdict.certificate) {
        (Outcome::NonSpectralT1Closed, Certificate::Cycle { vectors, merged, .. }) => {
            let sum = vectors.iter().fold(Vec2::ZERO, |a, v| a + *v);
            let scale = vectors.iter().map(|v| v.norm()).sum::<f64>();
            sum.norm() <= 1e-9 * scale && merged.len() >= 2
        }
        (Outcome::NonSpectralT1Hub, Certificate::Hub(h)) => {
            let distinct = (0..3).all(|i| (i + 1..3).all(|j| !same_direction(h.directions[i], h.directions[j])));
            distinct && hub_certificate(h.point, h.directions, h.case, opts)?.covered_radius > 0.0
        }
        (Outcome::NonSpectralT1Extended, Certificate::Origin(r)) => {
            let d = decompose_with(scene, opts)?;
            let dirs: Vec<Vec2> = scene.segments.iter().map(|s| s.segment.dir).collect();
            let fresh = d.probe_origin(initial_radius(&dirs), opts);
            fresh.certified_radius > 0.0 && r.certified_radius > 0.0
        }
        (Outcome::NonSpectralT2Curve, Certificate::Curve(_)) => true,
        (Outcome::Inconclusive, _) => true,
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::geom2d::Similarity;

    fn outcome(s: &SceneMeasure) -> Outcome {
        classify_scene(s, ClassifyOptions::default()).unwrap().combined.outcome
    }

    #[test]
    fn segment_examples() {
        let v = classify_segments(&catalog::square()).unwrap();
        assert_eq!(v.outcome, Outcome::NonSpectralT1Closed);
        assert!(revalidate(&catalog::square(), &v, 1).unwrap());

        let v = classify_segments(&catalog::plus_space()).unwrap();
        assert_eq!(v.outcome, Outcome::NonSpectralT1Hub);
        let Certificate::Hub(h) = &v.certificate else { panic!() };
        assert_eq!(h.case, "opposite_pair");
        assert!(h.interiors_disjoint);
        assert!(revalidate(&catalog::plus_space(), &v, 1).unwrap());

        let v = classify_segments(&catalog::pi_shape()).unwrap();
        assert_eq!(v.outcome, Outcome::NonSpectralT1Extended);
        assert!(revalidate(&catalog::pi_shape(), &v, 7).unwrap());

        assert_eq!(classify_segments(&catalog::l_shape()).unwrap().outcome, Outcome::Inconclusive);
        assert_eq!(classify_segments(&catalog::stacked_segments()).unwrap().outcome, Outcome::Inconclusive);
        assert_eq!(classify_segments(&catalog::unit_segment()).unwrap().outcome, Outcome::Inconclusive);
    }

    #[test]
    fn star_hub_in_half_plane() {
        // Three directions in an open half-plane: parallelograms overlap but still cover.
        let scene = SceneMeasure::uniform_segments(&[
            Segment::new(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap(),
            Segment::new(Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap(),
            Segment::new(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap(),
        ]);
        let v = classify_segments(&scene).unwrap();
        assert_eq!(v.outcome, Outcome::NonSpectralT1Hub);
        let Certificate::Hub(h) = &v.certificate else { panic!() };
        assert!(!h.interiors_disjoint);
    }

    #[test]
    fn curve_examples() {
        for s in [catalog::circle(), catalog::limacon(1.0, 2.0), catalog::ellipse(2.0, 1.0)] {
            assert_eq!(classify_curve(&s.curves[0]).outcome, Outcome::NonSpectralT2Curve);
        }
        let v = classify_curve(&catalog::semicircle_arclength().curves[0]);
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(v.notes.iter().any(|n| n.contains("not closed")));
    }

    #[test]
    fn adding_disjoint_segments_keeps_non_spectral() {
        let far = Segment::new(Vec2::new(10.0, 10.0), Vec2::new(0.7, 0.2)).unwrap();
        for base in [catalog::square(), catalog::plus_space(), catalog::pi_shape()] {
            let before = outcome(&base);
            let mut segs = base.segment_list();
            segs.push(far);
            let after = outcome(&SceneMeasure::uniform_segments(&segs));
            assert!(before.is_non_spectral() && after.is_non_spectral());
        }
        let mut mixed = catalog::l_shape();
        mixed.curves = catalog::circle().curves;
        let mixed = mixed.transformed(&Similarity::IDENTITY);
        let (mixed, _) = mixed.normalized().unwrap();
        let v = classify_scene(&mixed, ClassifyOptions::default()).unwrap();
        assert_eq!(v.components[0].verdict.outcome, Outcome::Inconclusive);
        assert_eq!(v.combined.outcome, Outcome::NonSpectralT2Curve);
    }

    #[test]
    fn verdicts_serialize_with_labels() {
        let v = classify_segments(&catalog::square()).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["outcome"], "NonSpectral_T1_closed");
        assert_eq!(j["certificate"]["kind"], "cycle");
    }
}
