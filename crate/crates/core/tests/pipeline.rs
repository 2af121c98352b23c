use std::path::PathBuf;

use proptest::prelude::*;

use specgeo::autocorr::decompose;
use specgeo::classify::{classify_scene, ClassifyOptions, Outcome};
use specgeo::fourier::power;
use specgeo::scene::{load_scene, SceneFile};
use specgeo::spectra::{orthogonality_check, tiling_residual, Window};
use specgeo::{SceneMeasure, Segment, Vec2};

fn scene_file(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn shipped_scenes_classify_as_expected() {
    let expected = [
        ("square.json", Outcome::NonSpectralT1Closed),
        ("square_z2.json", Outcome::NonSpectralT1Closed),
        ("plus.json", Outcome::NonSpectralT1Hub),
        ("lshape.json", Outcome::Inconclusive),
        ("pi.json", Outcome::NonSpectralT1Extended),
        ("stacked.json", Outcome::Inconclusive),
        ("semicircle.json", Outcome::Inconclusive),
        ("semicircle_arclength.json", Outcome::Inconclusive),
        ("circle.json", Outcome::NonSpectralT2Curve),
        ("ellipse.json", Outcome::NonSpectralT2Curve),
        ("limacon.json", Outcome::NonSpectralT2Curve),
    ];
    for (name, outcome) in expected {
        let s = load_scene(&scene_file(name)).unwrap();
        assert!(s.measure.is_normalized(), "{name}");
        let v = classify_scene(&s.measure, ClassifyOptions::default()).unwrap();
        assert_eq!(v.combined.outcome, outcome, "{name}");
    }
}

#[test]
fn shipped_spectra_are_orthogonal() {
    for name in ["lshape.json", "stacked.json", "semicircle.json"] {
        let s = load_scene(&scene_file(name)).unwrap();
        let mut sp = s.spectrum.unwrap();
        sp.truncation = 40.0;
        let o = orthogonality_check(&s.measure, &sp).unwrap();
        assert!(o.max <= 1e-9, "{name}: {o:?}");
        let t = tiling_residual(&s.measure, &sp, Window::square(0.5), 6, 5e-2).unwrap();
        assert!(t.passes(), "{name}: {t:?}");
    }
    let s = load_scene(&scene_file("square_z2.json")).unwrap();
    let mut sp = s.spectrum.unwrap();
    sp.truncation = 20.0;
    assert!(orthogonality_check(&s.measure, &sp).unwrap().max >= 0.25);
}

#[test]
fn classification_is_monotone_under_added_segments() {
    // A closed cycle stays a closed cycle when a far segment is added.
    let mut m = specgeo::catalog::square();
    m.segments.push(specgeo::SegmentMeasure::new(
        Segment::new(Vec2::new(10.0, 10.0), Vec2::new(0.3, 0.7)).unwrap(),
        0.25,
    ));
    let (m, _) = m.normalized().unwrap();
    let v = classify_scene(&m, ClassifyOptions::default()).unwrap();
    assert!(v.combined.outcome.is_non_spectral());
}

fn segment_scene() -> impl Strategy<Value = SceneMeasure> {
    proptest::collection::vec(
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, 0.1..1.0f64),
        1..5,
    )
    .prop_filter_map("degenerate segment", |v| {
        let segs: Option<Vec<_>> = v
            .iter()
            .map(|(x, y, dx, dy, w)| {
                Segment::new(Vec2::new(*x, *y), Vec2::new(*dx, *dy))
                    .ok()
                    .filter(|s| s.length() > 1e-3)
                    .map(|s| specgeo::SegmentMeasure::new(s, *w))
            })
            .collect();
        segs.map(|s| SceneMeasure::from_segments(s).normalized().unwrap().0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_matches_power(scene in segment_scene(), x in -6.0..6.0f64, y in -6.0..6.0f64) {
        let dec = decompose(&scene).unwrap();
        prop_assert!((dec.total_mass() - 1.0).abs() <= 1e-12);
        let xi = Vec2::new(x, y);
        let err = (dec.fourier(xi) - power(&scene, xi).unwrap()).norm();
        prop_assert!(err <= 1e-8, "error {}", err);
    }

    #[test]
    fn projections_conserve_mass(scene in segment_scene(), th in 0.0..std::f64::consts::PI, dx in -3.0..3.0f64) {
        let u = Vec2::from_angle(th);
        let p = scene.project(u).unwrap();
        prop_assert!((p.mass() - 1.0).abs() <= 1e-12);
        let shift = Vec2::new(dx, 0.5 * dx);
        let q = scene.translated(shift).project(u).unwrap();
        let d = u.dot(shift);
        for (a, b) in p.intervals.iter().zip(&q.intervals) {
            prop_assert!((a.lo + d - b.lo).abs() <= 1e-12 && (a.hi + d - b.hi).abs() <= 1e-12);
        }
    }

    #[test]
    fn scene_files_round_trip(scene in segment_scene()) {
        let text = SceneFile::from_measure(&scene).to_json();
        prop_assert_eq!(load_scene(&text).unwrap().measure, scene);
    }
}
