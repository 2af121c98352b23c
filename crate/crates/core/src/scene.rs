//! Strict JSON scene files.
//!
//! ```json
//! {
//!   "segments": [{"start": [0, 0], "dir": [1, 0], "weight": 1}],
//!   "curves": [{"family": "limacon", "params": {"a": 1, "b": 2},
//!               "domain": [0, 6.283185307179586], "weight_fn": "arclength", "weight": 1}],
//!   "spectrum": {"kind": "line_ap", "step": [1, 0], "offsets": [[0, 0]], "truncation": 400},
//!   "seed": 0
//! }
//! ```
//!
//! Unknown keys anywhere are rejected. Weights must be positive; they are
//! rescaled to total mass 1 and the factor is reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::{Segment, Similarity, Vec2};
use crate::measures::{CurveFamily, CurveSpec, SceneMeasure, SegmentMeasure, WeightFn};
use crate::spectra::{SpectrumCandidate, SpectrumKind};

/// Truncation radius used when a spectrum block does not give one.
pub const DEFAULT_TRUNCATION: f64 = 400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub start: Vec2,
    pub dir: Vec2,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Circle,
    Ellipse,
    Limacon,
    Semicircle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFnName {
    Arclength,
    Parameter,
    XLebesgue,
}

impl From<WeightFnName> for WeightFn {
    fn from(w: WeightFnName) -> Self {
        match w {
            WeightFnName::Arclength => WeightFn::Arclength,
            WeightFnName::Parameter => WeightFn::Parameter,
            WeightFnName::XLebesgue => WeightFn::XLebesgue,
        }
    }
}

impl From<WeightFn> for WeightFnName {
    fn from(w: WeightFn) -> Self {
        match w {
            WeightFn::Arclength => WeightFnName::Arclength,
            WeightFn::Parameter => WeightFnName::Parameter,
            WeightFn::XLebesgue => WeightFnName::XLebesgue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    pub family: FamilyName,
    /// `radius` for circle and semicircle (default 1), `a` and `b` otherwise.
    #[serde(default)]
    pub params: FamilyParams,
    /// Defaults to the family's natural parameter range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default = "default_weight_fn")]
    pub weight_fn: WeightFnName,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Similarity>,
}

fn default_weight_fn() -> WeightFnName {
    WeightFnName::Arclength
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumEntry {
    Lattice {
        basis: [Vec2; 2],
        #[serde(default = "origin_only")]
        offsets: Vec<Vec2>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<f64>,
    },
    LineAp {
        step: Vec2,
        #[serde(default = "origin_only")]
        offsets: Vec<Vec2>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<f64>,
    },
    List {
        points: Vec<Vec2>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<f64>,
    },
}

fn origin_only() -> Vec<Vec2> {
    vec![Vec2::ZERO]
}

impl SpectrumEntry {
    pub fn candidate(&self) -> Result<SpectrumCandidate> {
        let r = |t: &Option<f64>| t.unwrap_or(DEFAULT_TRUNCATION);
        match self {
            SpectrumEntry::Lattice { basis, offsets, truncation } => SpectrumCandidate::new(
                SpectrumKind::Lattice {
                    basis: *basis,
                    offsets: offsets.clone(),
                },
                r(truncation),
            ),
            SpectrumEntry::LineAp { step, offsets, truncation } => SpectrumCandidate::new(
                SpectrumKind::LineAp {
                    step: *step,
                    offsets: offsets.clone(),
                },
                r(truncation),
            ),
            SpectrumEntry::List { points, truncation } => {
                SpectrumCandidate::new(SpectrumKind::List { points: points.clone() }, r(truncation))
            }
        }
    }

    pub fn from_candidate(c: &SpectrumCandidate) -> Self {
        let truncation = Some(c.truncation);
        match &c.kind {
            SpectrumKind::Lattice { basis, offsets } => SpectrumEntry::Lattice {
                basis: *basis,
                offsets: offsets.clone(),
                truncation,
            },
            SpectrumKind::LineAp { step, offsets } => SpectrumEntry::LineAp {
                step: *step,
                offsets: offsets.clone(),
                truncation,
            },
            SpectrumKind::List { points } => SpectrumEntry::List {
                points: points.clone(),
                truncation,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub segments: Vec<SegmentEntry>,
    #[serde(default)]
    pub curves: Vec<CurveEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Bookkeeping for the mass rescaling applied at load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub input_mass: f64,
    pub factor: f64,
    pub rescaled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedScene {
    pub measure: SceneMeasure,
    pub spectrum: Option<SpectrumCandidate>,
    pub seed: u64,
    pub normalization: Normalization,
}

fn positive_weight(w: f64, what: &str) -> Result<f64> {
    if w.is_finite() && w > 0.0 {
        Ok(w)
    } else {
        Err(Error::Scene(format!("{what}: weight must be positive, got {w}")))
    }
}

impl CurveEntry {
    pub fn family(&self) -> Result<CurveFamily> {
        let p = &self.params;
        let bad = |msg: &str| Error::Scene(format!("{:?} curve: {msg}", self.family));
        match self.family {
            FamilyName::Circle | FamilyName::Semicircle => {
                if p.a.is_some() || p.b.is_some() {
                    return Err(bad("expects only `radius`"));
                }
                let radius = p.radius.unwrap_or(1.0);
                Ok(if self.family == FamilyName::Circle {
                    CurveFamily::Circle { radius }
                } else {
                    CurveFamily::Semicircle { radius }
                })
            }
            FamilyName::Ellipse | FamilyName::Limacon => {
                if p.radius.is_some() {
                    return Err(bad("expects `a` and `b`"));
                }
                let (Some(a), Some(b)) = (p.a, p.b) else {
                    return Err(bad("missing `a` or `b`"));
                };
                Ok(if self.family == FamilyName::Ellipse {
                    CurveFamily::Ellipse { a, b }
                } else {
                    CurveFamily::Limacon { a, b }
                })
            }
        }
    }

    pub fn spec(&self) -> Result<CurveSpec> {
        let family = self.family()?;
        let domain = self.domain.map(|[a, b]| (a, b)).unwrap_or_else(|| family.natural_domain());
        let weight = positive_weight(self.weight, "curve")?;
        CurveSpec::build(
            family,
            domain,
            self.weight_fn.into(),
            weight,
            self.placement.unwrap_or(Similarity::IDENTITY),
        )
        .map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn from_spec(c: &CurveSpec) -> Self {
        let params = match c.family {
            CurveFamily::Circle { radius } | CurveFamily::Semicircle { radius } => FamilyParams {
                radius: Some(radius),
                ..Default::default()
            },
            CurveFamily::Ellipse { a, b } | CurveFamily::Limacon { a, b } => FamilyParams {
                radius: None,
                a: Some(a),
                b: Some(b),
            },
        };
        let family = match c.family {
            CurveFamily::Circle { .. } => FamilyName::Circle,
            CurveFamily::Ellipse { .. } => FamilyName::Ellipse,
            CurveFamily::Limacon { .. } => FamilyName::Limacon,
            CurveFamily::Semicircle { .. } => FamilyName::Semicircle,
        };
        Self {
            family,
            params,
            domain: Some([c.domain.0, c.domain.1]),
            weight_fn: c.weight_fn.into(),
            weight: c.weight,
            placement: (c.placement != Similarity::IDENTITY).then_some(c.placement),
        }
    }
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn from_measure(m: &SceneMeasure) -> Self {
        Self {
            segments: m
                .segments
                .iter()
                .map(|s| SegmentEntry {
                    start: s.segment.start,
                    dir: s.segment.dir,
                    weight: s.weight,
                })
                .collect(),
            curves: m.curves.iter().map(CurveEntry::from_spec).collect(),
            spectrum: None,
            seed: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene files always serialize")
    }

    /// The unnormalized measure described by the file.
    pub fn raw_measure(&self) -> Result<SceneMeasure> {
        if self.segments.is_empty() && self.curves.is_empty() {
            return Err(Error::Scene("scene has no segments or curves".into()));
        }
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let seg = Segment::new(s.start, s.dir).map_err(|e| Error::Scene(format!("segment {i}: {e}")))?;
                Ok(SegmentMeasure::new(seg, positive_weight(s.weight, &format!("segment {i}"))?))
            })
            .collect::<Result<Vec<_>>>()?;
        let curves = self.curves.iter().map(CurveEntry::spec).collect::<Result<Vec<_>>>()?;
        Ok(SceneMeasure { segments, curves })
    }

    pub fn load(&self) -> Result<LoadedScene> {
        let raw = self.raw_measure()?;
        let input_mass = raw.total_mass();
        let (measure, factor) = raw.normalized()?;
        Ok(LoadedScene {
            measure,
            spectrum: self.spectrum.as_ref().map(SpectrumEntry::candidate).transpose()?,
            seed: self.seed.unwrap_or(0),
            normalization: Normalization {
                input_mass,
                factor,
                rescaled: !raw.is_normalized(),
            },
        })
    }
}

/// Parse and load in one step.
pub fn load_scene(text: &str) -> Result<LoadedScene> {
    SceneFile::parse(text)?.load()
}
