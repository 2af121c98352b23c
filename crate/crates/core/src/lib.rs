//! Certificates of spectrality and non-spectrality for measures on unions of
//! segments and smooth planar curves.

pub mod autocorr;
pub mod catalog;
pub mod classify;
pub mod curves;
pub mod error;
pub mod fourier;
pub mod geom2d;
pub mod measures;
pub mod probe;
pub mod quadrature;
pub mod scene;
pub mod spectra;

pub use error::{Error, Result};
pub use geom2d::{Parallelogram, Segment, Similarity, Vec2};
pub use measures::{CurveFamily, CurveSpec, PiecewiseDensity1D, SceneMeasure, SegmentMeasure, WeightFn};
pub use autocorr::{decompose, mc_autocorr, BoxGrid, DensityDecomposition, McHistogram, OriginReport};
pub use classify::{classify_scene, classify_segments, Certificate, ClassifyOptions, Outcome, SceneVerdict, Verdict};
pub use curves::{curve_report, CurveReport};
pub use fourier::{ft, FtValue};
pub use scene::{load_scene, LoadedScene, SceneFile};
pub use spectra::{orthogonality_check, tiling_residual, SpectrumCandidate, SpectrumKind, TilingReport, Window};
