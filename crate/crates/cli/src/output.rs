use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use specgeo::scene::Normalization;

/// Header carried by every JSON output.
#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool_version: &'static str,
    pub seed: u64,
    pub scene_hash: String,
    pub normalization: Normalization,
}

impl Meta {
    pub fn new(scene_bytes: &[u8], seed: u64, normalization: Normalization) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            scene_hash: hex::encode(Sha256::digest(scene_bytes)),
            normalization,
        }
    }
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// The `q`-quantile of the finite positive values, or 0 if there are none.
/// Integrable singularities would otherwise wash out a linear grey scale.
pub fn percentile_scale(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    let mut v: Vec<f64> = values.filter(|d| d.is_finite() && *d > 0.0).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()
}

/// 8-bit binary PGM; row 0 of `values` is the bottom of the image.
/// Singular cells are drawn at 255, densities scaled into `0..=254`.
pub fn write_pgm(path: &Path, nx: usize, ny: usize, values: &[(f64, bool)], max: f64) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for j in (0..ny).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            let (d, singular) = values[j * nx + i];
            *px = if singular {
                255
            } else if d.is_finite() && max > 0.0 {
                (254.0 * (d / max).clamp(0.0, 1.0)).round() as u8
            } else {
                0
            };
        }
        f.write_all(&row)?;
    }
    f.flush()
}
