//! `specgeo` command-line front end.

mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use specgeo::autocorr::{decompose_with, mc_autocorr, BoxGrid, CoverageOptions, CurveAcSolver, DEFAULT_CURVE_GRID};
use specgeo::classify::{classify_scene, ClassifyOptions};
use specgeo::curves::{curve_report, DEFAULT_SAMPLES};
use specgeo::scene::{LoadedScene, SceneFile};
use specgeo::spectra::{self, LineSearchOptions, Window};
use specgeo::{Error, Vec2};

use output::{write_csv, write_pgm, Meta};

const CSV_HELP: &str = "\
CSV outputs
  autocorr:  i,j,x,y,density,singular
             cell centres of an N x N grid over [-W,W]^2, i along x, j along y from the bottom;
             density is the absolutely continuous part (nan where undefined), singular is 1
             when a singular carrier meets the cell
  oracle:    i,j,x_lo,y_lo,x_hi,y_hi,count,mc_mass,std_error,exact_ac,exact_singular,z,on_singular
             exact columns are empty for curve scenes

Exit codes: 0 success, 1 spectrum not verified, 2 bad input, 3 internal error.
SPECGEO_THREADS caps the worker thread count.";

#[derive(Parser)]
#[command(name = "specgeo", version, about = "Spectrality certificates for measures on segments and curves", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SceneArg {
    /// Scene JSON file.
    scene: PathBuf,
    /// Overrides the scene's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every component and print the combined verdict.
    Classify {
        #[command(flatten)]
        scene: SceneArg,
        /// Coverage probes per radius.
        #[arg(long, default_value_t = specgeo::probe::DEFAULT_PROBES)]
        probes: usize,
    },
    /// Autocorrelation density on a grid, plus the singular carriers.
    Autocorr {
        #[command(flatten)]
        scene: SceneArg,
        /// Half-width W of the window [-W,W]^2 (default: scene diameter).
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// PGM (P5) output path.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Orthogonality and tiling checks for the scene's spectrum block.
    VerifySpectrum {
        #[command(flatten)]
        scene: SceneArg,
        /// Truncation radius R (default: the spectrum block's).
        #[arg(long)]
        truncation: Option<f64>,
        /// Half-width of the evaluation window.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Monte Carlo histogram of x - y against the exact box masses.
    Oracle {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Boxes per axis.
        #[arg(long, default_value_t = 64)]
        boxes: usize,
        /// Half-width of the window (default: scene diameter).
        #[arg(long)]
        window: Option<f64>,
        /// z-score for agreement.
        #[arg(long, default_value_t = 4.0)]
        z: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pushforward of the measure onto a direction.
    Project {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, num_args = 2, value_names = ["DX", "DY"], allow_negative_numbers = true, required = true)]
        dir: Vec<f64>,
    },
    /// Curvature, closedness and self-intersections of each curve.
    CurveReport {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Scan directions for line spectra built from projections.
    FindLineSpectra {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 360)]
        angles: usize,
        #[arg(long, default_value_t = 200.0)]
        truncation: f64,
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Scene(_) | Error::InvalidInput(_) | Error::NotNormalized { .. } | Error::UnsupportedForCurves => {
                Failure::Input(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Failure>;

struct Input {
    scene: LoadedScene,
    meta: Meta,
}

fn load(arg: &SceneArg) -> Result<Input, Failure> {
    let bytes = std::fs::read(&arg.scene).map_err(|e| Failure::Input(format!("{}: {e}", arg.scene.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::Input(e.to_string()))?;
    let mut scene = SceneFile::parse(&text)?.load()?;
    if let Some(s) = arg.seed {
        scene.seed = s;
    }
    let meta = Meta::new(&bytes, scene.seed, scene.normalization);
    Ok(Input { scene, meta })
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    #[serde(flatten)]
    meta: &'a Meta,
    #[serde(flatten)]
    body: T,
}

fn print<T: Serialize>(meta: &Meta, body: T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&Report { meta, body }).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn default_window(scene: &LoadedScene, given: Option<f64>) -> Result<f64, Failure> {
    let w = given.unwrap_or_else(|| scene.measure.diameter());
    if w.is_finite() && w > 0.0 {
        Ok(w)
    } else {
        Err(Failure::Input(format!("window must be positive, got {w}")))
    }
}

fn cmd_classify(arg: &SceneArg, probes: usize) -> CmdResult {
    let input = load(arg)?;
    let opts = ClassifyOptions {
        coverage: CoverageOptions {
            probes,
            seed: input.scene.seed,
        },
        ..Default::default()
    };
    let verdict = classify_scene(&input.scene.measure, opts)?;
    print(&input.meta, verdict)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SingularLine {
    start: Vec2,
    end: Vec2,
    direction: Vec2,
    mass: f64,
    through_origin: bool,
    pair: (usize, usize),
}

#[derive(Serialize)]
struct AutocorrSummary<T: Serialize> {
    window: f64,
    grid: usize,
    max_density: f64,
    /// Density mapped to grey level 254 in the PGM.
    pgm_scale: f64,
    singular_cells: usize,
    singular_lines: Vec<SingularLine>,
    details: T,
}

/// Per-cell `(density, singular)` over the cell-centred grid.
fn cell_centres(w: f64, n: usize) -> Vec<(usize, usize, Vec2, Vec2, Vec2)> {
    let h = 2.0 * w / n as f64;
    (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let lo = Vec2::new(-w + i as f64 * h, -w + j as f64 * h);
            let hi = lo + Vec2::new(h, h);
            (i, j, lo + Vec2::new(0.5 * h, 0.5 * h), lo, hi)
        })
        .collect()
}

fn cmd_autocorr(arg: &SceneArg, window: Option<f64>, grid: usize, out: Option<&Path>, pgm: Option<&Path>) -> CmdResult {
    let input = load(arg)?;
    let w = default_window(&input.scene, window)?;
    if grid == 0 {
        return Err(Failure::Input("grid must be positive".into()));
    }
    let m = &input.scene.measure;
    let cells = cell_centres(w, grid);
    let (values, lines, details): (Vec<(f64, bool)>, Vec<SingularLine>, serde_json::Value) = if m.is_segments_only() {
        let dec = decompose_with(
            m,
            CoverageOptions {
                seed: input.scene.seed,
                ..Default::default()
            },
        )?;
        let values = cells
            .par_iter()
            .map(|(_, _, c, lo, hi)| {
                let d = dec.ac.iter().filter(|a| a.contains(*c)).map(|a| a.density).sum();
                (d, dec.box_meets_singular(*lo, *hi))
            })
            .collect();
        let lines = dec
            .singular
            .iter()
            .map(|s| {
                let (start, end) = s.carrier();
                SingularLine {
                    start,
                    end,
                    direction: s.direction,
                    mass: s.mass,
                    through_origin: s.through_origin,
                    pair: s.pair,
                }
            })
            .collect();
        let details = serde_json::json!({
            "ac_pieces": dec.ac.len(),
            "singular_pieces": dec.singular.len(),
            "total_mass": dec.total_mass(),
            "origin": dec.origin_report,
        });
        (values, lines, details)
    } else if m.segments.is_empty() && m.curves.len() == 1 {
        let solver = CurveAcSolver::new(&m.curves[0], DEFAULT_CURVE_GRID)?;
        let values: Result<Vec<(f64, bool)>, Error> = cells
            .par_iter()
            .map(|(_, _, c, _, _)| {
                if c.norm() == 0.0 {
                    return Ok((f64::NAN, true));
                }
                match solver.density_or_zero(*c) {
                    Ok(v) => Ok((v, false)),
                    Err(Error::Degenerate { .. }) => Ok((f64::NAN, true)),
                    Err(e) => Err(e),
                }
            })
            .collect();
        let details = serde_json::json!({ "curve": m.curves[0].family.name(), "solver_grid": solver.grid() });
        (values?, Vec::new(), details)
    } else {
        return Err(Failure::Input(
            "autocorr supports segment scenes or a single curve".into(),
        ));
    };
    let max_density = values.iter().map(|v| v.0).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let pgm_scale = output::percentile_scale(values.iter().map(|v| v.0), 0.99);
    if let Some(path) = out {
        write_csv(
            path,
            "i,j,x,y,density,singular",
            cells.iter().zip(&values).map(|((i, j, c, _, _), (d, s))| {
                format!("{i},{j},{},{},{},{}", output::num(c.x), output::num(c.y), output::num(*d), u8::from(*s))
            }),
        )?;
    }
    if let Some(path) = pgm {
        write_pgm(path, grid, grid, &values, pgm_scale)?;
    }
    let summary = AutocorrSummary {
        window: w,
        grid,
        max_density,
        pgm_scale,
        singular_cells: values.iter().filter(|v| v.1).count(),
        singular_lines: lines,
        details,
    };
    print(&input.meta, summary)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SpectrumOutcome {
    spectrum: spectra::SpectrumCandidate,
    orthogonality: spectra::OrthogonalityReport,
    tiling: spectra::TilingReport,
    passes: bool,
}

fn cmd_verify_spectrum(arg: &SceneArg, truncation: Option<f64>, window: f64, grid: usize, tol: f64) -> CmdResult {
    let input = load(arg)?;
    let Some(mut sp) = input.scene.spectrum.clone() else {
        return Err(Failure::Input("scene has no spectrum block".into()));
    };
    if let Some(r) = truncation {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Failure::Input(format!("truncation must be positive, got {r}")));
        }
        sp.truncation = r;
    }
    if !(window >= 0.0 && window.is_finite() && tol > 0.0) {
        return Err(Failure::Input("window must be nonnegative and tol positive".into()));
    }
    let m = &input.scene.measure;
    let orthogonality = spectra::orthogonality_check(m, &sp)?;
    let tiling = spectra::tiling_residual(m, &sp, Window::square(window), grid, tol)?;
    let passes = tiling.passes();
    print(
        &input.meta,
        SpectrumOutcome {
            spectrum: sp,
            orthogonality,
            tiling,
            passes,
        },
    )?;
    Ok(if passes { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct OracleSummary {
    samples: u64,
    boxes: usize,
    window: f64,
    z: f64,
    compared: usize,
    agreeing: usize,
    agreement: Option<f64>,
}

fn cmd_oracle(arg: &SceneArg, samples: u64, boxes: usize, window: Option<f64>, z: f64, out: Option<&Path>) -> CmdResult {
    let input = load(arg)?;
    let w = default_window(&input.scene, window)?;
    if samples == 0 {
        return Err(Failure::Input("samples must be positive".into()));
    }
    let m = &input.scene.measure;
    let grid = BoxGrid::square(w, boxes)?;
    let hist = mc_autocorr(m, samples, input.scene.seed, grid)?;
    let dec = if m.is_segments_only() {
        Some(decompose_with(
            m,
            CoverageOptions {
                seed: input.scene.seed,
                ..Default::default()
            },
        )?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(grid.len());
    let (mut compared, mut agreeing) = (0, 0);
    for k in 0..grid.len() {
        let (lo, hi) = grid.cell(k);
        let (i, j) = (k % grid.nx, k / grid.nx);
        let mc = hist.mass(k);
        let se = hist.std_error(k);
        let exact = dec.as_ref().map(|d| (d.box_mass(lo, hi), d.box_meets_singular(lo, hi)));
        let cols = match exact {
            Some(((ac, sing), on)) => {
                if !on {
                    compared += 1;
                    agreeing += usize::from(hist.agrees(k, ac, z));
                }
                let zs = if se > 0.0 { (mc - ac - sing) / se } else { f64::NAN };
                format!("{},{},{},{}", ac, sing, output::num(zs), u8::from(on))
            }
            None => ",,,".to_string(),
        };
        rows.push(format!(
            "{i},{j},{},{},{},{},{},{},{},{cols}",
            lo.x, lo.y, hi.x, hi.y, hist.counts[k], mc, se
        ));
    }
    if let Some(path) = out {
        write_csv(
            path,
            "i,j,x_lo,y_lo,x_hi,y_hi,count,mc_mass,std_error,exact_ac,exact_singular,z,on_singular",
            rows.into_iter(),
        )?;
    }
    print(
        &input.meta,
        OracleSummary {
            samples,
            boxes,
            window: w,
            z,
            compared,
            agreeing,
            agreement: (compared > 0).then(|| agreeing as f64 / compared as f64),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Projection {
    direction: Vec2,
    density: specgeo::PiecewiseDensity1D,
    support: Vec<(f64, f64)>,
    constant_density: Option<f64>,
    mass: f64,
}

fn cmd_project(arg: &SceneArg, dir: &[f64]) -> CmdResult {
    let input = load(arg)?;
    let d = Vec2::new(dir[0], dir[1]);
    if !(d.is_finite() && d.norm() > 0.0) {
        return Err(Failure::Input("direction must be finite and nonzero".into()));
    }
    let u = d.normalized();
    let density = input.scene.measure.project(u)?;
    let body = Projection {
        direction: u,
        support: density.support(),
        constant_density: if density.has_atoms() { None } else { density.constant_density(1e-9) },
        mass: density.mass(),
        density,
    };
    print(&input.meta, body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CurveEntryReport {
    index: usize,
    report: specgeo::CurveReport,
    verdict: specgeo::Verdict,
}

fn cmd_curve_report(arg: &SceneArg, samples: usize, grid: usize) -> CmdResult {
    let input = load(arg)?;
    let curves = &input.scene.measure.curves;
    if curves.is_empty() {
        return Err(Failure::Input("scene has no curves".into()));
    }
    let opts = ClassifyOptions {
        curve_samples: samples,
        curve_grid: grid,
        ..Default::default()
    };
    let reports: Vec<CurveEntryReport> = curves
        .iter()
        .enumerate()
        .map(|(index, c)| CurveEntryReport {
            index,
            report: curve_report(c, samples, grid),
            verdict: specgeo::classify::classify_curve_with(c, opts),
        })
        .collect();
    print(&input.meta, serde_json::json!({ "curves": reports }))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_find_line_spectra(arg: &SceneArg, angles: usize, opts: LineSearchOptions) -> CmdResult {
    let input = load(arg)?;
    if angles == 0 {
        return Err(Failure::Input("angles must be positive".into()));
    }
    let found = spectra::line_spectrum_search(&input.scene.measure, angles, opts)?;
    print(
        &input.meta,
        serde_json::json!({
            "angles": angles,
            "options": opts,
            "verified": found.iter().filter(|f| f.verified).count(),
            "candidates": found,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Classify { scene, probes } => cmd_classify(&scene, probes),
        Command::Autocorr {
            scene,
            window,
            grid,
            out,
            pgm,
        } => cmd_autocorr(&scene, window, grid, out.as_deref(), pgm.as_deref()),
        Command::VerifySpectrum {
            scene,
            truncation,
            window,
            grid,
            tol,
        } => cmd_verify_spectrum(&scene, truncation, window, grid, tol),
        Command::Oracle {
            scene,
            samples,
            boxes,
            window,
            z,
            out,
        } => cmd_oracle(&scene, samples, boxes, window, z, out.as_deref()),
        Command::Project { scene, dir } => cmd_project(&scene, &dir),
        Command::CurveReport { scene, samples, grid } => cmd_curve_report(&scene, samples, grid),
        Command::FindLineSpectra {
            scene,
            angles,
            truncation,
            window,
            grid,
            tol,
        } => cmd_find_line_spectra(
            &scene,
            angles,
            LineSearchOptions {
                truncation,
                window: Window::square(window),
                grid,
                tol,
            },
        ),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SPECGEO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Input(format!("SPECGEO_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
