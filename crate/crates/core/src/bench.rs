//! Robustness bench: embed once, run every attack in a grid, extract, and
//! report image fidelity and watermark recovery per cell.
//!
//! Image metrics compare the attacked image against the prepared (resized,
//! unmarked) host, pooled over all three channels. The baseline row compares
//! the watermarked image against that same host.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::attacks::AttackSpec;
use crate::codec::{embed_image, extract_image, EmbedParams};
use crate::config::ReportFormat;
use crate::error::{Error, Result};
use crate::fuzzy::FuzzySystem;
use crate::image_io::{prepare_host, RgbImage, WatermarkBits};
use crate::metrics::{PeakMode, QualityReport};
use crate::par;

pub const CSV_HEADER: &str = "attack,intensity,mse,psnr_db,ncc_image,ncc_watermark,ber,ms";

/// Inputs of one bench run, already loaded.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub params: EmbedParams,
    pub fuzzy: FuzzySystem,
    pub grid: Vec<AttackSpec>,
    pub peak: PeakMode,
    /// Record wall time per cell. Off by default so reports are reproducible
    /// byte for byte.
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(params: EmbedParams, fuzzy: FuzzySystem) -> Self {
        Self {
            params,
            fuzzy,
            grid: AttackSpec::default_grid(),
            peak: PeakMode::Standard,
            timing: false,
        }
    }
}

/// One row of the robustness table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub attack: String,
    pub intensity: String,
    pub mse: f64,
    pub psnr_db: f64,
    /// Host-vs-attacked normalized correlation.
    pub ncc_image: f64,
    /// Reference-vs-extracted correlation on {0,1} bits; `None` when the
    /// reference has no set bits.
    pub ncc_watermark: Option<f64>,
    pub ber: f64,
    pub ms: Option<f64>,
}

/// Result of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Ok(EvalRecord),
    Failed {
        attack: String,
        intensity: String,
        error: String,
    },
}

impl CellOutcome {
    pub fn record(&self) -> Option<&EvalRecord> {
        match self {
            CellOutcome::Ok(r) => Some(r),
            CellOutcome::Failed { .. } => None,
        }
    }

    fn labels(&self) -> (&str, &str) {
        match self {
            CellOutcome::Ok(r) => (&r.attack, &r.intensity),
            CellOutcome::Failed {
                attack, intensity, ..
            } => (attack, intensity),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub peak: PeakMode,
    pub params: EmbedParams,
    /// Watermarked image versus host, no attack.
    pub baseline: EvalRecord,
    /// One entry per grid cell, in grid order.
    pub cells: Vec<CellOutcome>,
}

impl BenchReport {
    pub fn records(&self) -> impl Iterator<Item = &EvalRecord> {
        self.cells.iter().filter_map(CellOutcome::record)
    }

    /// Records for one attack family, in grid order.
    pub fn family(&self, kind: &str) -> Vec<&EvalRecord> {
        self.records().filter(|r| r.attack == kind).collect()
    }
}

fn evaluate(
    host: &RgbImage,
    test: &RgbImage,
    wm: &WatermarkBits,
    cfg: &BenchConfig,
    attack: &str,
    intensity: String,
    started: Instant,
) -> Result<EvalRecord> {
    let quality = QualityReport::compare(host, test, cfg.peak)?;
    let extracted = extract_image(test, &cfg.params, &cfg.fuzzy, Some(wm))?;
    let ms = cfg.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    Ok(EvalRecord {
        attack: attack.to_string(),
        intensity,
        mse: quality.mse,
        psnr_db: quality.psnr_db,
        ncc_image: quality.ncc,
        ncc_watermark: extracted.ncc_vs_original,
        ber: extracted.ber.expect("reference supplied"),
        ms,
    })
}

/// Runs the whole grid. Cells are independent and evaluated in parallel;
/// the returned order always follows the grid.
pub fn run_bench(host: &RgbImage, wm: &WatermarkBits, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.grid.is_empty() {
        return Err(Error::Config("attack grid is empty".into()));
    }
    cfg.params.check_decodable(&cfg.fuzzy)?;
    let started = Instant::now();
    let prepared = prepare_host(host)?;
    let marked = embed_image(&prepared, wm, &cfg.params, &cfg.fuzzy)?;
    let baseline = evaluate(&prepared, &marked, wm, cfg, "none", "--".into(), started)?;

    let cells = par::map_slice(&cfg.grid, |spec| {
        let started = Instant::now();
        let result = spec.apply(&marked).and_then(|attacked| {
            evaluate(
                &prepared,
                &attacked,
                wm,
                cfg,
                spec.kind(),
                spec.intensity_label(),
                started,
            )
        });
        match result {
            Ok(r) => CellOutcome::Ok(r),
            Err(e) => CellOutcome::Failed {
                attack: spec.kind().to_string(),
                intensity: spec.intensity_label(),
                error: e.to_string(),
            },
        }
    });
    Ok(BenchReport {
        peak: cfg.peak,
        params: cfg.params.clone(),
        baseline,
        cells,
    })
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

/// Formatted numeric columns shared by the CSV and markdown writers, so both
/// render the same values.
fn columns(r: &EvalRecord) -> [String; 6] {
    [
        format!("{:.4}", r.mse),
        fmt_psnr(r.psnr_db),
        format!("{:.6}", r.ncc_image),
        fmt_opt(r.ncc_watermark, 6),
        format!("{:.6}", r.ber),
        fmt_opt(r.ms, 1),
    ]
}

fn rows(report: &BenchReport) -> Vec<(String, String, Option<[String; 6]>)> {
    let mut out = vec![(
        report.baseline.attack.clone(),
        report.baseline.intensity.clone(),
        Some(columns(&report.baseline)),
    )];
    for cell in &report.cells {
        let (a, i) = cell.labels();
        out.push((a.to_string(), i.to_string(), cell.record().map(columns)));
    }
    out
}

/// CSV with the fixed header; the first data row is the unattacked baseline.
/// Failed cells keep their labels and leave the numeric fields empty.
pub fn to_csv(report: &BenchReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (attack, intensity, cols) in rows(report) {
        let cols = cols.unwrap_or_default();
        let _ = writeln!(s, "{attack},{intensity},{}", cols.join(","));
    }
    s
}

fn family_title(kind: &str) -> &str {
    match kind {
        "none" => "Watermarked Image",
        "jpeg" => "JPEG Compression",
        "median" => "Median Filtering",
        "crop" => "Cropping",
        "salt_pepper" => "Salt&Pepper Noise",
        "rotation" => "Rotation",
        other => other,
    }
}

pub fn to_markdown(report: &BenchReport) -> String {
    let (lo, hi) = report.params.alpha_bounds();
    let mut s = String::new();
    let _ = writeln!(s, "# Robustness report\n");
    let _ = writeln!(
        s,
        "PSNR peak R = {}. MSE, PSNR and image NCC compare against the unmarked host, \
         pooled over R, G and B. Watermark NCC uses bits mapped to {{0,1}}.\n",
        report.peak
    );
    let _ = writeln!(
        s,
        "Parameters: q = {}, band = {}3, window = {} ({}), default strength bounds = [{lo}, {hi}].\n",
        report.params.q,
        format!("{:?}", report.params.band).to_lowercase(),
        report.params.window,
        format!("{:?}", report.params.window_order).to_lowercase()
    );
    let _ = writeln!(
        s,
        "| Type of Attack | Intensity | MSE | PSNR (dB) | NCC (image) | NCC (watermark) | BER | Time (ms) |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    let mut last_kind = String::new();
    for (attack, intensity, cols) in rows(report) {
        let title = if attack == last_kind {
            String::new()
        } else {
            family_title(&attack).to_string()
        };
        last_kind = attack.clone();
        match cols {
            Some(c) => {
                let _ = writeln!(s, "| {title} | {intensity} | {} |", c.join(" | "));
            }
            None => {
                let _ = writeln!(s, "| {title} | {intensity} | error |  |  |  |  |  |");
            }
        }
    }
    for cell in &report.cells {
        if let CellOutcome::Failed {
            attack,
            intensity,
            error,
        } = cell
        {
            let _ = writeln!(s, "\n- {attack} {intensity}: {error}");
        }
    }
    s
}

/// Per-cell series for plotting MSE, PSNR and NCC across the grid, as
/// `(file stem, csv, gnuplot data)` triples.
pub fn series(report: &BenchReport) -> Vec<(&'static str, String, String)> {
    let cells: Vec<&EvalRecord> = std::iter::once(&report.baseline)
        .chain(report.records())
        .collect();
    let label = |r: &EvalRecord| format!("{} {}", r.attack, r.intensity);
    let mut mse_csv = String::from("label,mse\n");
    let mut psnr_csv = String::from("label,psnr_db\n");
    let mut ncc_csv = String::from("label,ncc_image,ncc_watermark\n");
    let mut mse_dat = String::from("# index mse \"label\"\n");
    let mut psnr_dat = String::from("# index psnr_db \"label\"\n");
    let mut ncc_dat = String::from("# index ncc_image ncc_watermark \"label\"\n");
    for (i, r) in cells.iter().enumerate() {
        let [mse, psnr, ncc_i, ncc_w, _, _] = columns(r);
        let l = label(r);
        let _ = writeln!(mse_csv, "{l},{mse}");
        let _ = writeln!(psnr_csv, "{l},{psnr}");
        let _ = writeln!(ncc_csv, "{l},{ncc_i},{ncc_w}");
        let _ = writeln!(mse_dat, "{i} {mse} \"{l}\"");
        let _ = writeln!(psnr_dat, "{i} {psnr} \"{l}\"");
        let nw = if ncc_w.is_empty() {
            "NaN".to_string()
        } else {
            ncc_w
        };
        let _ = writeln!(ncc_dat, "{i} {ncc_i} {nw} \"{l}\"");
    }
    vec![
        ("series_mse", mse_csv, mse_dat),
        ("series_psnr", psnr_csv, psnr_dat),
        ("series_ncc", ncc_csv, ncc_dat),
    ]
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `report.csv` / `report.md` (per `formats`) plus the plotting
/// series into `dir`, creating it if needed.
pub fn write_reports(
    report: &BenchReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Csv => write(dir.join("report.csv"), &to_csv(report), &mut written)?,
            ReportFormat::Markdown => {
                write(dir.join("report.md"), &to_markdown(report), &mut written)?
            }
        }
    }
    for (stem, csv, dat) in series(report) {
        write(dir.join(format!("{stem}.csv")), &csv, &mut written)?;
        write(dir.join(format!("{stem}.dat")), &dat, &mut written)?;
    }
    Ok(written)
}
