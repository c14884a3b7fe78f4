use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use haarmark::bench::{run_bench, to_markdown, write_reports, BenchConfig};
use haarmark::codec::{embed_image, extract_image};
use haarmark::config::ToolkitConfig;
use haarmark::image_io::{load_image, load_watermark, prepare_host, save_image, save_watermark};
use haarmark::metrics::QualityReport;
use haarmark::{AttackSpec, Orientation, PeakMode};

const EXIT_USAGE: u8 = 1;
const EXIT_PROCESSING: u8 = 2;

/// Blind DWT watermarking with fuzzy-controlled strength, plus an attack
/// simulator and robustness bench.
#[derive(Debug, Parser)]
#[command(name = "haarmark", version)]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ParamFlags {
    /// Quantization step of the embedding lattice.
    #[arg(long)]
    q: Option<f64>,

    /// Level-3 detail band carrying the payload (lh, hl, hh).
    #[arg(long, value_parser = parse_band)]
    band: Option<Orientation>,

    /// PSNR peak value (255 or 511).
    #[arg(long)]
    peak: Option<PeakMode>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed a 64x64 watermark into a host image.
    Embed {
        #[arg(long)]
        host: Option<PathBuf>,
        #[arg(long)]
        watermark: Option<PathBuf>,
        #[arg(long)]
        key: Option<u64>,
        #[command(flatten)]
        flags: ParamFlags,
    },
    /// Recover the watermark from a 512x512 image.
    Extract {
        image: PathBuf,
        #[arg(long)]
        key: Option<u64>,
        /// Original watermark, to report BER and NCC.
        #[arg(long, alias = "reference")]
        watermark: Option<PathBuf>,
        #[command(flatten)]
        flags: ParamFlags,
    },
    /// Apply one attack and report its distortion.
    Attack {
        image: PathBuf,
        /// kind:intensity[:seed=N], e.g. jpeg:10, crop:0.25, sp:0.05:seed=7, rot:8, median:3
        #[arg(long, value_parser = parse_attack)]
        attack: AttackSpec,
        /// Output file; defaults to a name derived from the input and attack.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: ParamFlags,
    },
    /// Compare two images, and optionally extract from the second.
    Evaluate {
        reference: PathBuf,
        test: PathBuf,
        #[arg(long)]
        key: Option<u64>,
        #[arg(long)]
        watermark: Option<PathBuf>,
        #[command(flatten)]
        flags: ParamFlags,
    },
    /// Run the robustness grid and write CSV / markdown reports.
    Bench {
        #[arg(long)]
        host: Option<PathBuf>,
        #[arg(long)]
        watermark: Option<PathBuf>,
        #[arg(long)]
        key: Option<u64>,
        /// Grid cell; repeat to build a custom grid.
        #[arg(long = "attack", value_parser = parse_attack)]
        attacks: Vec<AttackSpec>,
        /// Include wall-clock time per cell (makes reports non-reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        flags: ParamFlags,
    },
}

fn parse_attack(s: &str) -> std::result::Result<AttackSpec, String> {
    s.parse().map_err(|e: haarmark::Error| e.to_string())
}

fn parse_band(s: &str) -> std::result::Result<Orientation, String> {
    match s.to_ascii_lowercase().trim_end_matches('3') {
        "lh" => Ok(Orientation::Lh),
        "hl" => Ok(Orientation::Hl),
        "hh" => Ok(Orientation::Hh),
        _ => Err(format!("unknown band '{s}', expected lh, hl or hh")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PROCESSING)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolkitConfig> {
    match path {
        Some(p) => Ok(ToolkitConfig::load(p)?),
        None => Ok(ToolkitConfig::default()),
    }
}

fn apply_flags(cfg: &mut ToolkitConfig, flags: &ParamFlags) {
    if let Some(q) = flags.q {
        cfg.params.q = q;
    }
    if let Some(b) = flags.band {
        cfg.params.band = b;
    }
    if let Some(p) = flags.peak {
        cfg.peak = p;
    }
    if let Some(o) = &flags.out {
        cfg.out = Some(o.clone());
    }
}

fn required(value: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    value
        .or_else(|| fallback.clone())
        .ok_or_else(|| anyhow!("no {what} given (use --{what} or set it in the config)"))
}

fn out_dir(cfg: &ToolkitConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Embed {
            host,
            watermark,
            key,
            flags,
        } => {
            apply_flags(&mut cfg, &flags);
            let host_path = required(host, &cfg.host, "host")?;
            let wm_path = required(watermark, &cfg.watermark, "watermark")?;
            let key = key
                .or(cfg.key)
                .ok_or_else(|| anyhow!("--key is required"))?;
            let params = cfg.params.clone().with_key(key);
            let fs = cfg.fuzzy_system()?;
            params.check_decodable(&fs)?;

            let host = load_image(&host_path)?;
            let wm = load_watermark(&wm_path)?;
            let marked = embed_image(&host, &wm, &params, &fs)?;
            let prepared = prepare_host(&host)?;
            let q = QualityReport::compare(&prepared, &marked, cfg.peak)?;

            let dir = out_dir(&cfg, ".");
            create_dir(&dir)?;
            let image_path = dir.join("watermarked.png");
            save_image(&marked, &image_path)?;
            let sidecar = ToolkitConfig {
                params: cfg.params.clone(),
                fuzzy: Some(fs),
                peak: cfg.peak,
                ..ToolkitConfig::default()
            };
            let sidecar_path = dir.join("watermarked.params.json");
            std::fs::write(&sidecar_path, sidecar.to_json() + "\n")
                .with_context(|| format!("writing {}", sidecar_path.display()))?;
            println!("wrote {}", image_path.display());
            println!("wrote {}", sidecar_path.display());
            println!(
                "mse {:.4}  psnr {:.4} dB (R={})",
                q.mse, q.psnr_db, cfg.peak
            );
        }
        Command::Extract {
            image,
            key,
            watermark,
            flags,
        } => {
            apply_flags(&mut cfg, &flags);
            let key = key
                .or(cfg.key)
                .ok_or_else(|| anyhow!("--key is required"))?;
            let params = cfg.params.clone().with_key(key);
            let fs = cfg.fuzzy_system()?;
            let img = load_image(&image)?;
            let reference = watermark.map(load_watermark).transpose()?;
            let result = extract_image(&img, &params, &fs, reference.as_ref())?;

            let dir = out_dir(&cfg, ".");
            create_dir(&dir)?;
            let path = dir.join("extracted.png");
            save_watermark(&result.bits, &path)?;
            println!("wrote {}", path.display());
            if let Some(ber) = result.ber {
                let ncc = result
                    .ncc_vs_original
                    .map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
                println!("ber {ber:.6}  ncc {ncc}");
            }
        }
        Command::Attack {
            image,
            attack,
            output,
            flags,
        } => {
            apply_flags(&mut cfg, &flags);
            let img = load_image(&image)?;
            let attacked = attack.apply(&img)?;
            let path = match output {
                Some(p) => p,
                None => {
                    let stem = image
                        .file_stem()
                        .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
                    let tag: String = attack
                        .to_string()
                        .chars()
                        .map(|c| {
                            if c.is_ascii_alphanumeric() || c == '.' {
                                c
                            } else {
                                '_'
                            }
                        })
                        .collect();
                    out_dir(&cfg, ".").join(format!("{stem}_{tag}.png"))
                }
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(parent)?;
            }
            save_image(&attacked, &path)?;
            let q = QualityReport::compare(&img, &attacked, cfg.peak)?;
            println!("wrote {}", path.display());
            println!(
                "{} {}: mse {:.4}  psnr {:.4} dB (R={})",
                attack.kind(),
                attack.intensity_label(),
                q.mse,
                q.psnr_db,
                cfg.peak
            );
        }
        Command::Evaluate {
            reference,
            test,
            key,
            watermark,
            flags,
        } => {
            apply_flags(&mut cfg, &flags);
            let a = load_image(&reference)?;
            let b = load_image(&test)?;
            let q = QualityReport::compare(&a, &b, cfg.peak)?;
            println!(
                "mse {:.4}  psnr {:.4} dB (R={})  ncc {:.6}",
                q.mse, q.psnr_db, cfg.peak, q.ncc
            );
            if let Some(key) = key.or(cfg.key) {
                let params = cfg.params.clone().with_key(key);
                let fs = cfg.fuzzy_system()?;
                let wm = watermark
                    .or_else(|| cfg.watermark.clone())
                    .map(load_watermark)
                    .transpose()?;
                let r = extract_image(&b, &params, &fs, wm.as_ref())?;
                match (r.ber, r.ncc_vs_original) {
                    (Some(ber), ncc) => println!(
                        "watermark ber {ber:.6}  ncc {}",
                        ncc.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
                    ),
                    _ => println!("watermark extracted (no reference given)"),
                }
            }
        }
        Command::Bench {
            host,
            watermark,
            key,
            attacks,
            timing,
            flags,
        } => {
            apply_flags(&mut cfg, &flags);
            let host_path = required(host, &cfg.host, "host")?;
            let wm_path = required(watermark, &cfg.watermark, "watermark")?;
            let key = key.or(cfg.key).unwrap_or(0);
            if !attacks.is_empty() {
                cfg.attacks = Some(attacks);
            }
            let bench = BenchConfig {
                params: cfg.params.clone().with_key(key),
                fuzzy: cfg.fuzzy_system()?,
                grid: cfg.attack_grid(),
                peak: cfg.peak,
                timing: timing || cfg.timing,
            };
            let host = load_image(&host_path)?;
            let wm = load_watermark(&wm_path)?;
            let report = run_bench(&host, &wm, &bench)?;
            let dir = out_dir(&cfg, "bench_out");
            let written = write_reports(&report, &dir, &cfg.formats)?;
            print!("{}", to_markdown(&report));
            for p in written {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
