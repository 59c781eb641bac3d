//! Command-line frontend: the `denoise` command and the `bench` harness.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 solver failure.
//! Diagnostics go to standard error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Result, TwscError};
use crate::image::{read_image, write_image, PlanarImage};
use crate::metrics::{psnr, ssim};
use crate::noise::{add_awgn, ChannelSigmas, SigmaSource};
use crate::pipeline::{denoise, DenoiseConfig, Mode};

#[derive(Debug, Parser)]
#[command(
    name = "twsc",
    about = "Trilateral weighted sparse coding image denoiser",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise one image and write the result plus a run manifest.
    Denoise(DenoiseArgs),
    /// Synthesize noise over a clean corpus and tabulate PSNR/SSIM per
    /// noise level for the full method and its identity-weight baseline.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input image (8-bit PNG, or binary PPM/PGM).
    pub input: PathBuf,
    /// Output image path; format chosen by extension.
    pub output: PathBuf,

    /// Red-channel noise std (requires the other two channel flags).
    #[arg(long)]
    pub sigma_r: Option<f64>,
    /// Green-channel noise std.
    #[arg(long)]
    pub sigma_g: Option<f64>,
    /// Blue-channel noise std.
    #[arg(long)]
    pub sigma_b: Option<f64>,
    /// Single noise std for grayscale processing.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Estimate channel noise levels from the input (the default when no
    /// sigma flags are given).
    #[arg(long)]
    pub estimate_noise: bool,
    /// Convert color input to grayscale and denoise one plane.
    #[arg(long)]
    pub grayscale: bool,
    /// Patch-grid stride.
    #[arg(long, default_value_t = 3)]
    pub stride: usize,
    /// Worker threads (0 = one per CPU).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Seed recorded in the manifest (the denoiser itself is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the per-round run report as CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write final-round per-group channel/patch weight vectors as CSV.
    #[arg(long)]
    pub dump_weights: Option<PathBuf>,
    /// Identity channel/patch weights: the sparsity-only baseline.
    #[arg(long)]
    pub wsc_baseline: bool,
    /// Clean reference image; adds PSNR/SSIM to the manifest and report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of clean images (PNG/PPM/PGM).
    pub corpus: PathBuf,
    /// Noise levels to synthesize.
    #[arg(long, value_delimiter = ',', default_values_t = vec![15.0, 25.0, 35.0, 50.0, 75.0])]
    pub sigmas: Vec<f64>,
    /// Base seed for noise synthesis.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = one per CPU).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Patch-grid stride.
    #[arg(long, default_value_t = 3)]
    pub stride: usize,
}

/// Flat key-value record of everything that shaped one denoise run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
}

impl RunManifest {
    fn new() -> Self {
        Self { entries: Vec::new() }
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| TwscError::InvalidParameter {
                name: "manifest".into(),
                reason: format!("bad line {line:?}"),
            })?;
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Self { entries })
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Denoise(args) => cmd_denoise(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &TwscError) -> i32 {
    match e {
        TwscError::Io(_) | TwscError::Image(_) | TwscError::UnsupportedFormat(_) => 2,
        TwscError::InvalidParameter { .. } | TwscError::ShapeMismatch { .. } => 1,
        _ => 3,
    }
}

fn resolve_sigmas(args: &DenoiseArgs, image: &PlanarImage) -> Result<Option<ChannelSigmas>> {
    let channel_flags = [args.sigma_r, args.sigma_g, args.sigma_b];
    let n_channel_flags = channel_flags.iter().flatten().count();
    let explicit = args.sigma.is_some() || n_channel_flags > 0;
    if args.estimate_noise && explicit {
        return Err(TwscError::InvalidParameter {
            name: "--estimate-noise".into(),
            reason: "cannot combine with explicit sigma flags".into(),
        });
    }
    if args.sigma.is_some() && n_channel_flags > 0 {
        return Err(TwscError::InvalidParameter {
            name: "--sigma".into(),
            reason: "cannot combine with per-channel sigma flags".into(),
        });
    }
    if let Some(s) = args.sigma {
        if image.is_color() {
            return Err(TwscError::InvalidParameter {
                name: "--sigma".into(),
                reason: "single sigma needs grayscale processing (add --grayscale)".into(),
            });
        }
        return Ok(Some(ChannelSigmas::user_supplied(vec![s])));
    }
    if n_channel_flags > 0 {
        if n_channel_flags < 3 {
            return Err(TwscError::InvalidParameter {
                name: "--sigma-r/-g/-b".into(),
                reason: "all three channel sigmas are required together".into(),
            });
        }
        if !image.is_color() {
            return Err(TwscError::InvalidParameter {
                name: "--sigma-r/-g/-b".into(),
                reason: "per-channel sigmas need color input".into(),
            });
        }
        return Ok(Some(ChannelSigmas::user_supplied(vec![
            args.sigma_r.unwrap(),
            args.sigma_g.unwrap(),
            args.sigma_b.unwrap(),
        ])));
    }
    Ok(None) // estimate inside the pipeline
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<()> {
    let started = Instant::now();
    let mut input = read_image(&args.input)?;
    if args.grayscale && input.is_color() {
        input = input.to_grayscale();
    }
    let mode = if input.is_color() {
        Mode::Color
    } else {
        Mode::Grayscale
    };

    let sigma_override = resolve_sigmas(args, &input)?;
    let resolved = match &sigma_override {
        Some(s) => s.clone(),
        None => crate::noise::estimate_sigmas(&input)?,
    };
    let pooled = resolved.pooled();
    if pooled <= 0.0 {
        return Err(TwscError::InvalidParameter {
            name: "sigma".into(),
            reason: "estimated noise level is zero; supply explicit sigmas".into(),
        });
    }

    let mut cfg = DenoiseConfig::for_sigma(pooled, mode)?;
    cfg.stride = args.stride;
    cfg.workers = args.workers;
    cfg.wsc_baseline = args.wsc_baseline;
    cfg.collect_weights = args.dump_weights.is_some();
    cfg.sigma_override = Some(resolved.clone());

    let reference = args
        .reference
        .as_ref()
        .map(|p| read_image(p))
        .transpose()?;

    let (output, report) = denoise(&input, &cfg, reference.as_ref())?;
    write_image(&args.output, &output)?;

    let metrics = reference
        .as_ref()
        .map(|r| -> Result<(f64, f64)> {
            // Score the clamped 8-bit result the user actually receives.
            let written = read_image(&args.output)?;
            Ok((psnr(r, &written, 255.0)?, ssim(r, &written)?))
        })
        .transpose()?;

    let manifest = build_manifest(args, &input, &cfg, &resolved, &report, metrics, started);
    let manifest_path = manifest_path_for(&args.output);
    std::fs::write(&manifest_path, manifest.to_text())?;

    if let Some(path) = &args.report {
        std::fs::write(path, report.csv())?;
    }
    if let Some(path) = &args.dump_weights {
        let weights = report.final_weights.as_ref().expect("collect_weights set");
        let mut csv = String::from("group_row,group_col,weight,index,value\n");
        for g in weights {
            for (i, v) in g.w1.iter().enumerate() {
                let _ = writeln!(csv, "{},{},w1,{},{}", g.location.0, g.location.1, i, v);
            }
            for (i, v) in g.w2.iter().enumerate() {
                let _ = writeln!(csv, "{},{},w2,{},{}", g.location.0, g.location.1, i, v);
            }
        }
        std::fs::write(path, csv)?;
    }

    println!(
        "denoised {} -> {} ({}x{}, {:?}, sigma {:.2}, {:.1}s)",
        args.input.display(),
        args.output.display(),
        input.height(),
        input.width(),
        mode,
        pooled,
        report.total_seconds,
    );
    Ok(())
}

pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    output.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn build_manifest(
    args: &DenoiseArgs,
    input: &PlanarImage,
    cfg: &DenoiseConfig,
    sigmas: &ChannelSigmas,
    report: &crate::pipeline::DenoiseReport,
    metrics: Option<(f64, f64)>,
    started: Instant,
) -> RunManifest {
    let mut m = RunManifest::new();
    m.put("input", args.input.display());
    m.put("output", args.output.display());
    m.put("height", input.height());
    m.put("width", input.width());
    m.put("channels", input.channels());
    m.put(
        "mode",
        if input.is_color() { "color" } else { "grayscale" },
    );
    m.put("p", cfg.p);
    m.put("m", cfg.group_size);
    m.put("k1", cfg.k1);
    m.put("k2", cfg.k2);
    m.put("rho0", cfg.rho0);
    m.put("mu", cfg.mu);
    m.put("tol_factor", cfg.tol_factor);
    m.put("stride", cfg.stride);
    m.put("window", cfg.window);
    m.put("workers", cfg.workers);
    m.put("seed", args.seed);
    m.put("wsc_baseline", cfg.wsc_baseline);
    m.put(
        "sigma_source",
        match sigmas.source {
            SigmaSource::UserSupplied => "user_supplied",
            SigmaSource::Estimated => "estimated",
        },
    );
    let sig_strs: Vec<String> = sigmas.stds.iter().map(|s| s.to_string()).collect();
    m.put("sigmas", sig_strs.join(","));
    m.put("pooled_sigma", report.pooled_sigma);
    m.put("groups_per_iteration", report.groups_per_iteration);
    if let Some(r) = &args.reference {
        m.put("reference", r.display());
    }
    if let Some((p, s)) = metrics {
        m.put("psnr_db", p);
        m.put("ssim", s);
    }
    m.put("wall_seconds", started.elapsed().as_secs_f64());
    m
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.corpus)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref e) if e == "png" || e == "ppm" || e == "pgm"
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(TwscError::InvalidParameter {
            name: "corpus".into(),
            reason: format!("no PNG/PPM/PGM images in {}", args.corpus.display()),
        });
    }
    if args.sigmas.is_empty() || args.sigmas.iter().any(|&s| s <= 0.0) {
        return Err(TwscError::InvalidParameter {
            name: "--sigmas".into(),
            reason: "need at least one positive noise level".into(),
        });
    }

    let mut csv = String::from("sigma,method,mean_psnr_db,mean_ssim,images,wall_seconds\n");
    for (si, &sigma) in args.sigmas.iter().enumerate() {
        let mut sums = [(0.0f64, 0.0f64), (0.0f64, 0.0f64)]; // (psnr, ssim) per method
        let mut times = [0.0f64; 2];
        for (ii, path) in paths.iter().enumerate() {
            let clean = read_image(path)?;
            let seed = args
                .seed
                .wrapping_add(1_000_003u64.wrapping_mul(si as u64))
                .wrapping_add(ii as u64);
            let noisy = add_awgn(&clean, sigma, seed)?;
            let mode = if clean.is_color() {
                Mode::Color
            } else {
                Mode::Grayscale
            };
            for (mi, wsc) in [(0usize, false), (1usize, true)] {
                let mut cfg = DenoiseConfig::for_sigma(sigma, mode)?;
                cfg.stride = args.stride;
                cfg.workers = args.workers;
                cfg.wsc_baseline = wsc;
                cfg.sigma_override = Some(ChannelSigmas::user_supplied(vec![
                    sigma;
                    clean.channels()
                ]));
                let t = Instant::now();
                let (out, _) = denoise(&noisy, &cfg, None)?;
                times[mi] += t.elapsed().as_secs_f64();
                sums[mi].0 += psnr(&clean, &out, 255.0)?;
                sums[mi].1 += ssim(&clean, &out)?;
            }
            eprintln!("bench: sigma {sigma} image {} done", path.display());
        }
        let n = paths.len() as f64;
        for (mi, name) in [(0usize, "TWSC"), (1usize, "WSC")] {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                sigma,
                name,
                sums[mi].0 / n,
                sums[mi].1 / n,
                paths.len(),
                times[mi]
            );
        }
    }

    match &args.output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
