use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use coperception::codec::{self, CodecParams};
use coperception::exec::Execution;
use coperception::harness::{self, load_config};
use coperception::image::Image;
use coperception::specalign::{self, AlignParams};
use coperception::Error;

#[derive(Parser)]
#[command(name = "coperception", version, about = "Channel-aware collaborative perception simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline once per configured seed and print JSON metrics.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock time per run (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Write fused, ego-only and truth occupancy grids of every seed as PGM here.
        #[arg(long)]
        grids: Option<PathBuf>,
    },
    /// Vary one numeric field over a list of values and print CSV rows.
    Sweep {
        config: PathBuf,
        /// Defaults to the config's `sweep.axis`.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated; defaults to the config's `sweep.values`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Align the amplitude spectrum of SRC to REF and write the result.
    Align {
        src: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Aligned image (PNM).
        #[arg(long)]
        out: PathBuf,
        /// Raw complex spectrum of the aligned image (little-endian f64 re/im pairs).
        #[arg(long)]
        dump_spectrum: Option<PathBuf>,
    },
    /// Encode and decode an image at one compression ratio and print RD figures.
    Codec {
        image: PathBuf,
        #[arg(long)]
        rho: f64,
        /// Decoded image (PNM).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Serialized encoded frame.
        #[arg(long)]
        frame: Option<PathBuf>,
        /// Refine the quantization table on this image first.
        #[arg(long, default_value_t = 0)]
        refine_steps: usize,
        #[arg(long, default_value_t = CodecParams::default().lambda0)]
        lambda0: f64,
    },
    /// Print the per-helper compression plan of the first seed as CSV.
    Optimize {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn config(path: &Path) -> Result<harness::RunConfig, Failure> {
    load_config(path).map_err(|e| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config: path, out, timing, grids } => {
            let cfg = config(&path)?;
            let world = coperception::worldsim::WorldScenario::load(&cfg.scenario)?;
            if let Some(dir) = &grids {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            }
            let mut reports = Vec::with_capacity(cfg.seeds.len());
            for &seed in &cfg.seeds {
                let (report, g) = harness::run_seed_with_grids(&cfg, &world, seed, timing)?;
                if let Some(dir) = &grids {
                    for (name, grid) in [("fused", &g.fused), ("ego", &g.ego_only), ("truth", &g.truth)] {
                        grid.to_image().write(dir.join(format!("seed{seed}_{name}.pgm")))?;
                    }
                }
                reports.push(report);
            }
            let text = serde_json::to_string_pretty(&reports).map_err(|e| Failure::Runtime(e.to_string()))?;
            emit(out.as_deref(), &(text + "\n"))
        }
        Command::Sweep { config: path, axis, values, out, sequential } => {
            let cfg = config(&path)?;
            let spec = cfg.sweep.clone();
            let axis = axis
                .or_else(|| spec.as_ref().map(|s| s.axis.clone()))
                .ok_or_else(|| Failure::Config("no sweep axis given (use --axis or `sweep.axis`)".into()))?;
            let values = values.or_else(|| spec.map(|s| s.values)).unwrap_or_default();
            let exec = if sequential { Execution::Sequential } else { Execution::default() };
            emit(out.as_deref(), &harness::sweep_with(&cfg, &axis, &values, exec)?)
        }
        Command::Align { src, reference, beta, radius, out, dump_spectrum } => {
            let params = AlignParams { beta, mask_radius: radius };
            params.validate()?;
            let (s, r) = (Image::read(&src)?, Image::read(&reference)?);
            let aligned = specalign::align_amplitude(&s, &r, &params)?;
            aligned.write(&out)?;
            if let Some(p) = dump_spectrum {
                std::fs::write(&p, specalign::fft2(&aligned).to_raw_bytes())
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            }
            let (bins, band) = (harness::HISTOGRAM_BINS, harness::alignment_band(&params));
            let report = json!({
                "pre_distance": specalign::band_histogram_distance(&s, &r, bins, band)?,
                "post_distance": specalign::band_histogram_distance(&aligned, &r, bins, band)?,
            });
            emit(None, &format!("{report:#}\n"))
        }
        Command::Codec { image, rho, out, frame, refine_steps, lambda0 } => {
            let mut params = CodecParams { lambda0, ..CodecParams::default() };
            params.validate()?;
            codec::check_rho(rho)?;
            let img = Image::read(&image)?;
            if refine_steps > 0 {
                params = codec::refine(&params, std::slice::from_ref(&img), rho, refine_steps)?;
            }
            let encoded = codec::encode(&img, &params, rho)?;
            let decoded = codec::decode(&encoded, &params)?;
            if let Some(p) = out {
                decoded.write(&p)?;
            }
            if let Some(p) = frame {
                std::fs::write(&p, encoded.to_bytes()?).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            }
            let mse = img.mse(&decoded)?;
            let psnr = codec::psnr(&img, &decoded)?;
            let report = json!({
                "rho": rho,
                "rate_bits": encoded.rate_bits,
                "mse": mse,
                "psnr_db": if psnr.is_finite() { json!(psnr) } else { json!(null) },
                "rd_loss": codec::rd_loss(encoded.rate_bits, mse, rho, params.lambda0),
            });
            emit(None, &format!("{report:#}\n"))
        }
        Command::Optimize { config: path, out } => {
            let cfg = config(&path)?;
            emit(out.as_deref(), &harness::plan_csv(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
