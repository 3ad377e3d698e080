//! `jeep` — side-informed JPEG steganography on PGM precovers.
//!
//! Subcommands: compress, embed, rates, analyze, noisify, decompress.
//! All randomness derives from --seed; identical invocations produce
//! byte-identical outputs. Errors go to stderr as a single
//! `error: <message>` line with a non-zero exit code.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jeep_core::analysis::{detection_probability, kl_exact, lrt_statistics, sanov_bound};
use jeep_core::image::{GrayscaleImage, Plane, VarianceField, BLOCK_AREA};
use jeep_core::io::{
    self, AnalysisReport, ChangeCounts, EmbedReport, PdPoint, RatesReport,
};
use jeep_core::jpeg::{compress, decompress, quality_to_quant_table, Rounding};
use jeep_core::pipeline::{self, Attacker, Estimator, PipelineConfig};
use jeep_core::solver::rates_to_costs;
use jeep_core::source::noisify;
use jeep_core::stego::{stego_moments, ChangeRates, MeanShift};
use jeep_core::variance::MipodConfig;
use jeep_core::{CoefGrid, SideInfo};

#[derive(Parser)]
#[command(name = "jeep", version, about = "Side-informed JPEG steganography in the decompressed-image model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Mipod,
    Const,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackerArg {
    Realistic,
    Omniscient,
}

#[derive(Args)]
struct PipelineArgs {
    /// JPEG quality factor (1-100)
    #[arg(long)]
    qf: u32,
    /// Relative payload in bits per non-zero AC coefficient
    #[arg(long)]
    alpha: f64,
    /// Pixel-variance estimator
    #[arg(long, value_enum, default_value = "mipod")]
    estimator: EstimatorArg,
    /// Attacker model assumed while embedding
    #[arg(long, value_enum, default_value = "realistic")]
    attacker: AttackerArg,
    /// Constant pixel variance for --estimator const
    #[arg(long, default_value_t = 1.0)]
    const_var: f64,
    /// Rational-mode wetness threshold on |u|
    #[arg(long, default_value_t = 0.45)]
    wet_threshold: f64,
}

impl PipelineArgs {
    fn to_config(&self, seed: u64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(self.qf, self.alpha);
        cfg.estimator = match self.estimator {
            EstimatorArg::Mipod => Estimator::Mipod(MipodConfig::default()),
            EstimatorArg::Const => Estimator::Constant(self.const_var),
        };
        cfg.attacker = match self.attacker {
            AttackerArg::Realistic => Attacker::Realistic,
            AttackerArg::Omniscient => Attacker::Omniscient,
        };
        cfg.wet_threshold = self.wet_threshold;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM precover into a JCOF coefficient container
    Compress {
        #[arg(long)]
        qf: u32,
        /// Round quantized coefficients toward zero instead of to nearest
        #[arg(long)]
        toward_zero: bool,
        input: PathBuf,
        output: PathBuf,
    },
    /// Embed a payload and write the stego JCOF plus a JSON report
    Embed {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve change rates and export the cost field for an external coder
    Rates {
        #[command(flatten)]
        pipeline: PipelineArgs,
        input: PathBuf,
        /// Raw f32 output: ρ⁺ plane then ρ⁻ plane (+ JSON sidecar)
        #[arg(long)]
        out_costs: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Eve-side detectability report for a (cover, stego) pair
    Analyze {
        /// Comma-separated false-alarm probabilities
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
        pfa: Vec<f64>,
        cover: PathBuf,
        stego: PathBuf,
        /// Pixel-variance field (raw f32 + sidecar)
        #[arg(long)]
        var: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Create a controlled synthetic cover with known pixel variances
    Noisify {
        #[arg(long)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
        /// Ground-truth variance field output (raw f32 + sidecar)
        #[arg(long)]
        var_out: PathBuf,
    },
    /// Decompress a JCOF container to a viewable PGM
    Decompress { input: PathBuf, output: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_block_aligned(path: &PathBuf) -> anyhow::Result<GrayscaleImage> {
    let image = io::read_pgm(path).with_context(|| format!("reading {}", path.display()))?;
    image.require_block_aligned()?;
    Ok(image)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Compress {
            qf,
            toward_zero,
            input,
            output,
        } => {
            let image = load_block_aligned(&input)?;
            let table = quality_to_quant_table(qf)?;
            let rounding = if toward_zero {
                Rounding::TowardZero
            } else {
                Rounding::Nearest
            };
            let quantized = compress(&image, &table, rounding)?;
            io::write_jcof(&output, &quantized)?;
            println!("{}", output.display());
        }
        Command::Embed {
            pipeline: args,
            seed,
            input,
            output,
            report,
        } => {
            let image = load_block_aligned(&input)?;
            let cfg = args.to_config(seed);
            let out = pipeline::embed_pipeline(&image, &cfg)?;
            io::write_jcof(&output, &out.result.stego)?;
            let summary = EmbedReport::from_output(&cfg, &out);
            summary.validate()?;
            if let Some(path) = report {
                std::fs::write(&path, io::report::to_json_pretty(&summary)?)?;
                println!("{}", path.display());
            } else {
                println!(
                    "stego {} | {} bits, {} changes",
                    output.display(),
                    out.result.realized_payload_bits.round(),
                    out.result.plus_changes + out.result.minus_changes
                );
            }
        }
        Command::Rates {
            pipeline: args,
            input,
            out_costs,
            report,
        } => {
            let image = load_block_aligned(&input)?;
            let cfg = args.to_config(0);
            let prepared = pipeline::prepare(&image, &cfg)?;
            let solution = pipeline::solve(&prepared, &cfg)?;
            let costs = rates_to_costs(&solution.rates)?;
            io::write_f32_planes(
                &out_costs,
                costs.plus.width(),
                costs.plus.height(),
                &[costs.plus.data(), costs.minus.data()],
                "costs_plus_minus",
            )?;
            if let Some(path) = report {
                let kl_taylor =
                    jeep_core::analysis::kl_taylor(&prepared.fisher, &solution.rates)?;
                let summary = RatesReport {
                    qf: cfg.qf,
                    alpha_bpnzac: cfg.alpha,
                    estimator: io::report::estimator_name(&cfg.estimator),
                    attacker: io::report::attacker_name(cfg.attacker),
                    lambda: solution.lambda,
                    kl_taylor_nats: kl_taylor,
                    target_payload_bits: prepared.target_bits,
                    achieved_payload_bits: solution.payload_bits,
                    wet_coefficients: prepared.wet.count_fully_wet() as u64,
                };
                std::fs::write(&path, io::report::to_json_pretty(&summary)?)?;
            }
            println!("{}", out_costs.display());
        }
        Command::Analyze {
            pfa,
            cover,
            stego,
            var,
            report,
        } => {
            let cover_img = io::read_jcof(&cover)?;
            let stego_img = io::read_jcof(&stego)?;
            if cover_img.width() != stego_img.width() || cover_img.height() != stego_img.height() {
                bail!("cover and stego dimensions differ");
            }
            let (sidecar, planes) = io::read_f32_planes(&var)?;
            if sidecar.width != cover_img.width()
                || sidecar.height != cover_img.height()
                || sidecar.planes != 1
            {
                bail!(
                    "variance field {}x{}x{} does not match the {}x{} image",
                    sidecar.width,
                    sidecar.height,
                    sidecar.planes,
                    cover_img.width(),
                    cover_img.height()
                );
            }
            let variance = VarianceField::new(Plane::new(
                sidecar.width,
                sidecar.height,
                planes.into_iter().next().unwrap(),
            )?)?;
            let summary = analyze(&cover_img, &stego_img, &variance, &pfa)?;
            std::fs::write(&report, io::report::to_json_pretty(&summary)?)?;
            println!("{}", report.display());
        }
        Command::Noisify {
            seed,
            input,
            output,
            var_out,
        } => {
            let image = load_block_aligned(&input)?;
            let (noisy, variance) = noisify(&image, seed)?;
            io::write_pgm(&output, &noisy)?;
            io::write_f32_planes(
                &var_out,
                variance.width(),
                variance.height(),
                &[variance.plane().data()],
                "pixel_variance",
            )?;
            println!("{}", output.display());
        }
        Command::Decompress { input, output } => {
            let quantized = io::read_jcof(&input)?;
            io::write_pgm(&output, &decompress(&quantized).to_grayscale())?;
            println!("{}", output.display());
        }
    }
    Ok(())
}

/// Eve-side detectability estimate: per-mode empirical change rates from the
/// realized changes, evaluated under the realistic hypothesis pair (μ = 0,
/// side information unknown so u = 0).
fn analyze(
    cover: &jeep_core::QuantizedImage,
    stego: &jeep_core::QuantizedImage,
    variance: &VarianceField,
    pfa_list: &[f64],
) -> anyhow::Result<AnalysisReport> {
    let n = cover.coeffs().len();
    let blocks = cover.block_count();
    let mut per_mode = vec![(0u64, 0u64); BLOCK_AREA];
    let mut plus_total = 0u64;
    let mut minus_total = 0u64;
    for i in 0..n {
        let d = i32::from(stego.coeffs().data()[i]) - i32::from(cover.coeffs().data()[i]);
        match d {
            0 => {}
            1 => {
                per_mode[i % BLOCK_AREA].0 += 1;
                plus_total += 1;
            }
            -1 => {
                per_mode[i % BLOCK_AREA].1 += 1;
                minus_total += 1;
            }
            _ => bail!("stego differs from cover by {d} at coefficient {i}; not a ±1 embedding"),
        }
    }

    let mut rates = ChangeRates::zeros(cover.width(), cover.height())?;
    for i in 0..n {
        let (p, m) = per_mode[i % BLOCK_AREA];
        rates.plus.data_mut()[i] = p as f64 / blocks as f64;
        rates.minus.data_mut()[i] = m as f64 / blocks as f64;
    }
    let side = SideInfo::new(CoefGrid::filled(cover.width(), cover.height(), 0.0)?)?;
    let moments = stego_moments(&rates, &side, cover.quant(), variance, MeanShift::Zero)?;
    let kl = kl_exact(variance, &moments)?;
    let (delta, rho) = lrt_statistics(variance, &moments)?;
    let mut pd = Vec::with_capacity(pfa_list.len());
    for &pfa in pfa_list {
        pd.push(PdPoint {
            pfa,
            pd: detection_probability(pfa, delta, rho)?,
        });
    }
    let nnz = cover.nonzero_ac().max(1) as f64;
    let alpha_hat = rates
        .plus
        .data()
        .iter()
        .zip(rates.minus.data())
        .map(|(&p, &m)| jeep_core::solver::ternary_entropy_nats(p, m))
        .sum::<f64>()
        / std::f64::consts::LN_2
        / nnz;
    Ok(AnalysisReport {
        delta,
        rho,
        kl_nats: kl,
        kl_bits: kl / std::f64::consts::LN_2,
        sanov_bound: sanov_bound(kl),
        pd,
        changes: ChangeCounts {
            plus: plus_total,
            minus: minus_total,
        },
        alpha_hat_bpnzac: alpha_hat,
    })
}
