//! The embedding pipeline: compression, side information, variance
//! estimation and smoothing, Fisher information, the payload solver and the
//! embedding simulator, with detectability diagnostics.

use crate::analysis::{
    detection_probability, kl_exact, kl_taylor, lrt_statistics, sanov_bound,
};
use crate::embed::{effective_rates, simulate_embedding, EmbeddingResult};
use crate::error::Result;
use crate::fisher::{apply_wet_mask, fisher_base, fisher_omniscient, fisher_realistic, FisherField};
use crate::image::{GrayscaleImage, QuantizedImage, VarianceField, BLOCK_AREA};
use crate::jpeg::quality_to_quant_table;
use crate::side_info::{rational_mode_mask, saturation_mask, SideInfo, WetMask};
use crate::solver::{payload_bits, solve_change_rates, PayloadUnit, Solution, SolverConfig};
use crate::stego::{stego_moments, ChangeRates, MeanShift};
use crate::variance::{constant_variance, estimate_variance_mipod, smooth_variance_dct, MipodConfig};

/// Pixel-variance estimator choice.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// MiPOD-style estimate followed by cross-block DCT smoothing.
    Mipod(MipodConfig),
    /// Constant variance (JEEP-C); no smoothing.
    Constant(f64),
}

/// Attacker model: decides the Fisher matrices and whether the mean shift
/// enters the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attacker {
    Realistic,
    Omniscient,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub qf: u32,
    pub alpha: f64,
    pub payload_unit: PayloadUnit,
    pub estimator: Estimator,
    pub attacker: Attacker,
    /// Rational modes with |u| at or above this are wet.
    pub wet_threshold: f64,
    pub seed: u64,
    pub solver: SolverConfig,
    /// False-alarm probabilities reported in the diagnostics.
    pub pfa_list: Vec<f64>,
}

impl PipelineConfig {
    pub fn new(qf: u32, alpha: f64) -> Self {
        Self {
            qf,
            alpha,
            payload_unit: PayloadUnit::BitsPerNonzeroAc,
            estimator: Estimator::Mipod(MipodConfig::default()),
            attacker: Attacker::Realistic,
            wet_threshold: 0.45,
            seed: 0,
            solver: SolverConfig::default(),
            pfa_list: vec![0.01, 0.05, 0.1, 0.5],
        }
    }
}

/// Everything the solver needs, computed once per image.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cover: QuantizedImage,
    pub side: SideInfo,
    pub variance: VarianceField,
    pub fisher: FisherField,
    pub wet: WetMask,
    pub target_bits: f64,
}

/// Detectability summary of one embedding.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub lambda: f64,
    pub max_kkt_residual: f64,
    pub target_payload_bits: f64,
    pub achieved_payload_bits: f64,
    pub kl_taylor_nats: f64,
    pub kl_exact_nats: f64,
    pub delta: f64,
    pub rho: f64,
    pub sanov_bound: f64,
    /// (P_FA, P_D) pairs from the LRT statistics.
    pub pd: Vec<(f64, f64)>,
    /// Realized (plus, minus) change counts per DCT mode.
    pub per_mode_changes: Vec<(u64, u64)>,
    pub fully_wet_coefficients: usize,
    pub nonzero_ac: usize,
}

/// Embedding output: the stego image plus the solved rates and diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub cover: QuantizedImage,
    pub side: SideInfo,
    pub rates: ChangeRates,
    pub result: EmbeddingResult,
    pub diagnostics: Diagnostics,
}

/// Compression, side-information extraction, variance modeling, Fisher
/// information and wet masking.
pub fn prepare(image: &GrayscaleImage, cfg: &PipelineConfig) -> Result<Prepared> {
    image.require_block_aligned()?;
    let quant = quality_to_quant_table(cfg.qf)?;
    let (cover, side) = crate::side_info::extract_side_info(image, &quant)?;

    let variance = match &cfg.estimator {
        Estimator::Mipod(mipod) => {
            let raw = estimate_variance_mipod(image, mipod)?;
            smooth_variance_dct(&raw)?
        }
        Estimator::Constant(v) => constant_variance(image.width(), image.height(), *v)?,
    };

    let base = fisher_base(&quant, &variance)?;
    let mut fisher = match cfg.attacker {
        Attacker::Realistic => fisher_realistic(&base, &side)?,
        Attacker::Omniscient => fisher_omniscient(&base, &side)?,
    };
    let wet = rational_mode_mask(&side, cfg.wet_threshold)?.union(&saturation_mask(&cover))?;
    apply_wet_mask(&mut fisher, &wet)?;

    let target_bits = payload_bits(&cover, cfg.alpha, cfg.payload_unit)?;
    Ok(Prepared {
        cover,
        side,
        variance,
        fisher,
        wet,
        target_bits,
    })
}

/// Solve the change rates for a prepared image.
pub fn solve(prepared: &Prepared, cfg: &PipelineConfig) -> Result<Solution> {
    solve_change_rates(&prepared.fisher, prepared.target_bits, &cfg.solver)
}

/// Full pipeline: prepare, solve, simulate, diagnose.
pub fn embed_pipeline(image: &GrayscaleImage, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let prepared = prepare(image, cfg)?;
    let solution = solve(&prepared, cfg)?;
    let rates = effective_rates(&solution.rates, &prepared.wet)?;
    let result = simulate_embedding(&prepared.cover, &rates, &prepared.wet, Some(&prepared.side), cfg.seed)?;

    let mean_shift = match cfg.attacker {
        Attacker::Realistic => MeanShift::Zero,
        Attacker::Omniscient => MeanShift::Embedding,
    };
    let moments = stego_moments(
        &rates,
        &prepared.side,
        prepared.cover.quant(),
        &prepared.variance,
        mean_shift,
    )?;
    let kl_exact_nats = kl_exact(&prepared.variance, &moments)?;
    let kl_taylor_nats = kl_taylor(&prepared.fisher, &rates)?;
    let (delta, rho) = lrt_statistics(&prepared.variance, &moments)?;
    let mut pd = Vec::with_capacity(cfg.pfa_list.len());
    for &pfa in &cfg.pfa_list {
        pd.push((pfa, detection_probability(pfa, delta, rho)?));
    }

    let mut per_mode_changes = vec![(0u64, 0u64); BLOCK_AREA];
    for (i, &c) in result.changes.data().iter().enumerate() {
        let mode = i % BLOCK_AREA;
        match c {
            1 => per_mode_changes[mode].0 += 1,
            -1 => per_mode_changes[mode].1 += 1,
            _ => {}
        }
    }

    let diagnostics = Diagnostics {
        lambda: solution.lambda,
        max_kkt_residual: solution.max_kkt_residual,
        target_payload_bits: prepared.target_bits,
        achieved_payload_bits: solution.payload_bits,
        kl_taylor_nats,
        kl_exact_nats,
        delta,
        rho,
        sanov_bound: sanov_bound(kl_exact_nats),
        pd,
        per_mode_changes,
        fully_wet_coefficients: prepared.wet.count_fully_wet(),
        nonzero_ac: prepared.cover.nonzero_ac(),
    };
    Ok(PipelineOutput {
        cover: prepared.cover,
        side: prepared.side,
        rates,
        result,
        diagnostics,
    })
}
