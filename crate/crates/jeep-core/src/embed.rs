//! Seeded stochastic embedding simulator.
//!
//! Changes are sampled per coefficient from a counter-based stream keyed by
//! (seed, linear coefficient index), so the output is byte-identical no
//! matter how the work is scheduled.

use crate::error::{JeepError, Result};
use crate::image::{CoefGrid, QuantizedImage, COEF_MAX, COEF_MIN};
use crate::rng::CounterRng;
use crate::side_info::{SideInfo, WetMask};
use crate::solver::ternary_entropy_nats;
use crate::stego::{count_lemma1_violations, ChangeRates};

/// Outcome of a simulated embedding.
#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    pub stego: QuantizedImage,
    /// Realized per-coefficient change in {-1, 0, +1}.
    pub changes: CoefGrid<i8>,
    /// Σ H₃(β) over non-wet coefficients, in bits.
    pub realized_payload_bits: f64,
    pub plus_changes: u64,
    pub minus_changes: u64,
    /// Coefficients whose solved rates violate the Lemma-1 inequality
    /// against the realized side information (0 when none was supplied).
    pub lemma1_violations: usize,
}

/// Sample ternary changes: +1 w.p. β⁺, -1 w.p. β⁻, else 0, independently per
/// coefficient. Wet directions are forced to zero rate before sampling.
pub fn simulate_embedding(
    cover: &QuantizedImage,
    rates: &ChangeRates,
    mask: &WetMask,
    side: Option<&SideInfo>,
    seed: u64,
) -> Result<EmbeddingResult> {
    rates.validate()?;
    cover.coeffs().same_geometry(&rates.plus)?;
    rates.plus.same_geometry(&mask.plus)?;
    if let Some(s) = side {
        rates.plus.same_geometry(s.grid())?;
    }

    let n = cover.coeffs().len();
    let rng = CounterRng::new(seed);
    let mut coeffs = cover.coeffs().data().to_vec();
    let mut changes = vec![0i8; n];
    let mut payload_nats = 0.0;
    let mut plus_changes = 0u64;
    let mut minus_changes = 0u64;
    for i in 0..n {
        let bp = if mask.plus.data()[i] {
            0.0
        } else {
            rates.plus.data()[i]
        };
        let bm = if mask.minus.data()[i] {
            0.0
        } else {
            rates.minus.data()[i]
        };
        payload_nats += ternary_entropy_nats(bp, bm);
        if bp == 0.0 && bm == 0.0 {
            continue;
        }
        let r = rng.uniform(i as u64);
        let delta: i16 = if r < bp {
            plus_changes += 1;
            1
        } else if r < bp + bm {
            minus_changes += 1;
            -1
        } else {
            0
        };
        if delta != 0 {
            let new = i32::from(coeffs[i]) + i32::from(delta);
            if !(COEF_MIN..=COEF_MAX).contains(&new) {
                return Err(JeepError::InvalidParameter(format!(
                    "change at coefficient {i} leaves the valid range; saturation mask missing"
                )));
            }
            coeffs[i] = new as i16;
            changes[i] = delta as i8;
        }
    }
    let effective = effective_rates(rates, mask)?;
    let lemma1_violations = side
        .map(|s| count_lemma1_violations(&effective, s))
        .unwrap_or(0);
    Ok(EmbeddingResult {
        stego: QuantizedImage::new(
            CoefGrid::new(cover.width(), cover.height(), coeffs)?,
            cover.quant().clone(),
        )?,
        changes: CoefGrid::new(cover.width(), cover.height(), changes)?,
        realized_payload_bits: payload_nats / std::f64::consts::LN_2,
        plus_changes,
        minus_changes,
        lemma1_violations,
    })
}

/// Rates with wet directions zeroed.
pub fn effective_rates(rates: &ChangeRates, mask: &WetMask) -> Result<ChangeRates> {
    rates.plus.same_geometry(&mask.plus)?;
    let zero_where = |r: &CoefGrid<f64>, m: &CoefGrid<bool>| {
        CoefGrid::new(
            r.width(),
            r.height(),
            r.data()
                .iter()
                .zip(m.data())
                .map(|(&v, &wet)| if wet { 0.0 } else { v })
                .collect(),
        )
    };
    Ok(ChangeRates {
        plus: zero_where(&rates.plus, &mask.plus)?,
        minus: zero_where(&rates.minus, &mask.minus)?,
    })
}
