//! Closed-form cover/stego statistics: embedding-change moments, the
//! covariance between changes and rounding errors, and the decompressed-pixel
//! moments under embedding.

use crate::dct;
use crate::error::{JeepError, Result};
use crate::image::{CoefGrid, Plane, QuantTable, VarianceField, BLOCK_AREA};
use crate::side_info::SideInfo;

/// Per-coefficient ternary change rates (β⁺, β⁻).
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRates {
    pub plus: CoefGrid<f64>,
    pub minus: CoefGrid<f64>,
}

impl ChangeRates {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            plus: CoefGrid::filled(width, height, 0.0)?,
            minus: CoefGrid::filled(width, height, 0.0)?,
        })
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// β⁺ >= 0, β⁻ >= 0, β⁺ + β⁻ <= 1 everywhere.
    pub fn validate(&self) -> Result<()> {
        self.plus.same_geometry(&self.minus)?;
        for (i, (&bp, &bm)) in self.plus.data().iter().zip(self.minus.data()).enumerate() {
            if !(bp >= 0.0 && bm >= 0.0 && bp + bm <= 1.0 + 1e-12) {
                return Err(JeepError::InvalidParameter(format!(
                    "change rates ({bp}, {bm}) at coefficient {i} leave the simplex"
                )));
            }
        }
        Ok(())
    }
}

/// Mean and variance of the ternary change η: E[η] = β⁺ - β⁻,
/// Var(η) = β⁺ + β⁻ - (β⁺ - β⁻)².
pub fn eta_moments(beta_plus: f64, beta_minus: f64) -> (f64, f64) {
    let mean = beta_plus - beta_minus;
    (mean, beta_plus + beta_minus - mean * mean)
}

/// Model covariance between the change η and the rounding error U:
/// Cov(η, U) = 2(β⁺ - β⁻)u - 2(β⁺ + β⁻)u².
pub fn covariance_eta_u(beta_plus: f64, beta_minus: f64, u: f64) -> f64 {
    2.0 * (beta_plus - beta_minus) * u - 2.0 * (beta_plus + beta_minus) * u * u
}

/// Margin of the joint-moment inequality 3·E[η]·u >= 2·E[η²]·u²; positive
/// when it holds. The mirrored (u <= 0) case is covered by the sign of u.
pub fn lemma1_margin(beta_plus: f64, beta_minus: f64, u: f64) -> f64 {
    3.0 * (beta_plus - beta_minus) * u - 2.0 * (beta_plus + beta_minus) * u * u
}

/// Diagnostic for assumptions (S3)/(S4); tolerates float noise at equality.
pub fn lemma1_holds(beta_plus: f64, beta_minus: f64, u: f64) -> bool {
    lemma1_margin(beta_plus, beta_minus, u) >= -1e-12
}

/// Count coefficients whose solved rates violate the Lemma-1 inequality;
/// coefficients with negligible rates are skipped.
pub fn count_lemma1_violations(rates: &ChangeRates, side: &SideInfo) -> usize {
    rates
        .plus
        .data()
        .iter()
        .zip(rates.minus.data())
        .zip(side.u())
        .filter(|((&bp, &bm), &u)| bp + bm > 1e-9 && !lemma1_holds(bp, bm, u))
        .count()
}

/// Whether the mean shift of the embedding enters the alternative hypothesis.
/// The omniscient attacker knows E[η]; the realistic one does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanShift {
    Embedding,
    Zero,
}

/// Per-pixel stego moments.
#[derive(Debug, Clone)]
pub struct PixelMoments {
    /// Mean shift μ_ij of the decompressed stego pixels.
    pub mu: Plane,
    /// Stego variance σ̄²_ij.
    pub var: Plane,
}

/// Per-coefficient variance inflation of the stego model:
/// g = β⁺(1-2u)² + β⁻(1+2u)² - (β⁺-β⁻)², i.e. Var(η) - 2·Cov(η, U).
pub fn variance_inflation(beta_plus: f64, beta_minus: f64, u: f64) -> f64 {
    let (_, var) = eta_moments(beta_plus, beta_minus);
    var - 2.0 * covariance_eta_u(beta_plus, beta_minus, u)
}

/// Decompressed-domain stego moments:
/// μ = D^T Q (β⁺ - β⁻) (or 0 for the realistic hypothesis pair) and
/// σ̄²_ij = σ²_ij + Σ_kl (f_kl^ij)² q²_kl · g_kl.
pub fn stego_moments(
    rates: &ChangeRates,
    side: &SideInfo,
    quant: &QuantTable,
    cover_var: &VarianceField,
    mean_shift: MeanShift,
) -> Result<PixelMoments> {
    rates.plus.same_geometry(side.grid())?;
    let (w, h) = (rates.plus.width(), rates.plus.height());
    if cover_var.width() != w || cover_var.height() != h {
        return Err(JeepError::DimensionMismatch(
            "cover variance geometry differs from the rate field".into(),
        ));
    }
    let (bxs, bys) = (rates.plus.blocks_x(), rates.plus.blocks_y());
    let mut mu = Plane::constant(w, h, 0.0);
    let mut var = Plane::constant(w, h, 0.0);
    for by in 0..bys {
        for bx in 0..bxs {
            let block = by * bxs + bx;
            let bp = rates.plus.block_slice(block);
            let bm = rates.minus.block_slice(block);
            let u = side.grid().block_slice(block);
            let mut inflation = [0.0; BLOCK_AREA];
            let mut mean_coef = [0.0; BLOCK_AREA];
            for n in 0..BLOCK_AREA {
                let q = f64::from(quant.steps()[n]);
                inflation[n] = q * q * variance_inflation(bp[n], bm[n], u[n]);
                mean_coef[n] = q * (bp[n] - bm[n]);
            }
            let spread = dct::quadratic_pixel_sums(&inflation);
            let cover = cover_var.plane().block(bx, by);
            let mut var_block = [0.0; BLOCK_AREA];
            for n in 0..BLOCK_AREA {
                var_block[n] = cover[n] + spread[n];
                debug_assert!(var_block[n] > 0.0, "stego variance must stay positive");
            }
            var.set_block(bx, by, &var_block);
            match mean_shift {
                MeanShift::Embedding => {
                    mu.set_block(bx, by, &dct::inverse_raw(&mean_coef));
                }
                MeanShift::Zero => {}
            }
        }
    }
    Ok(PixelMoments { mu, var })
}
