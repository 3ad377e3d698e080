//! JPEG compression model: quality-factor tables, block quantization,
//! decompression and variance propagation between the pixel and DCT domains.

use crate::dct;
use crate::error::{JeepError, Result};
use crate::image::{
    CoefGrid, DctVarianceField, GrayscaleImage, Plane, QuantTable, QuantizedImage, VarianceField,
    BLOCK_AREA,
};

/// Annex-K luminance base table, natural (row-major) order.
const BASE_LUMA: [u16; BLOCK_AREA] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Coefficient rounding rule used during compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// Round to nearest, halves away from zero. The only mode the embedding
    /// model supports.
    Nearest,
    /// Truncate toward zero, as some imaging devices do.
    TowardZero,
}

/// Round to nearest with halves away from zero, so side-information
/// extraction is deterministic across platforms.
pub fn round_half_away(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        (x - 0.5).ceil()
    }
}

/// IJG luminance quantization table for a quality factor in 1..=100.
pub fn quality_to_quant_table(qf: u32) -> Result<QuantTable> {
    if !(1..=100).contains(&qf) {
        return Err(JeepError::InvalidParameter(format!(
            "quality factor {qf} outside 1..=100"
        )));
    }
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut steps = [0u16; BLOCK_AREA];
    for (s, &base) in steps.iter_mut().zip(BASE_LUMA.iter()) {
        let q = (u32::from(base) * scale + 50) / 100;
        *s = q.clamp(1, 255) as u16;
    }
    QuantTable::new(steps)
}

/// c = [Q^{-1} D x] blockwise under the selected rounding rule.
pub fn compress(
    image: &GrayscaleImage,
    quant: &QuantTable,
    rounding: Rounding,
) -> Result<QuantizedImage> {
    image.require_block_aligned()?;
    let (bx_count, by_count) = (image.blocks_x(), image.blocks_y());
    let mut coeffs = vec![0i16; image.width() * image.height()];
    for by in 0..by_count {
        for bx in 0..bx_count {
            let d = dct::forward(&image.block(bx, by));
            let base = (by * bx_count + bx) * BLOCK_AREA;
            for (n, &dkl) in d.iter().enumerate() {
                let scaled = dkl / f64::from(quant.steps()[n]);
                let c = match rounding {
                    Rounding::Nearest => round_half_away(scaled),
                    Rounding::TowardZero => scaled.trunc(),
                };
                coeffs[base + n] = c as i16;
            }
        }
    }
    QuantizedImage::new(
        CoefGrid::new(image.width(), image.height(), coeffs)?,
        quant.clone(),
    )
}

/// y = D^T Q c, real-valued: no pixel rounding or clipping. Use
/// [`Plane::to_grayscale`] as an optional finishing step for viewing.
pub fn decompress(q: &QuantizedImage) -> Plane {
    let (bx_count, by_count) = (q.blocks_x(), q.blocks_y());
    let mut out = Plane::constant(q.width(), q.height(), 0.0);
    for by in 0..by_count {
        for bx in 0..bx_count {
            let slice = q.coeffs().block_slice(by * bx_count + bx);
            let mut dequant = [0.0; BLOCK_AREA];
            for (n, &c) in slice.iter().enumerate() {
                dequant[n] = f64::from(c) * f64::from(q.quant().steps()[n]);
            }
            out.set_block(bx, by, &dct::inverse(&dequant));
        }
    }
    out
}

/// Σ_kl = diag(D Σ_ij D^T) blockwise.
pub fn variance_to_dct(var: &VarianceField) -> Result<DctVarianceField> {
    let plane = var.plane();
    if plane.width() % 8 != 0 || plane.height() % 8 != 0 {
        return Err(JeepError::DimensionMismatch(
            "variance field must be block-aligned".into(),
        ));
    }
    let (bx_count, by_count) = (plane.blocks_x(), plane.blocks_y());
    let mut data = vec![0.0; plane.width() * plane.height()];
    for by in 0..by_count {
        for bx in 0..bx_count {
            let fwd = dct::variance_forward(&plane.block(bx, by));
            let base = (by * bx_count + bx) * BLOCK_AREA;
            data[base..base + BLOCK_AREA].copy_from_slice(&fwd);
        }
    }
    CoefGrid::new(plane.width(), plane.height(), data)
}

/// Σ_ij = diag(D^T Σ_kl D) blockwise.
pub fn variance_to_spatial(var: &DctVarianceField) -> Result<VarianceField> {
    let (bx_count, by_count) = (var.blocks_x(), var.blocks_y());
    let mut out = Plane::constant(var.width(), var.height(), 0.0);
    for by in 0..by_count {
        for bx in 0..bx_count {
            let slice = var.block_slice(by * bx_count + bx);
            let mut block = [0.0; BLOCK_AREA];
            block.copy_from_slice(slice);
            out.set_block(bx, by, &dct::variance_inverse(&block));
        }
    }
    VarianceField::new(out)
}

/// Wrapped-Gaussian variance of the decompression rounding error,
/// s_ij = Σ_kl (f_kl^ij)² q_kl² Var(u_kl), for one block geometry.
pub fn rounding_error_variance(quant: &QuantTable, var_u: f64) -> [f64; BLOCK_AREA] {
    let mut weights = [0.0; BLOCK_AREA];
    for (w, &q) in weights.iter_mut().zip(quant.steps().iter()) {
        *w = f64::from(q) * f64::from(q) * var_u;
    }
    dct::quadratic_pixel_sums(&weights)
}
