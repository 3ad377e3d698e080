//! Controlled synthetic cover source: images "noisified" with known
//! per-pixel variances, for validating the model without estimator error.

use crate::error::{JeepError, Result};
use crate::image::{GrayscaleImage, Plane, VarianceField};
use crate::rng::CounterRng;
use crate::variance::{estimate_variance_mipod, MipodConfig};
use crate::wavelet;

/// Deterministic part of the noisification (steps 1-4): the integer means
/// μ_ij and the adjusted noise deviations σ̲_ij.
#[derive(Debug, Clone)]
pub struct NoisifyTarget {
    /// Step-3 means, integers in [15, 240].
    pub mean: GrayscaleImage,
    /// Ground-truth noise variances σ̲²_ij.
    pub variance: VarianceField,
}

/// Standard deviation of the noise the denoiser removes.
pub const DENOISE_SIGMA: f64 = 10.0;

/// Steps 1-4: estimate variance, wavelet-denoise, narrow the dynamic range
/// to [15, 240], and cap the deviation so a noisified pixel leaves [0, 255]
/// only as a one-sided 5σ outlier.
pub fn noisify_target(image: &GrayscaleImage) -> Result<NoisifyTarget> {
    let estimated = estimate_variance_mipod(image, &MipodConfig::default())?;
    let denoised = wavelet::denoise(&image.to_plane(), DENOISE_SIGMA, 3)?;
    let (w, h) = (image.width(), image.height());
    let mut mean = Vec::with_capacity(w * h);
    let mut var = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let narrowed = 15.0 + denoised.data()[i] * (240.0 - 15.0) / 255.0;
        let mu = narrowed.round().clamp(15.0, 240.0);
        let cap = 0.2 * mu.min(255.0 - mu);
        let sigma = cap.min(estimated.plane().data()[i].sqrt());
        mean.push(mu as u8);
        var.push((sigma * sigma).max(1e-12));
    }
    Ok(NoisifyTarget {
        mean: GrayscaleImage::new(w, h, mean)?,
        variance: VarianceField::new(Plane::new(w, h, var)?)?,
    })
}

/// Full noisification: steps 1-4 plus step 5, adding N(0, σ̲²) to the means,
/// rounding to integers and clipping to [0, 255]. Returns the noisified
/// image together with its ground-truth variance field.
pub fn noisify(image: &GrayscaleImage, seed: u64) -> Result<(GrayscaleImage, VarianceField)> {
    let target = noisify_target(image)?;
    let rng = CounterRng::new(seed);
    let (w, h) = (image.width(), image.height());
    let mut samples = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let sigma = target.variance.plane().data()[i].sqrt();
        let v = f64::from(target.mean.samples()[i]) + sigma * rng.gaussian(i as u64);
        samples.push(v.round().clamp(0.0, 255.0) as u8);
    }
    Ok((GrayscaleImage::new(w, h, samples)?, target.variance))
}

/// Minimal i.i.d. source: a constant-mean Gaussian field with known variance,
/// rounded and clipped.
pub fn synthetic_flat_source(
    width: usize,
    height: usize,
    variance: f64,
    mean: f64,
    seed: u64,
) -> Result<(GrayscaleImage, VarianceField)> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(JeepError::InvalidParameter(format!(
            "variance must be positive, got {variance}"
        )));
    }
    if !(15.0..=240.0).contains(&mean) {
        return Err(JeepError::InvalidParameter(format!(
            "mean {mean} outside [15, 240]"
        )));
    }
    let rng = CounterRng::new(seed);
    let sigma = variance.sqrt();
    let mut samples = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let v = mean + sigma * rng.gaussian(i as u64);
        samples.push(v.round().clamp(0.0, 255.0) as u8);
    }
    Ok((
        GrayscaleImage::new(width, height, samples)?,
        VarianceField::constant(width, height, variance)?,
    ))
}
