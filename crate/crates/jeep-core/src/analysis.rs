//! Security analytics: residuals, exact and Taylor KL divergence, the
//! likelihood-ratio-test statistics and detection-probability bounds.
//!
//! (δ, ϱ) follow the printed closed forms, including their μ terms, and
//! degenerate to (0, 1) when there is no embedding. The normalized statistic
//! Λ* is standardized with the exact H₀ moments of the per-pixel
//! log-likelihood ratio so that it is N(0,1) under the cover hypothesis.

use crate::dct;
use crate::error::{JeepError, Result};
use crate::fisher::FisherField;
use crate::gaussian::{q_function, q_inverse};
use crate::image::{GrayscaleImage, Plane, QuantTable, VarianceField, BLOCK_AREA};
use crate::side_info::SideInfo;
use crate::stego::{ChangeRates, PixelMoments};

/// e = y - x + D^T Q u; identically zero for an unmodified cover and
/// exactly D^T Q η after embedding.
pub fn residual(
    decompressed: &Plane,
    precover: &GrayscaleImage,
    side: &SideInfo,
    quant: &QuantTable,
) -> Result<Plane> {
    if decompressed.width() != precover.width() || decompressed.height() != precover.height() {
        return Err(JeepError::DimensionMismatch(
            "decompressed plane and precover differ".into(),
        ));
    }
    if side.grid().width() != precover.width() || side.grid().height() != precover.height() {
        return Err(JeepError::DimensionMismatch(
            "side information geometry differs from the image".into(),
        ));
    }
    let (bxs, bys) = (decompressed.blocks_x(), decompressed.blocks_y());
    let mut out = Plane::constant(precover.width(), precover.height(), 0.0);
    for by in 0..bys {
        for bx in 0..bxs {
            let u = side.grid().block_slice(by * bxs + bx);
            let mut qu = [0.0; BLOCK_AREA];
            for n in 0..BLOCK_AREA {
                qu[n] = f64::from(quant.steps()[n]) * u[n];
            }
            let correction = dct::inverse_raw(&qu);
            let y = decompressed.block(bx, by);
            let x = precover.block(bx, by);
            let mut e = [0.0; BLOCK_AREA];
            for n in 0..BLOCK_AREA {
                e[n] = y[n] - x[n] + correction[n];
            }
            out.set_block(bx, by, &e);
        }
    }
    Ok(out)
}

fn check_moment_geometry(cover_var: &VarianceField, moments: &PixelMoments) -> Result<()> {
    if cover_var.width() != moments.var.width() || cover_var.height() != moments.var.height() {
        return Err(JeepError::DimensionMismatch(
            "cover variance and stego moments differ".into(),
        ));
    }
    Ok(())
}

/// Exact Gaussian KL divergence per pixel, summed with per-block Kahan
/// accumulation:
/// D = ½ Σ [ log(σ̄²/σ²) + (μ² + σ² - σ̄²)/σ̄² ].
pub fn kl_exact(cover_var: &VarianceField, moments: &PixelMoments) -> Result<f64> {
    check_moment_geometry(cover_var, moments)?;
    let n = cover_var.plane().data().len();
    let mut total = 0.0;
    let mut block_sum = 0.0;
    let mut comp = 0.0;
    for i in 0..n {
        let s2 = cover_var.plane().data()[i];
        let sb2 = moments.var.data()[i];
        let mu = moments.mu.data()[i];
        // log(σ̄²/σ²) - (σ̄²-σ²)/σ̄² + μ²/σ̄², written against cancellation
        let r = (sb2 - s2) / s2;
        let term = 0.5 * (r.ln_1p() - r / (1.0 + r) + mu * mu / sb2);
        // Kahan
        let y = term - comp;
        let t = block_sum + y;
        comp = (t - block_sum) - y;
        block_sum = t;
        if (i + 1) % BLOCK_AREA == 0 {
            total += block_sum;
            block_sum = 0.0;
            comp = 0.0;
        }
    }
    Ok(total + block_sum)
}

/// Second-order KL approximation ½ Σ β I βᵀ over all coefficients with
/// nonzero rates.
pub fn kl_taylor(fisher: &FisherField, rates: &ChangeRates) -> Result<f64> {
    fisher.plus.same_geometry(&rates.plus)?;
    let mut total = 0.0;
    for i in 0..fisher.len() {
        let bp = rates.plus.data()[i];
        let bm = rates.minus.data()[i];
        if bp == 0.0 && bm == 0.0 {
            continue;
        }
        let ip = if bp == 0.0 { 0.0 } else { fisher.plus.data()[i] };
        let im = if bm == 0.0 { 0.0 } else { fisher.minus.data()[i] };
        let ix = if bp == 0.0 || bm == 0.0 {
            0.0
        } else {
            fisher.cross.data()[i]
        };
        total += 0.5 * (bp * bp * ip + 2.0 * bp * bm * ix + bm * bm * im);
    }
    Ok(total)
}

/// Deflection coefficient δ and variance effect ϱ of the LRT, as printed:
///
///   δ = Σ [(σ̄²-σ²)² + μ²(3σ²-σ̄²)]/(2σ²σ̄²) / sqrt(Σ (σ²/σ̄²)(σ̄²-σ²+μ))
///   ϱ = Σ [((σ̄²+2μ²)/σ²)(σ̄²-σ²) + μ] / Σ [(σ²/σ̄²)(σ̄²-σ²+μ)]
///
/// With no embedding at all both sums vanish; that case is defined as
/// (δ, ϱ) = (0, 1).
pub fn lrt_statistics(cover_var: &VarianceField, moments: &PixelMoments) -> Result<(f64, f64)> {
    check_moment_geometry(cover_var, moments)?;
    let n = cover_var.plane().data().len();
    let mut num_delta = 0.0;
    let mut var0_sum = 0.0;
    let mut var1_sum = 0.0;
    for i in 0..n {
        let s2 = cover_var.plane().data()[i];
        let sb2 = moments.var.data()[i];
        let mu = moments.mu.data()[i];
        let diff = sb2 - s2;
        num_delta += (diff * diff + mu * mu * (3.0 * s2 - sb2)) / (2.0 * s2 * sb2);
        var0_sum += (s2 / sb2) * (diff + mu);
        var1_sum += ((sb2 + 2.0 * mu * mu) / s2) * diff + mu;
    }
    if var0_sum == 0.0 && num_delta == 0.0 {
        return Ok((0.0, 1.0));
    }
    if var0_sum <= 0.0 {
        return Err(JeepError::InvalidParameter(format!(
            "H0 variance sum {var0_sum} of the LRT statistic is not positive"
        )));
    }
    Ok((num_delta / var0_sum.sqrt(), var1_sum / var0_sum))
}

/// Per-pixel log-likelihood ratio
/// Λ(e) = ½ log(σ²/σ̄²) + e²(σ̄²-σ²)/(2σ²σ̄²) + eμ/σ̄² - μ²/(2σ̄²).
fn llr(e: f64, s2: f64, sb2: f64, mu: f64) -> f64 {
    0.5 * (s2 / sb2).ln() + e * e * (sb2 - s2) / (2.0 * s2 * sb2) + e * mu / sb2
        - mu * mu / (2.0 * sb2)
}

/// Exact H₀ moments of Λ(e) for e ~ N(0, σ²):
/// E₀ = ½ log(σ²/σ̄²) + (σ̄²-σ²)/(2σ̄²) - μ²/(2σ̄²),
/// Var₀ = (σ̄²-σ²)²/(2σ̄⁴) + μ²σ²/σ̄⁴.
fn llr_h0_moments(s2: f64, sb2: f64, mu: f64) -> (f64, f64) {
    let diff = sb2 - s2;
    let mean = 0.5 * (s2 / sb2).ln() + diff / (2.0 * sb2) - mu * mu / (2.0 * sb2);
    let var = diff * diff / (2.0 * sb2 * sb2) + mu * mu * s2 / (sb2 * sb2);
    (mean, var)
}

/// Normalized LRT statistic Λ* of a residual field: centered by the exact
/// E₀[Λ] and scaled by the exact Var₀[Λ], so Λ* ~ N(0,1) under H₀.
pub fn lrt_normalized_statistic(
    residual: &Plane,
    cover_var: &VarianceField,
    moments: &PixelMoments,
) -> Result<f64> {
    check_moment_geometry(cover_var, moments)?;
    if residual.width() != cover_var.width() || residual.height() != cover_var.height() {
        return Err(JeepError::DimensionMismatch(
            "residual geometry differs from the variance field".into(),
        ));
    }
    let mut sum = 0.0;
    let mut var = 0.0;
    for i in 0..residual.data().len() {
        let s2 = cover_var.plane().data()[i];
        let sb2 = moments.var.data()[i];
        let mu = moments.mu.data()[i];
        let (m0, v0) = llr_h0_moments(s2, sb2, mu);
        sum += llr(residual.data()[i], s2, sb2, mu) - m0;
        var += v0;
    }
    if var <= 0.0 {
        return Err(JeepError::InvalidParameter(
            "the LRT statistic has zero variance under H0 (no embedding)".into(),
        ));
    }
    Ok(sum / var.sqrt())
}

/// P_D = Q((Q⁻¹(P_FA) - δ)/√ϱ).
pub fn detection_probability(p_fa: f64, delta: f64, rho: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(JeepError::InvalidParameter(format!(
            "false-alarm probability {p_fa} outside (0, 1)"
        )));
    }
    if !(rho > 0.0) {
        return Err(JeepError::InvalidParameter(format!(
            "variance effect ϱ must be positive, got {rho}"
        )));
    }
    Ok(q_function((q_inverse(p_fa)? - delta) / rho.sqrt()))
}

/// Sanov upper bound P_D <= 1 - e^{-Σ D} for a total KL divergence in nats.
pub fn sanov_bound(kl_nats: f64) -> f64 {
    1.0 - (-kl_nats).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::CoefGrid;
    use crate::jpeg::{compress, decompress, quality_to_quant_table, Rounding};
    use crate::rng::CounterRng;
    use crate::side_info::extract_side_info;
    use rand::{Rng, SeedableRng};

    fn moments_from(s2: Vec<f64>, sb2: Vec<f64>, mu: Vec<f64>, w: usize, h: usize) -> (VarianceField, PixelMoments) {
        (
            VarianceField::new(Plane::new(w, h, s2).unwrap()).unwrap(),
            PixelMoments {
                mu: Plane::new(w, h, mu).unwrap(),
                var: Plane::new(w, h, sb2).unwrap(),
            },
        )
    }

    #[test]
    fn residual_zero_on_cover() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(31);
        let img = GrayscaleImage::from_fn(16, 16, |_, _| rng.gen());
        let quant = quality_to_quant_table(92).unwrap();
        let (q, side) = extract_side_info(&img, &quant).unwrap();
        let y = decompress(&q);
        let e = residual(&y, &img, &side, &quant).unwrap();
        assert!(e.data().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn residual_equals_decompressed_changes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(33);
        let img = GrayscaleImage::from_fn(8, 8, |_, _| rng.gen());
        let quant = quality_to_quant_table(85).unwrap();
        let (q, side) = extract_side_info(&img, &quant).unwrap();
        // flip one coefficient by hand
        let mut data = q.coeffs().data().to_vec();
        data[10] += 1;
        let stego = crate::image::QuantizedImage::new(
            CoefGrid::new(8, 8, data).unwrap(),
            quant.clone(),
        )
        .unwrap();
        let y = decompress(&stego);
        let e = residual(&y, &img, &side, &quant).unwrap();
        let mut eta = [0.0; 64];
        eta[10] = f64::from(quant.steps()[10]);
        let expect = dct::inverse_raw(&eta);
        for (a, b) in e.data().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn decompression_rounding_error_approximates_residual_at_qf100() {
        // y - [y] tracks e when the compression rounding errors are small
        // (low AC energy, so u ≈ d ≈ 0) and wraps are rare: a smooth image
        // with sparse ±1 changes
        let img = GrayscaleImage::from_fn(64, 64, |x, y| {
            (128.0 + 18.0 * (x as f64 / 41.0).sin() + 14.0 * (y as f64 / 37.0).cos()).round()
                as u8
        });
        let quant = quality_to_quant_table(100).unwrap();
        let (cover, side) = extract_side_info(&img, &quant).unwrap();
        // two ±1 changes per block
        let mut data = cover.coeffs().data().to_vec();
        for b in 0..cover.block_count() {
            data[b * 64 + 9] += 1;
            data[b * 64 + 18] -= 1;
        }
        let stego =
            crate::image::QuantizedImage::new(CoefGrid::new(64, 64, data).unwrap(), quant.clone())
                .unwrap();
        let y = decompress(&stego);
        let e = residual(&y, &img, &side, &quant).unwrap();
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for (i, &yv) in y.data().iter().enumerate() {
            let rounding = yv - yv.round();
            let ev = e.data()[i];
            dot += rounding * ev;
            na += rounding * rounding;
            nb += ev * ev;
        }
        let corr = dot / (na.sqrt() * nb.sqrt());
        assert!(corr > 0.9, "correlation {corr}");
    }

    #[test]
    fn kl_exact_examples() {
        // matched moments
        let (v, m) = moments_from(vec![2.0; 64], vec![2.0; 64], vec![0.0; 64], 8, 8);
        assert_eq!(kl_exact(&v, &m).unwrap(), 0.0);

        // pure mean shift: ½ Σ μ²/σ²
        let mus: Vec<f64> = (0..64).map(|i| 0.01 * i as f64).collect();
        let (v, m) = moments_from(vec![2.0; 64], vec![2.0; 64], mus.clone(), 8, 8);
        let expect: f64 = mus.iter().map(|mu| 0.5 * mu * mu / 2.0).sum();
        assert!((kl_exact(&v, &m).unwrap() - expect).abs() < 1e-12);

        // single pixel, σ²=1, σ̄²=1.1: ½(ln 1.1 - 0.1/1.1)
        let mut sb2 = vec![1.0; 64];
        sb2[0] = 1.1;
        let (v, m) = moments_from(vec![1.0; 64], sb2, vec![0.0; 64], 8, 8);
        let expect = 0.5 * ((1.1_f64).ln() - 0.1 / 1.1);
        assert!((kl_exact(&v, &m).unwrap() - expect).abs() < 1e-12);
        assert!(kl_exact(&v, &m).unwrap() > 0.0);
    }

    #[test]
    fn kl_taylor_quadratic_form() {
        let quant = crate::image::QuantTable::new([1; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 1.0).unwrap();
        let base = crate::fisher::fisher_base(&quant, &var).unwrap();
        let side = crate::side_info::SideInfo::new(CoefGrid::filled(8, 8, 0.0).unwrap()).unwrap();
        let field = crate::fisher::fisher_realistic(&base, &side).unwrap();
        let mut rates = ChangeRates::zeros(8, 8).unwrap();
        let beta = 0.01;
        for i in 0..64 {
            rates.plus.data_mut()[i] = beta;
            rates.minus.data_mut()[i] = beta;
        }
        // rank-1 at u=0 with entries I/2: ½·(I/2)(2β)² = β² I per coefficient
        let expect: f64 = base.i.data().iter().map(|i| beta * beta * i).sum();
        let got = kl_taylor(&field, &rates).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);

        let zero = ChangeRates::zeros(8, 8).unwrap();
        assert_eq!(kl_taylor(&field, &zero).unwrap(), 0.0);
    }

    #[test]
    fn lrt_statistics_degenerate_and_single_pixel() {
        let (v, m) = moments_from(vec![3.0; 64], vec![3.0; 64], vec![0.0; 64], 8, 8);
        assert_eq!(lrt_statistics(&v, &m).unwrap(), (0.0, 1.0));

        // single active pixel, μ=0, σ̄² = σ²(1+ε): closed form at σ² = 1
        let eps = 0.2;
        let mut sb2 = vec![1.0; 64];
        sb2[0] = 1.0 + eps;
        let (v, m) = moments_from(vec![1.0; 64], sb2, vec![0.0; 64], 8, 8);
        let (delta, rho) = lrt_statistics(&v, &m).unwrap();
        let expect_delta = eps * eps / (2.0 * (1.0 + eps)) / (eps / (1.0 + eps)).sqrt();
        let expect_rho = ((1.0 + eps) * eps) / (eps / (1.0 + eps));
        assert!((delta - expect_delta).abs() < 1e-12);
        assert!((rho - expect_rho).abs() < 1e-12);
        assert!(delta >= 0.0 && rho >= 1.0);
    }

    #[test]
    fn lrt_statistic_is_standard_normal_under_h0() {
        // 2000 blocks at a mean+variance alternative; empirical moments of Λ*
        let rng = CounterRng::new(606);
        let n_blocks = 2000;
        let mut stats = Vec::with_capacity(n_blocks);
        let (v, m) = moments_from(
            vec![4.0; 64],
            vec![4.0 * 1.02; 64],
            vec![0.5; 64],
            8,
            8,
        );
        for b in 0..n_blocks {
            let mut e = Plane::constant(8, 8, 0.0);
            for i in 0..64 {
                e.data_mut()[i] = 2.0 * rng.gaussian((b * 64 + i) as u64);
            }
            stats.push(lrt_normalized_statistic(&e, &v, &m).unwrap());
        }
        let mean = stats.iter().sum::<f64>() / n_blocks as f64;
        let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n_blocks as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.12, "variance {var}");
    }

    #[test]
    fn detection_probability_identities() {
        for &pfa in &[0.001, 0.05, 0.3, 0.9] {
            let pd = detection_probability(pfa, 0.0, 1.0).unwrap();
            assert!((pd - pfa).abs() < 1e-12);
        }
        // large deflection detects almost surely
        assert!(detection_probability(0.05, 20.0, 1.0).unwrap() > 1.0 - 1e-12);
        // Q(Q⁻¹(0.05) - 1) ≈ 0.2595
        let pd = detection_probability(0.05, 1.0, 1.0).unwrap();
        let expect = q_function(q_inverse(0.05).unwrap() - 1.0);
        assert!((pd - expect).abs() < 1e-15);
        assert!((pd - 0.2595).abs() < 5e-4);
        assert!(detection_probability(0.0, 1.0, 1.0).is_err());
        assert!(detection_probability(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sanov_values() {
        assert_eq!(sanov_bound(0.0), 0.0);
        assert!((sanov_bound(std::f64::consts::LN_2) - 0.5).abs() < 1e-15);
        assert!(sanov_bound(50.0) <= 1.0);
    }

    #[test]
    fn taylor_tracks_exact_for_small_rates() {
        // one active coefficient per block (the per-coefficient independence
        // the quadratic form assumes); shrink rates and watch the ratio
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        let (w, h) = (32, 32);
        let quant = crate::image::QuantTable::new([4; 64]).unwrap();
        let var = VarianceField::new(
            Plane::new(w, h, (0..w * h).map(|_| rng.gen_range(1.0..30.0)).collect()).unwrap(),
        )
        .unwrap();
        let base = crate::fisher::fisher_base(&quant, &var).unwrap();
        let u: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-0.49..0.49)).collect();
        let side = crate::side_info::SideInfo::new(CoefGrid::new(w, h, u).unwrap()).unwrap();
        let field = crate::fisher::fisher_realistic(&base, &side).unwrap();

        let blocks = w * h / 64;
        let actives: Vec<usize> = (0..blocks)
            .map(|b| b * 64 + rng.gen_range(0..64))
            .collect();
        let mut prev_gap = f64::INFINITY;
        for scale in [1e-2, 1e-3, 1e-4] {
            let mut rates = ChangeRates::zeros(w, h).unwrap();
            let mut rr = rand::rngs::StdRng::seed_from_u64(99);
            for &i in &actives {
                rates.plus.data_mut()[i] = scale * rr.gen_range(0.2..1.0);
                rates.minus.data_mut()[i] = scale * rr.gen_range(0.2..1.0);
            }
            let taylor = kl_taylor(&field, &rates).unwrap();
            let m = crate::stego::stego_moments(
                &rates,
                &side,
                &quant,
                &var,
                crate::stego::MeanShift::Zero,
            )
            .unwrap();
            let exact = kl_exact(&var, &m).unwrap();
            let ratio = taylor / exact;
            let gap = (ratio - 1.0).abs();
            assert!(gap < 0.05, "scale {scale}: ratio {ratio}");
            assert!(gap < prev_gap, "ratio must approach 1 as rates shrink");
            prev_gap = gap;
        }
    }
}
