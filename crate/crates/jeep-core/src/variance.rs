//! Per-pixel variance estimation and the cross-block DCT-domain smoothing
//! of the estimates.

use crate::error::{JeepError, Result};
use crate::image::{GrayscaleImage, Plane, VarianceField};
use crate::jpeg::{variance_to_dct, variance_to_spatial};

/// Configuration of the MiPOD-style estimator. The paper delegates the
/// internals to its citations; these defaults are this crate's.
#[derive(Debug, Clone)]
pub struct MipodConfig {
    /// Estimation window side; odd, or 8.
    pub window: usize,
    /// Degree of the 2D cosine polynomial basis (functions with p+q <= degree).
    pub degree: usize,
    /// Side of the Wiener denoiser neighborhood.
    pub wiener: usize,
    /// Lower bound for the variance estimates.
    pub floor: f64,
}

impl Default for MipodConfig {
    fn default() -> Self {
        Self {
            window: 9,
            degree: 2,
            wiener: 2,
            floor: 0.01,
        }
    }
}

/// The 2x2 Wiener residual keeps only part of the noise energy on flat
/// content; the fitted variance is rescaled by this factor so that i.i.d.
/// Gaussian noise of variance v estimates to v on average. Calibrated by
/// Monte Carlo on pure-noise images (see tests).
const RESIDUAL_GAIN: f64 = 0.418;

/// Adaptive (Wiener-style) local denoiser; `size`x`size` neighborhood
/// anchored at the pixel, replicate-clamped at the borders.
fn wiener_denoise(plane: &Plane, size: usize) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let n = (size * size) as f64;
    let mut mean = vec![0.0; w * h];
    let mut var = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            let mut sq = 0.0;
            for dy in 0..size {
                for dx in 0..size {
                    let yy = (y + dy).min(h - 1);
                    let xx = (x + dx).min(w - 1);
                    let v = plane.get(xx, yy);
                    s += v;
                    sq += v * v;
                }
            }
            let m = s / n;
            mean[y * w + x] = m;
            var[y * w + x] = (sq / n - m * m).max(0.0);
        }
    }
    let noise = var.iter().sum::<f64>() / var.len() as f64;
    let mut out = Plane::constant(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let v = var[idx];
            let gain = if v > noise { (v - noise) / v } else { 0.0 };
            out.set(x, y, mean[idx] + gain * (plane.get(x, y) - mean[idx]));
        }
    }
    out
}

/// Solve a small SPD system by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / diag;
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Center-prediction weights of the least-squares fit of a `window`x`window`
/// patch onto the cosine basis {cos(πp(2t+1)/2B)·cos(πq(2s+1)/2B) : p+q <= degree}.
fn fit_kernel(window: usize, degree: usize) -> Vec<f64> {
    let b = window;
    let mut modes = Vec::new();
    for p in 0..=degree {
        for q in 0..=degree {
            if p + q <= degree {
                modes.push((p, q));
            }
        }
    }
    let g1 = |p: usize, t: usize| {
        (std::f64::consts::PI * p as f64 * (2 * t + 1) as f64 / (2.0 * b as f64)).cos()
    };
    let m = modes.len();
    let rows = b * b;
    let mut design = vec![vec![0.0; m]; rows];
    for ti in 0..b {
        for tj in 0..b {
            for (c, &(p, q)) in modes.iter().enumerate() {
                design[ti * b + tj][c] = g1(p, ti) * g1(q, tj);
            }
        }
    }
    // normal equations G^T G x = G^T e_row, solved per output weight via the
    // hat-matrix row at the window center: w = G (G^T G)^{-1} g_center
    let mut gtg = vec![vec![0.0; m]; m];
    for r in 0..rows {
        for i in 0..m {
            for j in 0..m {
                gtg[i][j] += design[r][i] * design[r][j];
            }
        }
    }
    let center = (b / 2) * b + b / 2;
    let coeffs = solve_dense(gtg, design[center].clone());
    (0..rows)
        .map(|r| (0..m).map(|c| design[r][c] * coeffs[c]).sum())
        .collect()
}

/// MiPOD-style per-pixel variance estimate: Wiener residual, squared, fitted
/// per sliding window onto a low-order cosine basis; the center prediction
/// (rescaled by the residual gain) is the estimate, floored at `cfg.floor`.
pub fn estimate_variance_mipod(image: &GrayscaleImage, cfg: &MipodConfig) -> Result<VarianceField> {
    if cfg.window % 2 == 0 && cfg.window != 8 {
        return Err(JeepError::InvalidParameter(format!(
            "estimation window {} must be odd or 8",
            cfg.window
        )));
    }
    if cfg.window < 3 || cfg.degree == 0 || cfg.degree >= cfg.window {
        return Err(JeepError::InvalidParameter(
            "estimator needs window >= 3 and 1 <= degree < window".into(),
        ));
    }
    if cfg.wiener < 2 || !(cfg.floor > 0.0) {
        return Err(JeepError::InvalidParameter(
            "estimator needs wiener >= 2 and floor > 0".into(),
        ));
    }
    let plane = image.to_plane();
    let denoised = wiener_denoise(&plane, cfg.wiener);
    let (w, h) = (plane.width(), plane.height());
    let mut squared = vec![0.0; w * h];
    for i in 0..w * h {
        let r = plane.data()[i] - denoised.data()[i];
        squared[i] = r * r;
    }

    let kernel = fit_kernel(cfg.window, cfg.degree);
    let half = (cfg.window / 2) as isize;
    let b = cfg.window as isize;
    let mut out = Plane::constant(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in 0..b {
                let yy = (y + dy - half).clamp(0, h as isize - 1) as usize;
                for dx in 0..b {
                    let xx = (x + dx - half).clamp(0, w as isize - 1) as usize;
                    acc += kernel[(dy * b + dx) as usize] * squared[yy * w + xx];
                }
            }
            out.set(x as usize, y as usize, (acc / RESIDUAL_GAIN).max(cfg.floor));
        }
    }
    VarianceField::new(out)
}

/// Constant variance for every pixel (the JEEP-C estimator).
pub fn constant_variance(width: usize, height: usize, value: f64) -> Result<VarianceField> {
    VarianceField::constant(width, height, value)
}

/// Cross-block averaging kernel, weights sum to 1.
pub const SMOOTHING_KERNEL: [[f64; 3]; 3] = [
    [1.0 / 20.0, 3.0 / 20.0, 1.0 / 20.0],
    [3.0 / 20.0, 4.0 / 20.0, 3.0 / 20.0],
    [1.0 / 20.0, 3.0 / 20.0, 1.0 / 20.0],
];

/// Floor applied to the smoothed DCT variances.
pub const SMOOTHED_VARIANCE_FLOOR: f64 = 1e-10;

/// Smooth a pixel-variance field through the DCT domain: propagate to DCT
/// variances, average σ⁻⁴ over the nine same-mode neighbors across blocks
/// (replicate edges), lower-bound, and propagate back.
pub fn smooth_variance_dct(var: &VarianceField) -> Result<VarianceField> {
    let dctv = variance_to_dct(var)?;
    let (bxs, bys) = (dctv.blocks_x(), dctv.blocks_y());
    let mut smoothed = dctv.clone();
    for by in 0..bys {
        for bx in 0..bxs {
            for n in 0..64 {
                let mut acc = 0.0;
                for (di, row) in SMOOTHING_KERNEL.iter().enumerate() {
                    for (dj, &w) in row.iter().enumerate() {
                        let ny = clamp_index(by, di, bys);
                        let nx = clamp_index(bx, dj, bxs);
                        let v = dctv.data()[(ny * bxs + nx) * 64 + n];
                        acc += w * v.powi(-2); // σ⁻⁴ of a variance
                    }
                }
                let sm_var = acc.powf(-0.5).max(SMOOTHED_VARIANCE_FLOOR);
                smoothed.data_mut()[(by * bxs + bx) * 64 + n] = sm_var;
            }
        }
    }
    variance_to_spatial(&smoothed)
}

fn clamp_index(base: usize, offset: usize, len: usize) -> usize {
    // offset in {0,1,2} maps to {-1,0,+1}, replicated at the edges
    (base + offset).saturating_sub(1).min(len - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen();
        sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn kernel_reproduces_constants() {
        let k = fit_kernel(9, 2);
        let sum: f64 = k.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10, "kernel sum {sum}");
    }

    #[test]
    fn constant_image_floors() {
        let img = GrayscaleImage::from_fn(32, 32, |_, _| 77);
        let v = estimate_variance_mipod(&img, &MipodConfig::default()).unwrap();
        assert!(v.plane().data().iter().all(|&x| x == 0.01));
    }

    #[test]
    fn iid_noise_estimates_land_in_band() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        let (w, h) = (128, 128);
        let img = GrayscaleImage::from_fn(w, h, |_, _| {
            (128.0 + gaussian(&mut rng, 5.0)).round().clamp(0.0, 255.0) as u8
        });
        let v = estimate_variance_mipod(&img, &MipodConfig::default()).unwrap();
        let mut total = 0usize;
        let mut in_band = 0usize;
        let mut sum = 0.0;
        for y in 8..h - 8 {
            for x in 8..w - 8 {
                let est = v.get(x, y);
                total += 1;
                sum += est;
                if (12.5..=50.0).contains(&est) {
                    in_band += 1;
                }
            }
        }
        let frac = in_band as f64 / total as f64;
        let mean = sum / total as f64;
        assert!(
            frac >= 0.9,
            "only {:.1}% of interior estimates in [12.5, 50], mean {mean:.2}",
            frac * 100.0
        );
        assert!((mean - 25.0).abs() < 5.0, "mean estimate {mean}");
    }

    #[test]
    fn estimates_shift_invariant() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let base: Vec<u8> = (0..64 * 64).map(|_| rng.gen_range(60..150)).collect();
        let img1 = GrayscaleImage::new(64, 64, base.clone()).unwrap();
        let img2 = GrayscaleImage::new(64, 64, base.iter().map(|&v| v + 40).collect()).unwrap();
        let v1 = estimate_variance_mipod(&img1, &MipodConfig::default()).unwrap();
        let v2 = estimate_variance_mipod(&img2, &MipodConfig::default()).unwrap();
        for (a, b) in v1.plane().data().iter().zip(v2.plane().data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_variance_checks_value() {
        assert!(constant_variance(8, 8, 1.0).is_ok());
        assert!(constant_variance(8, 8, 0.0).is_err());
        assert!(constant_variance(8, 8, -2.0).is_err());
    }

    #[test]
    fn smoothing_preserves_constant_fields() {
        let v = VarianceField::constant(32, 32, 4.0).unwrap();
        let s = smooth_variance_dct(&v).unwrap();
        for &x in s.plane().data() {
            assert!((x - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_block_smoothing_degenerates_to_propagation_roundtrip() {
        // with one block all nine neighbors are the block itself, so the
        // averaging step contributes nothing; what remains is the (lossy)
        // diagonal DCT propagation sandwich
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let plane = Plane::new(8, 8, (0..64).map(|_| rng.gen_range(0.5..30.0)).collect()).unwrap();
        let v = VarianceField::new(plane).unwrap();
        let s = smooth_variance_dct(&v).unwrap();
        let roundtrip = variance_to_spatial(&variance_to_dct(&v).unwrap()).unwrap();
        for (a, b) in roundtrip.plane().data().iter().zip(s.plane().data()) {
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn smoothing_is_convex_in_inverse_fourth_power() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let plane = Plane::new(
            32,
            24,
            (0..32 * 24).map(|_| rng.gen_range(0.5..40.0)).collect(),
        )
        .unwrap();
        let v = VarianceField::new(plane).unwrap();
        // the final spatial propagation cannot be inverted, so check the
        // DCT-domain averaging stage directly
        let dctv = variance_to_dct(&v).unwrap();
        let (bxs, bys) = (dctv.blocks_x(), dctv.blocks_y());
        for by in 0..bys {
            for bx in 0..bxs {
                for n in 0..64 {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    let mut acc = 0.0;
                    for di in 0..3 {
                        for dj in 0..3 {
                            let ny = clamp_index(by, di, bys);
                            let nx = clamp_index(bx, dj, bxs);
                            let inv4 = dctv.data()[(ny * bxs + nx) * 64 + n].powi(-2);
                            lo = lo.min(inv4);
                            hi = hi.max(inv4);
                            acc += SMOOTHING_KERNEL[di][dj] * inv4;
                        }
                    }
                    assert!(acc >= lo - 1e-12 && acc <= hi + 1e-12);
                }
            }
        }
    }
}
