//! Separable Daubechies 8-tap wavelet transform with periodic extension,
//! used by the controlled-source denoiser.

use crate::error::{JeepError, Result};
use crate::image::Plane;

/// Daubechies 8-tap scaling filter, full f64 precision from the spectral
/// factorization (orthonormal: Σh = √2, Σh² = 1).
const DB8: [f64; 8] = [
    0.2303778133088965009,
    0.7148465705529156471,
    0.6308807679298589079,
    -0.02798376941685985421,
    -0.1870348117190930841,
    0.03084138183556076363,
    0.03288301166688519974,
    -0.01059740178506903210,
];

fn highpass(n: usize) -> f64 {
    let h = DB8[DB8.len() - 1 - n];
    if n % 2 == 0 {
        h
    } else {
        -h
    }
}

/// One periodic analysis step: x (len n, even) -> (approx, detail) of len n/2.
fn analyze(x: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    for k in 0..n / 2 {
        let mut a = 0.0;
        let mut d = 0.0;
        for (t, &h) in DB8.iter().enumerate() {
            let idx = (2 * k + t) % n;
            a += h * x[idx];
            d += highpass(t) * x[idx];
        }
        approx[k] = a;
        detail[k] = d;
    }
}

/// Inverse of `analyze`.
fn synthesize(approx: &[f64], detail: &[f64], x: &mut [f64]) {
    let n = x.len();
    x.fill(0.0);
    for k in 0..n / 2 {
        for (t, &h) in DB8.iter().enumerate() {
            let idx = (2 * k + t) % n;
            x[idx] += h * approx[k] + highpass(t) * detail[k];
        }
    }
}

fn transform_rows(data: &mut [f64], width: usize, active_w: usize, active_h: usize, inverse: bool) {
    let mut row = vec![0.0; active_w];
    let mut a = vec![0.0; active_w / 2];
    let mut d = vec![0.0; active_w / 2];
    for y in 0..active_h {
        let base = y * width;
        if inverse {
            a.copy_from_slice(&data[base..base + active_w / 2]);
            d.copy_from_slice(&data[base + active_w / 2..base + active_w]);
            synthesize(&a, &d, &mut row);
            data[base..base + active_w].copy_from_slice(&row);
        } else {
            row.copy_from_slice(&data[base..base + active_w]);
            analyze(&row, &mut a, &mut d);
            data[base..base + active_w / 2].copy_from_slice(&a);
            data[base + active_w / 2..base + active_w].copy_from_slice(&d);
        }
    }
}

fn transform_cols(data: &mut [f64], width: usize, active_w: usize, active_h: usize, inverse: bool) {
    let mut col = vec![0.0; active_h];
    let mut a = vec![0.0; active_h / 2];
    let mut d = vec![0.0; active_h / 2];
    for x in 0..active_w {
        if inverse {
            for k in 0..active_h / 2 {
                a[k] = data[k * width + x];
                d[k] = data[(active_h / 2 + k) * width + x];
            }
            synthesize(&a, &d, &mut col);
            for (y, &v) in col.iter().enumerate() {
                data[y * width + x] = v;
            }
        } else {
            for (y, c) in col.iter_mut().enumerate() {
                *c = data[y * width + x];
            }
            analyze(&col, &mut a, &mut d);
            for k in 0..active_h / 2 {
                data[k * width + x] = a[k];
                data[(active_h / 2 + k) * width + x] = d[k];
            }
        }
    }
}

/// Multi-level 2D DWT in place (approx quadrant recursed). Returns an error
/// if any active dimension is odd before `levels` splits.
pub fn forward_2d(plane: &Plane, levels: usize) -> Result<Plane> {
    let (w, h) = (plane.width(), plane.height());
    let (mut aw, mut ah) = (w, h);
    for _ in 0..levels {
        if aw % 2 != 0 || ah % 2 != 0 || aw < 2 || ah < 2 {
            return Err(JeepError::DimensionMismatch(format!(
                "{w}x{h} image does not support {levels} wavelet levels"
            )));
        }
        aw /= 2;
        ah /= 2;
    }
    let mut out = plane.clone();
    let (mut aw, mut ah) = (w, h);
    for _ in 0..levels {
        transform_rows(out.data_mut(), w, aw, ah, false);
        transform_cols(out.data_mut(), w, aw, ah, false);
        aw /= 2;
        ah /= 2;
    }
    Ok(out)
}

/// Inverse of [`forward_2d`].
pub fn inverse_2d(plane: &Plane, levels: usize) -> Result<Plane> {
    let (w, h) = (plane.width(), plane.height());
    let mut dims = vec![(w, h)];
    let (mut aw, mut ah) = (w, h);
    for _ in 0..levels {
        if aw % 2 != 0 || ah % 2 != 0 || aw < 2 || ah < 2 {
            return Err(JeepError::DimensionMismatch(format!(
                "{w}x{h} image does not support {levels} wavelet levels"
            )));
        }
        aw /= 2;
        ah /= 2;
        dims.push((aw, ah));
    }
    let mut out = plane.clone();
    for level in (0..levels).rev() {
        let (lw, lh) = dims[level];
        transform_cols(out.data_mut(), w, lw, lh, true);
        transform_rows(out.data_mut(), w, lw, lh, true);
    }
    Ok(out)
}

/// Wavelet denoiser: soft-threshold every detail coefficient at
/// `3 * sigma_den` over `levels` scales, then clip to [0, 255].
pub fn denoise(plane: &Plane, sigma_den: f64, levels: usize) -> Result<Plane> {
    let mut coeffs = forward_2d(plane, levels)?;
    let threshold = 3.0 * sigma_den;
    let (w, h) = (plane.width(), plane.height());
    let (ll_w, ll_h) = (w >> levels, h >> levels);
    for y in 0..h {
        for x in 0..w {
            if x < ll_w && y < ll_h {
                continue; // keep the coarsest approximation
            }
            let v = coeffs.get(x, y);
            let shrunk = v.signum() * (v.abs() - threshold).max(0.0);
            coeffs.set(x, y, shrunk);
        }
    }
    let mut out = inverse_2d(&coeffs, levels)?;
    for v in out.data_mut() {
        *v = v.clamp(0.0, 255.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr_like::normal;

    // Tiny inline helper: Box-Muller from the test RNG.
    mod rand_distr_like {
        use rand::Rng;
        pub fn normal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen();
            sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        }
    }

    #[test]
    fn filter_is_orthonormal() {
        let sum: f64 = DB8.iter().sum();
        let norm: f64 = DB8.iter().map(|h| h * h).sum();
        assert!((sum - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((norm - 1.0).abs() < 1e-12);
        // double-shift orthogonality
        for m in 1..4 {
            let dot: f64 = (0..8 - 2 * m).map(|n| DB8[n] * DB8[n + 2 * m]).sum();
            assert!(dot.abs() < 1e-12, "shift {m}: {dot}");
        }
    }

    #[test]
    fn perfect_reconstruction() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let plane = Plane::new(
            32,
            24,
            (0..32 * 24).map(|_| rng.gen_range(0.0..255.0)).collect(),
        )
        .unwrap();
        let coeffs = forward_2d(&plane, 3).unwrap();
        let back = inverse_2d(&coeffs, 3).unwrap();
        for (a, b) in plane.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        // energy preserved by the orthonormal transform
        let e0: f64 = plane.data().iter().map(|v| v * v).sum();
        let e1: f64 = coeffs.data().iter().map(|v| v * v).sum();
        assert!((e0 - e1).abs() < 1e-6 * e0);
    }

    #[test]
    fn denoising_reduces_noise_on_smooth_content() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        let w = 64;
        let h = 64;
        let clean: Vec<f64> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                128.0 + 40.0 * ((x as f64) / 17.0).sin() * ((y as f64) / 23.0).cos()
            })
            .collect();
        let noisy: Vec<f64> = clean
            .iter()
            .map(|&v| (v + normal(&mut rng, 10.0)).clamp(0.0, 255.0))
            .collect();
        let denoised = denoise(&Plane::new(w, h, noisy.clone()).unwrap(), 10.0, 3).unwrap();
        let mse = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / a.len() as f64
        };
        let before = mse(&noisy, &clean);
        let after = mse(denoised.data(), &clean);
        assert!(
            after < before / 2.0,
            "denoiser should cut MSE at least in half: {before} -> {after}"
        );
    }
}
