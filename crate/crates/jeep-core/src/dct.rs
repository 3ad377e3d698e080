//! Exact 8x8 two-dimensional DCT built from the explicit cosine basis
//!
//! f_kl^ij = (ω_k ω_l / 4) cos(πk(2i+1)/16) cos(πl(2j+1)/16),  ω_0 = 1/√2.
//!
//! The basis factorizes as f_kl^ij = a_k(i) a_l(j), so every transform here
//! is evaluated as two exact 8x8 matrix products in double precision. No
//! fast-DCT approximations are used: the orthogonality identities the image
//! model relies on hold to ~1e-15.

use std::sync::LazyLock;

use crate::image::{BLOCK, BLOCK_AREA};

/// Pixel level shift applied before the forward transform.
pub const LEVEL_SHIFT: f64 = 128.0;

/// a_k(i) = (ω_k / 2) cos(πk(2i+1)/16).
static COS1: LazyLock<[[f64; BLOCK]; BLOCK]> = LazyLock::new(|| {
    let mut t = [[0.0; BLOCK]; BLOCK];
    for k in 0..BLOCK {
        let w = if k == 0 { 1.0 / 2.0_f64.sqrt() } else { 1.0 };
        for i in 0..BLOCK {
            t[k][i] = w / 2.0
                * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / 16.0).cos();
        }
    }
    t
});

static COS2: LazyLock<[[f64; BLOCK]; BLOCK]> = LazyLock::new(|| {
    let mut t = *COS1;
    for row in t.iter_mut() {
        for v in row.iter_mut() {
            *v *= *v;
        }
    }
    t
});

static COS4: LazyLock<[[f64; BLOCK]; BLOCK]> = LazyLock::new(|| {
    let mut t = *COS2;
    for row in t.iter_mut() {
        for v in row.iter_mut() {
            *v *= *v;
        }
    }
    t
});

/// The 2D-DCT basis f_kl^ij.
pub fn basis(k: usize, l: usize, i: usize, j: usize) -> f64 {
    COS1[k][i] * COS1[l][j]
}

/// out[k][l] = Σ_ij t[k][i] t[l][j] v[i][j] for an 8x8 table t.
fn mode_sums(values: &[f64; BLOCK_AREA], t: &[[f64; BLOCK]; BLOCK]) -> [f64; BLOCK_AREA] {
    let mut tmp = [0.0; BLOCK_AREA]; // tmp[k][j] = Σ_i t[k][i] v[i][j]
    for k in 0..BLOCK {
        for j in 0..BLOCK {
            let mut s = 0.0;
            for i in 0..BLOCK {
                s += t[k][i] * values[i * BLOCK + j];
            }
            tmp[k * BLOCK + j] = s;
        }
    }
    let mut out = [0.0; BLOCK_AREA];
    for k in 0..BLOCK {
        for l in 0..BLOCK {
            let mut s = 0.0;
            for j in 0..BLOCK {
                s += t[l][j] * tmp[k * BLOCK + j];
            }
            out[k * BLOCK + l] = s;
        }
    }
    out
}

/// out[i][j] = Σ_kl t[k][i] t[l][j] v[k][l]; transpose direction of `mode_sums`.
fn pixel_sums(values: &[f64; BLOCK_AREA], t: &[[f64; BLOCK]; BLOCK]) -> [f64; BLOCK_AREA] {
    let mut tmp = [0.0; BLOCK_AREA]; // tmp[i][l] = Σ_k t[k][i] v[k][l]
    for i in 0..BLOCK {
        for l in 0..BLOCK {
            let mut s = 0.0;
            for k in 0..BLOCK {
                s += t[k][i] * values[k * BLOCK + l];
            }
            tmp[i * BLOCK + l] = s;
        }
    }
    let mut out = [0.0; BLOCK_AREA];
    for i in 0..BLOCK {
        for j in 0..BLOCK {
            let mut s = 0.0;
            for l in 0..BLOCK {
                s += t[l][j] * tmp[i * BLOCK + l];
            }
            out[i * BLOCK + j] = s;
        }
    }
    out
}

/// d = D x without any level shift.
pub fn forward_raw(block: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    mode_sums(block, &COS1)
}

/// x = D^T d without any level shift.
pub fn inverse_raw(coeffs: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    pixel_sums(coeffs, &COS1)
}

/// Forward DCT of a pixel block, with the -128 level shift applied first.
pub fn forward(block: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    let mut shifted = *block;
    for v in shifted.iter_mut() {
        *v -= LEVEL_SHIFT;
    }
    forward_raw(&shifted)
}

/// Inverse DCT returning pixel values, with the +128 level shift restored.
pub fn inverse(coeffs: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    let mut out = inverse_raw(coeffs);
    for v in out.iter_mut() {
        *v += LEVEL_SHIFT;
    }
    out
}

/// σ²_kl = Σ_ij (f_kl^ij)² σ²_ij — diagonal of D Σ D^T.
pub fn variance_forward(var: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    mode_sums(var, &COS2)
}

/// σ²_ij = Σ_kl (f_kl^ij)² σ²_kl — diagonal of D^T Σ D.
pub fn variance_inverse(var: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    pixel_sums(var, &COS2)
}

/// Σ_ij (f_kl^ij)⁴ w_ij per mode; used by the Fisher information sums.
pub fn quartic_mode_sums(weights: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    mode_sums(weights, &COS4)
}

/// Σ_ij (f_kl^ij)² w_ij per mode.
pub fn quadratic_mode_sums(weights: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    mode_sums(weights, &COS2)
}

/// Σ_kl (f_kl^ij)² w_kl per pixel.
pub fn quadratic_pixel_sums(weights: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    pixel_sums(weights, &COS2)
}

/// The full 64x64 transform matrix D, rows indexed by k*8+l, columns by i*8+j.
pub fn matrix() -> Vec<[f64; BLOCK_AREA]> {
    let mut d = vec![[0.0; BLOCK_AREA]; BLOCK_AREA];
    for k in 0..BLOCK {
        for l in 0..BLOCK {
            for i in 0..BLOCK {
                for j in 0..BLOCK {
                    d[k * BLOCK + l][i * BLOCK + j] = basis(k, l, i, j);
                }
            }
        }
    }
    d
}
