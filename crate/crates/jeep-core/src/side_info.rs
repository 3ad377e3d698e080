//! Side information: DCT rounding errors extracted from the precover, plus
//! the wet-coefficient masks (rational modes, range saturation).

use crate::dct;
use crate::error::{JeepError, Result};
use crate::image::{
    CoefGrid, GrayscaleImage, QuantTable, QuantizedImage, BLOCK_AREA, COEF_MAX, COEF_MIN,
    RATIONAL_MODES,
};
use crate::jpeg::round_half_away;

/// Per-coefficient rounding errors u_kl in [-1/2, 1/2], defined so that
/// c_kl + u_kl = d_kl / q_kl exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    grid: CoefGrid<f64>,
}

impl SideInfo {
    pub fn new(grid: CoefGrid<f64>) -> Result<Self> {
        if let Some(u) = grid.data().iter().find(|u| !(u.abs() <= 0.5)) {
            return Err(JeepError::InvalidParameter(format!(
                "rounding error {u} outside [-1/2, 1/2]"
            )));
        }
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &CoefGrid<f64> {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        self.grid.data()
    }
}

/// Per-direction wet flags; `true` means that change is forbidden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WetMask {
    pub plus: CoefGrid<bool>,
    pub minus: CoefGrid<bool>,
}

impl WetMask {
    pub fn all_dry(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            plus: CoefGrid::filled(width, height, false)?,
            minus: CoefGrid::filled(width, height, false)?,
        })
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// Both directions blocked.
    pub fn fully_wet(&self, i: usize) -> bool {
        self.plus.data()[i] && self.minus.data()[i]
    }

    /// Union of two masks over the same geometry.
    pub fn union(&self, other: &WetMask) -> Result<WetMask> {
        self.plus.same_geometry(&other.plus)?;
        let or = |a: &CoefGrid<bool>, b: &CoefGrid<bool>| {
            CoefGrid::new(
                a.width(),
                a.height(),
                a.data()
                    .iter()
                    .zip(b.data())
                    .map(|(&x, &y)| x || y)
                    .collect(),
            )
        };
        Ok(WetMask {
            plus: or(&self.plus, &other.plus)?,
            minus: or(&self.minus, &other.minus)?,
        })
    }

    pub fn count_fully_wet(&self) -> usize {
        (0..self.len()).filter(|&i| self.fully_wet(i)).count()
    }
}

/// Compress with nearest rounding and keep the rounding errors
/// u_kl = d_kl/q_kl - c_kl.
pub fn extract_side_info(
    image: &GrayscaleImage,
    quant: &QuantTable,
) -> Result<(QuantizedImage, SideInfo)> {
    image.require_block_aligned()?;
    let (bx_count, by_count) = (image.blocks_x(), image.blocks_y());
    let n = image.width() * image.height();
    let mut coeffs = vec![0i16; n];
    let mut errors = vec![0.0f64; n];
    for by in 0..by_count {
        for bx in 0..bx_count {
            let d = dct::forward(&image.block(bx, by));
            let base = (by * bx_count + bx) * BLOCK_AREA;
            for (n_in_block, &dkl) in d.iter().enumerate() {
                let scaled = dkl / f64::from(quant.steps()[n_in_block]);
                let c = round_half_away(scaled);
                coeffs[base + n_in_block] = c as i16;
                errors[base + n_in_block] = scaled - c;
            }
        }
    }
    let quantized = QuantizedImage::new(
        CoefGrid::new(image.width(), image.height(), coeffs)?,
        quant.clone(),
    )?;
    let side = SideInfo::new(CoefGrid::new(image.width(), image.height(), errors)?)?;
    Ok((quantized, side))
}

/// Mark the rational modes (0,0),(0,4),(4,0),(4,4) wet (both directions)
/// wherever |u| >= threshold. Other modes are never touched.
pub fn rational_mode_mask(side: &SideInfo, threshold: f64) -> Result<WetMask> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(JeepError::InvalidParameter(format!(
            "rational-mode threshold {threshold} outside (0, 1/2)"
        )));
    }
    let grid = side.grid();
    let mut mask = WetMask::all_dry(grid.width(), grid.height())?;
    for block in 0..grid.block_count() {
        for &(k, l) in RATIONAL_MODES.iter() {
            if grid.at(block, k, l).abs() >= threshold {
                mask.plus.set(block, k, l, true);
                mask.minus.set(block, k, l, true);
            }
        }
    }
    Ok(mask)
}

/// Block the +1 direction at c = 1020 and the -1 direction at c = -1024,
/// so embedding can never leave the coefficient range.
pub fn saturation_mask(q: &QuantizedImage) -> WetMask {
    let grid = q.coeffs();
    let mut mask = WetMask::all_dry(grid.width(), grid.height()).expect("valid geometry");
    for (i, &c) in grid.data().iter().enumerate() {
        if i32::from(c) >= COEF_MAX {
            mask.plus.data_mut()[i] = true;
        }
        if i32::from(c) <= COEF_MIN {
            mask.minus.data_mut()[i] = true;
        }
    }
    mask
}
