//! Image, plane and per-coefficient grid types shared by the whole pipeline.
//!
//! Two memory layouts are used throughout the crate:
//!
//! * pixel domain — row-major, `index = y * width + x`;
//! * DCT domain — block-major: blocks ordered row-major, the 64 coefficients
//!   of a block ordered `k * 8 + l` where `k` is the vertical and `l` the
//!   horizontal frequency. `index = (by * blocks_x + bx) * 64 + k * 8 + l`.
//!
//! Both layouts hold exactly `width * height` elements for a block-aligned
//! image, so per-pixel and per-coefficient fields share their geometry.

use crate::error::{JeepError, Result};

pub const BLOCK: usize = 8;
pub const BLOCK_AREA: usize = 64;

/// Valid range of quantized DCT coefficients.
pub const COEF_MIN: i32 = -1024;
pub const COEF_MAX: i32 = 1020;

/// DCT modes whose rounding errors are always multiples of 1/8.
pub const RATIONAL_MODES: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 4)];

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(JeepError::InvalidParameter(
            "image dimensions must be positive".into(),
        ));
    }
    if width * height != len {
        return Err(JeepError::DimensionMismatch(format!(
            "{}x{} image needs {} samples, got {}",
            width,
            height,
            width * height,
            len
        )));
    }
    Ok(())
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayscaleImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayscaleImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_dims(width, height, samples.len())?;
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Errors unless both dimensions are multiples of 8; block-based
    /// operations require it.
    pub fn require_block_aligned(&self) -> Result<()> {
        if self.width % BLOCK != 0 || self.height % BLOCK != 0 {
            return Err(JeepError::DimensionMismatch(format!(
                "{}x{} image: dimensions must be multiples of 8",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn blocks_x(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_y(&self) -> usize {
        self.height / BLOCK
    }

    /// Pixels of block (bx, by) as f64, row-major inside the block.
    pub fn block(&self, bx: usize, by: usize) -> [f64; BLOCK_AREA] {
        let mut out = [0.0; BLOCK_AREA];
        for i in 0..BLOCK {
            let row = (by * BLOCK + i) * self.width + bx * BLOCK;
            for j in 0..BLOCK {
                out[i * BLOCK + j] = f64::from(self.samples[row + j]);
            }
        }
        out
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.samples.iter().map(|&s| f64::from(s)).collect(),
        }
    }
}

/// Real-valued pixel plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn blocks_x(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_y(&self) -> usize {
        self.height / BLOCK
    }

    pub fn block(&self, bx: usize, by: usize) -> [f64; BLOCK_AREA] {
        let mut out = [0.0; BLOCK_AREA];
        for i in 0..BLOCK {
            let row = (by * BLOCK + i) * self.width + bx * BLOCK;
            out[i * BLOCK..(i + 1) * BLOCK].copy_from_slice(&self.data[row..row + BLOCK]);
        }
        out
    }

    pub fn set_block(&mut self, bx: usize, by: usize, block: &[f64; BLOCK_AREA]) {
        for i in 0..BLOCK {
            let row = (by * BLOCK + i) * self.width + bx * BLOCK;
            self.data[row..row + BLOCK].copy_from_slice(&block[i * BLOCK..(i + 1) * BLOCK]);
        }
    }

    /// Round and clip to [0, 255]; a finishing step for viewing only.
    pub fn to_grayscale(&self) -> GrayscaleImage {
        GrayscaleImage {
            width: self.width,
            height: self.height,
            samples: self
                .data
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

/// Per-pixel variances; strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceField {
    plane: Plane,
}

impl VarianceField {
    pub fn new(plane: Plane) -> Result<Self> {
        if let Some(v) = plane.data().iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(JeepError::InvalidParameter(format!(
                "variance field entries must be positive and finite, found {v}"
            )));
        }
        Ok(Self { plane })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(JeepError::InvalidParameter(format!(
                "constant variance must be positive and finite, got {value}"
            )));
        }
        Ok(Self {
            plane: Plane::constant(width, height, value),
        })
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.plane.get(x, y)
    }
}

/// Per-coefficient grid in the block-major layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefGrid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> CoefGrid<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width % BLOCK != 0 || height % BLOCK != 0 {
            return Err(JeepError::DimensionMismatch(format!(
                "{width}x{height}: coefficient grids need block-aligned dimensions"
            )));
        }
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn blocks_x(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_y(&self) -> usize {
        self.height / BLOCK
    }

    pub fn block_count(&self) -> usize {
        self.blocks_x() * self.blocks_y()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn index(&self, block: usize, k: usize, l: usize) -> usize {
        block * BLOCK_AREA + k * BLOCK + l
    }

    pub fn at(&self, block: usize, k: usize, l: usize) -> T {
        self.data[self.index(block, k, l)]
    }

    pub fn set(&mut self, block: usize, k: usize, l: usize, v: T) {
        let i = self.index(block, k, l);
        self.data[i] = v;
    }

    pub fn block_slice(&self, block: usize) -> &[T] {
        &self.data[block * BLOCK_AREA..(block + 1) * BLOCK_AREA]
    }

    pub fn block_slice_mut(&mut self, block: usize) -> &mut [T] {
        &mut self.data[block * BLOCK_AREA..(block + 1) * BLOCK_AREA]
    }

    pub fn same_geometry<U: Copy + Default>(&self, other: &CoefGrid<U>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(JeepError::DimensionMismatch(format!(
                "coefficient grids {}x{} vs {}x{}",
                self.width, other.width, self.height, other.height
            )));
        }
        Ok(())
    }
}

/// Mode (k, l) of a linear coefficient index.
pub fn mode_of(index: usize) -> (usize, usize) {
    let within = index % BLOCK_AREA;
    (within / BLOCK, within % BLOCK)
}

/// Per-coefficient variances σ²_kl.
pub type DctVarianceField = CoefGrid<f64>;

/// 8x8 table of quantization steps, natural (row-major) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTable {
    steps: [u16; BLOCK_AREA],
}

impl QuantTable {
    pub fn new(steps: [u16; BLOCK_AREA]) -> Result<Self> {
        if steps.iter().any(|&q| q == 0) {
            return Err(JeepError::InvalidParameter(
                "quantization steps must be >= 1".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[u16; BLOCK_AREA] {
        &self.steps
    }

    pub fn step(&self, k: usize, l: usize) -> u16 {
        self.steps[k * BLOCK + l]
    }

    pub fn q(&self, k: usize, l: usize) -> f64 {
        f64::from(self.steps[k * BLOCK + l])
    }
}

/// Quantized DCT coefficients of a whole image plus its quantization table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    coeffs: CoefGrid<i16>,
    quant: QuantTable,
}

impl QuantizedImage {
    pub fn new(coeffs: CoefGrid<i16>, quant: QuantTable) -> Result<Self> {
        for (i, &c) in coeffs.data().iter().enumerate() {
            let c = i32::from(c);
            if !(COEF_MIN..=COEF_MAX).contains(&c) {
                let (k, l) = mode_of(i);
                return Err(JeepError::CoefficientRange {
                    value: c,
                    block: i / BLOCK_AREA,
                    k,
                    l,
                });
            }
        }
        Ok(Self { coeffs, quant })
    }

    pub fn coeffs(&self) -> &CoefGrid<i16> {
        &self.coeffs
    }

    pub fn quant(&self) -> &QuantTable {
        &self.quant
    }

    pub fn width(&self) -> usize {
        self.coeffs.width()
    }

    pub fn height(&self) -> usize {
        self.coeffs.height()
    }

    pub fn blocks_x(&self) -> usize {
        self.coeffs.blocks_x()
    }

    pub fn blocks_y(&self) -> usize {
        self.coeffs.blocks_y()
    }

    pub fn block_count(&self) -> usize {
        self.coeffs.block_count()
    }

    /// Count of non-zero AC coefficients (every mode except (0,0)).
    pub fn nonzero_ac(&self) -> usize {
        self.coeffs
            .data()
            .iter()
            .enumerate()
            .filter(|(i, &c)| i % BLOCK_AREA != 0 && c != 0)
            .count()
    }
}
