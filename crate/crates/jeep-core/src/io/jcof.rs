//! JCOF: the quantized-coefficient container.
//!
//! Layout, all little-endian:
//!   magic "JCOF" | version u16 = 1 | width u32 | height u32 (pixels)
//!   | 64 x u16 quantization steps (k-major)
//!   | width*height x i16 coefficients (blocks row-major, k-major inside).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{JeepError, Result};
use crate::image::{CoefGrid, QuantTable, QuantizedImage, BLOCK, BLOCK_AREA};

const MAGIC: &[u8; 4] = b"JCOF";
const VERSION: u16 = 1;

pub fn write_jcof(path: &Path, image: &QuantizedImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(image.width() as u32).to_le_bytes())?;
    w.write_all(&(image.height() as u32).to_le_bytes())?;
    for &q in image.quant().steps() {
        w.write_all(&q.to_le_bytes())?;
    }
    for &c in image.coeffs().data() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jcof(path: &Path) -> Result<QuantizedImage> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let header = 4 + 2 + 4 + 4 + 2 * BLOCK_AREA;
    if bytes.len() < header {
        return Err(JeepError::Format("JCOF header truncated".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(JeepError::Format("not a JCOF file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(JeepError::Format(format!(
            "unsupported JCOF version {version} (expected {VERSION})"
        )));
    }
    let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    if width == 0 || height == 0 || width % BLOCK != 0 || height % BLOCK != 0 {
        return Err(JeepError::Format(format!(
            "JCOF dimensions {width}x{height} must be positive multiples of 8"
        )));
    }
    let mut steps = [0u16; BLOCK_AREA];
    for (i, s) in steps.iter_mut().enumerate() {
        let off = 14 + 2 * i;
        *s = u16::from_le_bytes([bytes[off], bytes[off + 1]]);
    }
    let count = width * height;
    if bytes.len() != header + 2 * count {
        return Err(JeepError::Format(format!(
            "JCOF payload has {} bytes, expected {}",
            bytes.len() - header,
            2 * count
        )));
    }
    let mut coeffs = Vec::with_capacity(count);
    for i in 0..count {
        let off = header + 2 * i;
        coeffs.push(i16::from_le_bytes([bytes[off], bytes[off + 1]]));
    }
    QuantizedImage::new(
        CoefGrid::new(width, height, coeffs)?,
        QuantTable::new(steps)?,
    )
}
