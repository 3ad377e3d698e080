//! Binary (P5) 8-bit PGM reader/writer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{JeepError, Result};
use crate::image::GrayscaleImage;

fn read_header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    // skip whitespace and '#' comments
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(JeepError::Format("truncated PGM header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn read_pgm(path: &Path) -> Result<GrayscaleImage> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 2 {
        return Err(JeepError::Format("file too short for a PGM header".into()));
    }
    let magic = &bytes[..2];
    if magic == b"P2" {
        return Err(JeepError::Format(
            "ASCII (P2) PGM is not supported; use binary P5".into(),
        ));
    }
    if magic != b"P5" {
        return Err(JeepError::Format(format!(
            "not a P5 PGM (magic {:?})",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let width: usize = read_header_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| JeepError::Format("bad width".into()))?;
    let height: usize = read_header_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| JeepError::Format("bad height".into()))?;
    let maxval: u32 = read_header_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| JeepError::Format("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(JeepError::Format(format!(
            "maxval {maxval}: only 8-bit PGM is supported"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| JeepError::Format("image dimensions overflow".into()))?;
    if bytes.len() < pos + expected {
        return Err(JeepError::Format(format!(
            "raster truncated: need {expected} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    GrayscaleImage::new(width, height, bytes[pos..pos + expected].to_vec())
}

pub fn write_pgm(path: &Path, image: &GrayscaleImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", image.width(), image.height())?;
    w.write_all(image.samples())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_byte_identical() {
        let dir = std::env::temp_dir().join("jeep_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.pgm");
        let img = GrayscaleImage::from_fn(24, 16, |x, y| (x * 11 + y * 7) as u8);
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(img, back);
        // and the file itself roundtrips
        let bytes = std::fs::read(&path).unwrap();
        write_pgm(&path, &back).unwrap();
        assert_eq!(bytes, std::fs::read(&path).unwrap());
    }

    #[test]
    fn rejects_ascii_and_garbage() {
        let dir = std::env::temp_dir().join("jeep_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let p2 = dir.join("ascii.pgm");
        std::fs::write(&p2, b"P2\n2 2\n255\n0 1 2 3\n").unwrap();
        assert!(matches!(read_pgm(&p2), Err(JeepError::Format(m)) if m.contains("P2")));

        let junk = dir.join("junk.pgm");
        std::fs::write(&junk, b"hello world").unwrap();
        assert!(read_pgm(&junk).is_err());

        let deep = dir.join("deep.pgm");
        std::fs::write(&deep, b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_pgm(&deep), Err(JeepError::Format(m)) if m.contains("8-bit")));
    }

    #[test]
    fn header_comments_skipped() {
        let dir = std::env::temp_dir().join("jeep_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("comments.pgm");
        let mut bytes = b"P5\n# made by a test\n4 2\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8]);
        std::fs::write(&path, bytes).unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!((img.width(), img.height()), (4, 2));
        assert_eq!(img.samples(), &[1, 2, 3, 4, 5, 6, 7, 8]);
    }
}
