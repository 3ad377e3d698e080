//! Raw little-endian f32 arrays with a JSON sidecar describing geometry and
//! semantics, for variance fields and cost maps consumed by external tools.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{JeepError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FloatSidecar {
    pub width: usize,
    pub height: usize,
    /// Number of stacked planes in the file.
    pub planes: usize,
    /// What the values mean, e.g. "pixel_variance" or "costs_plus_minus".
    pub semantics: String,
    pub dtype: String,
}

pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut os = data_path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

/// Write `planes` stacked width*height f32 planes plus the sidecar.
pub fn write_f32_planes(
    path: &Path,
    width: usize,
    height: usize,
    planes: &[&[f64]],
    semantics: &str,
) -> Result<()> {
    for plane in planes {
        if plane.len() != width * height {
            return Err(JeepError::DimensionMismatch(format!(
                "plane has {} values, geometry wants {}",
                plane.len(),
                width * height
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    for plane in planes {
        for &v in plane.iter() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    let sidecar = FloatSidecar {
        width,
        height,
        planes: planes.len(),
        semantics: semantics.to_owned(),
        dtype: "f32le".into(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| JeepError::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Read the planes back; geometry comes from the sidecar.
pub fn read_f32_planes(path: &Path) -> Result<(FloatSidecar, Vec<Vec<f64>>)> {
    let sidecar_file = sidecar_path(path);
    let json = std::fs::read_to_string(&sidecar_file).map_err(|e| {
        JeepError::Format(format!(
            "missing sidecar {}: {e}",
            sidecar_file.display()
        ))
    })?;
    let sidecar: FloatSidecar =
        serde_json::from_str(&json).map_err(|e| JeepError::Format(e.to_string()))?;
    if sidecar.dtype != "f32le" {
        return Err(JeepError::Format(format!(
            "unsupported dtype {}",
            sidecar.dtype
        )));
    }
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let per_plane = sidecar.width * sidecar.height;
    let expected = 4 * per_plane * sidecar.planes;
    if bytes.len() != expected {
        return Err(JeepError::Format(format!(
            "float payload has {} bytes, sidecar promises {}",
            bytes.len(),
            expected
        )));
    }
    let mut planes = Vec::with_capacity(sidecar.planes);
    for p in 0..sidecar.planes {
        let mut plane = Vec::with_capacity(per_plane);
        for i in 0..per_plane {
            let off = 4 * (p * per_plane + i);
            plane.push(f64::from(f32::from_le_bytes(
                bytes[off..off + 4].try_into().unwrap(),
            )));
        }
        planes.push(plane);
    }
    Ok((sidecar, planes))
}
