//! File formats: PGM images, the JCOF coefficient container, raw f32 field
//! exports and the JSON report schemas.

pub mod floats;
pub mod jcof;
pub mod pgm;
pub mod report;

pub use floats::{read_f32_planes, sidecar_path, write_f32_planes, FloatSidecar};
pub use jcof::{read_jcof, write_jcof};
pub use pgm::{read_pgm, write_pgm};
pub use report::{AnalysisReport, ChangeCounts, EmbedReport, PdPoint, RatesReport};
