//! JEEP: side-informed JPEG steganography driven by a statistical model of
//! the decompressed image.
//!
//! The crate covers the full embedding pipeline — exact 8x8 DCT arithmetic,
//! side-information extraction, pixel-variance estimation with DCT-domain
//! smoothing, per-coefficient Fisher information for a realistic or an
//! omniscient attacker, the KL-divergence-minimizing change-rate solver and
//! a seeded embedding simulator — plus the security analytics (exact and
//! Taylor KL divergence, likelihood-ratio-test statistics, detection
//! probability and the Sanov bound) and a controlled synthetic cover source
//! with known ground-truth variances.

pub mod analysis;
pub mod dct;
pub mod embed;
pub mod error;
pub mod fisher;
pub mod gaussian;
pub mod image;
pub mod io;
pub mod jpeg;
pub mod pipeline;
pub mod rng;
pub mod side_info;
pub mod solver;
pub mod source;
pub mod stego;
pub mod variance;
pub mod wavelet;

pub use error::{JeepError, Result};
pub use image::{
    CoefGrid, DctVarianceField, GrayscaleImage, Plane, QuantTable, QuantizedImage, VarianceField,
};
pub use pipeline::{embed_pipeline, Attacker, Estimator, PipelineConfig, PipelineOutput};
pub use side_info::{extract_side_info, SideInfo, WetMask};
pub use stego::ChangeRates;
