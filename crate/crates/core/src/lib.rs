//! k-means signal quantization viewed both as a crisp and as a fuzzy
//! membership assignment, and a circular fuzzy iris segmentation pipeline
//! built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! 1. [`quantizer`] – 1-D Lloyd k-means with a sorted-data fast path.
//! 2. [`indicators`] – combined crisp indicator (CCI), combined fuzzy
//!    indicator (CFI) and fuzzy boundary indicator (FIB) over a quantization.
//! 3. [`raster`] – 8-bit grayscale rasters, PGM/PNG I/O and overlays.
//! 4. [`polar`] – lossless pixel-to-pixel polar unwrapping, row stretching
//!    and exact trace-back.
//! 5. [`pupil`] – dark-cluster binarization + run-length connected components.
//! 6. [`cfis`] – radial profiles, three 3-means quantizations, 2-of-3 voting
//!    and the limbic boundary line.
//! 7. [`synth`] – synthetic eyes with exact ground truth.
//! 8. [`batch`] – data-parallel batch segmentation with summary statistics.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

pub mod batch;
pub mod cfis;
pub mod indicators;
pub mod par;
pub mod polar;
pub mod pupil;
pub mod quantizer;
pub mod raster;
pub mod synth;

pub use cfis::{segment, CfisConfig, SegmentError, SegmentationResult};
pub use indicators::{CombinedIndicators, TripletReport};
pub use par::Parallelism;
pub use polar::{PolarMap, RectUnwrapped, UnwrappedImage};
pub use pupil::{find_pupil, PupilCircle, PupilOptions};
pub use quantizer::{kmeans_quantize, Quantization, QuantizeOptions, Signal};
pub use raster::{GrayImage, RgbImage};
pub use synth::{generate_eye, SynthEyeSpec};
