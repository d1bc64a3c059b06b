//! Lossless pixel-to-pixel polar unwrapping of a disc, row stretching to a
//! rectangle, and exact trace-back from unwrapped positions to source pixels.
//!
//! Ring `r` (`1..=R`) holds `n_r = max(1, round(2πr))` samples taken at
//! angles `2πt / n_r` by rounding each axis independently, so each ring pixel
//! is visited about once. Rings are stored left-aligned; the unwrapped image
//! is `R × n_R` with zero padding to the right of every shorter ring.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolarError {
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("disc of radius {radius} at ({cx}, {cy}) does not fit in {width}x{height}")]
    DiscOutOfBounds {
        cx: usize,
        cy: usize,
        radius: usize,
        width: usize,
        height: usize,
    },
    #[error("map built for {expected:?}, image is {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("({ring}, {column}) is not a transcribed position")]
    InvalidPosition { ring: usize, column: usize },
    #[error("row {0} has no valid pixels")]
    EmptyRow(usize),
    #[error("output width must be at least 2, got {0}")]
    OutputTooNarrow(usize),
}

/// Samples on ring `r`.
pub fn ring_len(r: usize) -> usize {
    ((TAU * r as f64).round() as usize).max(1)
}

/// Largest radius of a disc centred at `center` that stays inside `dims`.
pub fn max_fitting_radius(center: (usize, usize), dims: (usize, usize)) -> usize {
    let (cx, cy) = center;
    let (w, h) = dims;
    if cx >= w || cy >= h {
        return 0;
    }
    cx.min(cy).min(w - 1 - cx).min(h - 1 - cy)
}

/// Precomputed unwrap lookup. Depends only on centre, radius and image
/// dimensions, so it can be shared by every image with that geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarMap {
    center: (usize, usize),
    radius: usize,
    dims: (usize, usize),
    /// `offsets[r - 1]..offsets[r]` indexes ring `r` in `coords`.
    offsets: Vec<usize>,
    coords: Vec<(u32, u32)>,
}

impl PolarMap {
    pub fn build(
        center: (usize, usize),
        radius: usize,
        dims: (usize, usize),
    ) -> Result<Self, PolarError> {
        if radius == 0 {
            return Err(PolarError::ZeroRadius);
        }
        if radius > max_fitting_radius(center, dims) {
            return Err(PolarError::DiscOutOfBounds {
                cx: center.0,
                cy: center.1,
                radius,
                width: dims.0,
                height: dims.1,
            });
        }
        let (cx, cy) = (center.0 as f64, center.1 as f64);
        let mut offsets = Vec::with_capacity(radius + 1);
        let mut coords = Vec::new();
        offsets.push(0);
        for r in 1..=radius {
            let n = ring_len(r);
            let rf = r as f64;
            for t in 0..n {
                let theta = TAU * t as f64 / n as f64;
                let x = cx + (rf * theta.cos()).round();
                let y = cy + (rf * theta.sin()).round();
                coords.push((x as u32, y as u32));
            }
            offsets.push(coords.len());
        }
        Ok(PolarMap {
            center,
            radius,
            dims,
            offsets,
            coords,
        })
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    /// Number of rings, i.e. rows of the unwrapped image.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Width of the unwrapped image, `n_R`.
    pub fn width(&self) -> usize {
        ring_len(self.radius)
    }

    /// Source coordinates of ring `r` (1-based).
    pub fn ring(&self, r: usize) -> &[(u32, u32)] {
        &self.coords[self.offsets[r - 1]..self.offsets[r]]
    }

    /// Source pixel transcribed to column `t` of ring `r`.
    pub fn trace_back(&self, r: usize, t: usize) -> Result<(usize, usize), PolarError> {
        if r == 0 || r > self.radius || t >= self.offsets[r] - self.offsets[r - 1] {
            return Err(PolarError::InvalidPosition { ring: r, column: t });
        }
        let (x, y) = self.coords[self.offsets[r - 1] + t];
        Ok((x as usize, y as usize))
    }
}

/// Ragged polar transcription padded to a rectangle. Row `i` holds ring
/// `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnwrappedImage {
    rows: usize,
    width: usize,
    pixels: Vec<u8>,
    row_len: Vec<usize>,
}

impl UnwrappedImage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Full padded row `i` (0-based).
    pub fn row(&self, i: usize) -> &[u8] {
        &self.pixels[i * self.width..(i + 1) * self.width]
    }

    /// Transcribed pixels of row `i` (0-based), without padding.
    pub fn valid_row(&self, i: usize) -> &[u8] {
        &self.row(i)[..self.row_len[i]]
    }

    pub fn is_valid(&self, i: usize, t: usize) -> bool {
        i < self.rows && t < self.row_len[i]
    }

    pub fn valid_len(&self, i: usize) -> usize {
        self.row_len[i]
    }

    /// The padded raster, black where nothing was transcribed.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(self.width, self.rows, self.pixels.clone()).expect("non-empty raster")
    }
}

pub fn unwrap(img: &GrayImage, map: &PolarMap) -> Result<UnwrappedImage, PolarError> {
    if img.dims() != map.dims {
        return Err(PolarError::DimensionMismatch {
            expected: map.dims,
            actual: img.dims(),
        });
    }
    let rows = map.radius;
    let width = map.width();
    let mut pixels = vec![0u8; rows * width];
    let mut row_len = Vec::with_capacity(rows);
    for r in 1..=rows {
        let ring = map.ring(r);
        let dst = &mut pixels[(r - 1) * width..(r - 1) * width + ring.len()];
        for (d, &(x, y)) in dst.iter_mut().zip(ring) {
            *d = img.get(x as usize, y as usize);
        }
        row_len.push(ring.len());
    }
    Ok(UnwrappedImage {
        rows,
        width,
        pixels,
        row_len,
    })
}

/// Unwrapped image with every row resampled to a common width.
#[derive(Debug, Clone, PartialEq)]
pub struct RectUnwrapped {
    rows: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl RectUnwrapped {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.pixels[i * self.width..(i + 1) * self.width]
    }

    /// Rounded to 8 bits for display or dumping.
    pub fn to_image(&self) -> GrayImage {
        let px = self
            .pixels
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::new(self.width, self.rows, px).expect("non-empty raster")
    }
}

/// Linear resampling of `src` onto `out.len()` evenly spaced positions
/// spanning the first to the last sample.
pub fn resample_linear(src: &[f64], out: &mut [f64]) {
    let n = src.len();
    if n == 1 {
        out.fill(src[0]);
        return;
    }
    let span = (out.len() - 1) as f64;
    for (j, o) in out.iter_mut().enumerate() {
        // integer numerator keeps both endpoints exact
        let pos = (j * (n - 1)) as f64 / span;
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        let (a, b) = (src[i], src[i + 1]);
        // clamp: rounding must not leave the bracketing samples
        *o = if frac == 0.0 {
            a
        } else {
            ((1.0 - frac) * a + frac * b).clamp(a.min(b), a.max(b))
        };
    }
}

pub fn stretch_rows(ui: &UnwrappedImage, w_out: usize) -> Result<RectUnwrapped, PolarError> {
    if w_out < 2 {
        return Err(PolarError::OutputTooNarrow(w_out));
    }
    let mut pixels = vec![0.0; ui.rows * w_out];
    let mut src = Vec::with_capacity(ui.width);
    for i in 0..ui.rows {
        let row = ui.valid_row(i);
        if row.is_empty() {
            return Err(PolarError::EmptyRow(i));
        }
        src.clear();
        src.extend(row.iter().map(|&v| f64::from(v)));
        resample_linear(&src, &mut pixels[i * w_out..(i + 1) * w_out]);
    }
    Ok(RectUnwrapped {
        rows: ui.rows,
        width: w_out,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_lengths() {
        assert_eq!(ring_len(1), 6);
        assert_eq!(ring_len(2), 13);
        assert_eq!(ring_len(112), 704);
        assert!((1..300).all(|r| ring_len(r) <= ring_len(r + 1)));
    }

    #[test]
    fn first_sample_is_on_the_positive_x_axis() {
        let map = PolarMap::build((10, 10), 5, (21, 21)).unwrap();
        assert_eq!(map.trace_back(1, 0).unwrap(), (11, 10));
        assert_eq!(map.trace_back(5, 0).unwrap(), (15, 10));
    }

    #[test]
    fn radius_112_gives_112_rows() {
        let map = PolarMap::build((160, 120), 112, (320, 240)).unwrap();
        assert_eq!(map.radius(), 112);
        assert_eq!(map.width(), 704);
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            PolarMap::build((5, 5), 0, (20, 20)),
            Err(PolarError::ZeroRadius)
        );
        assert!(matches!(
            PolarMap::build((3, 10), 5, (20, 20)),
            Err(PolarError::DiscOutOfBounds { .. })
        ));
        assert!(matches!(
            PolarMap::build((10, 10), 10, (20, 20)),
            Err(PolarError::DiscOutOfBounds { .. })
        ));
        assert!(PolarMap::build((10, 10), 9, (20, 20)).is_ok());
    }

    #[test]
    fn padding_is_invalid() {
        let map = PolarMap::build((10, 10), 3, (21, 21)).unwrap();
        assert!(matches!(
            map.trace_back(1, 6),
            Err(PolarError::InvalidPosition { .. })
        ));
        assert!(map.trace_back(0, 0).is_err());
        assert!(map.trace_back(4, 0).is_err());
    }

    #[test]
    fn constant_image_unwraps_to_constant() {
        let img = GrayImage::filled(41, 41, 100);
        let map = PolarMap::build((20, 20), 20, img.dims()).unwrap();
        let ui = unwrap(&img, &map).unwrap();
        for i in 0..ui.rows() {
            for t in 0..ui.width() {
                let expected = if ui.is_valid(i, t) { 100 } else { 0 };
                assert_eq!(ui.row(i)[t], expected);
            }
            assert_eq!(ui.valid_len(i), ring_len(i + 1));
        }
        let other = GrayImage::filled(40, 41, 100);
        assert!(matches!(
            unwrap(&other, &map),
            Err(PolarError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coordinate_encoding_oracle() {
        let img = GrayImage::from_fn(64, 48, |x, y| ((x + y) % 256) as u8);
        let map = PolarMap::build((30, 22), 20, img.dims()).unwrap();
        let ui = unwrap(&img, &map).unwrap();
        for r in 1..=20 {
            let n = ring_len(r);
            for t in 0..n {
                let theta = TAU * t as f64 / n as f64;
                let x = (30.0 + (r as f64 * theta.cos()).round()) as usize;
                let y = (22.0 + (r as f64 * theta.sin()).round()) as usize;
                assert_eq!(ui.row(r - 1)[t] as usize, (x + y) % 256);
            }
        }
    }

    #[test]
    fn traced_pixels_stay_near_the_ideal_circle() {
        let map = PolarMap::build((100, 100), 90, (201, 201)).unwrap();
        for r in 1..=90 {
            for t in 0..ring_len(r) {
                let (x, y) = map.trace_back(r, t).unwrap();
                let dx = x as f64 - 100.0;
                let dy = y as f64 - 100.0;
                let err = ((dx * dx + dy * dy).sqrt() - r as f64).abs();
                assert!(err <= 0.71, "r={r} t={t} err={err}");
            }
        }
    }

    #[test]
    fn stretch_examples() {
        let mut out = vec![0.0; 3];
        resample_linear(&[0.0, 10.0], &mut out);
        assert_eq!(out, vec![0.0, 5.0, 10.0]);
        let mut out = vec![0.0; 7];
        resample_linear(&[42.0], &mut out);
        assert_eq!(out, vec![42.0; 7]);
        let mut out = vec![0.0; 5];
        resample_linear(&[3.0, 3.0, 3.0], &mut out);
        assert_eq!(out, vec![3.0; 5]);
        let mut out = vec![0.0; 9];
        resample_linear(&[1.0, 2.0, 4.0, 8.0, 16.0], &mut out);
        assert_eq!(out[0], 1.0);
        assert_eq!(out[8], 16.0);
        assert_eq!(out[2], 2.0);
    }

    #[test]
    fn stretch_rejects_narrow_output() {
        let img = GrayImage::filled(11, 11, 7);
        let map = PolarMap::build((5, 5), 5, img.dims()).unwrap();
        let ui = unwrap(&img, &map).unwrap();
        assert_eq!(stretch_rows(&ui, 1), Err(PolarError::OutputTooNarrow(1)));
        let rui = stretch_rows(&ui, 16).unwrap();
        assert!(rui.row(4).iter().all(|&v| v == 7.0));
    }
}
