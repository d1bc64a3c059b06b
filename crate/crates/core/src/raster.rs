//! 8-bit grayscale rasters, PGM/PNG file I/O and result overlays.
//!
//! Loading and saving never rescale intensities: PGM files with a maxval
//! below 255 keep their raw sample values.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Cursor};
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};
use thiserror::Error;

use crate::pupil::PupilCircle;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("circle at ({cx}, {cy}) with radius {r} leaves the {width}x{height} image")]
    CircleOutOfBounds {
        cx: i64,
        cy: i64,
        r: i64,
        width: usize,
        height: usize,
    },
    #[error("pixel buffer of {len} bytes does not match {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(RasterError::DimensionMismatch {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        RgbImage {
            width: img.width,
            height: img.height,
            pixels: img.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: [u8; 3]) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer size matches dimensions");
        buf.save_with_format(path.as_ref(), ImageFormat::Png)
            .map_err(image_error)
    }
}

/// Integer Rec.601 luma, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, RasterError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => RasterError::FileNotFound(path.display().to_string()),
        _ => RasterError::Io(e),
    })?;
    decode(&bytes)
}

/// Decodes PGM (P5/P2) or PNG bytes, sniffing the format from the header.
pub fn decode(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes)
    } else {
        Err(RasterError::UnsupportedFormat(
            "expected a PGM (P5/P2) or PNG file".into(),
        ))
    }
}

/// Writes a PGM (`.pgm`) or PNG (`.png`) file, chosen by extension.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm") => Ok(fs::write(path, encode_pgm(img))?),
        Some("png") => Ok(fs::write(path, encode_png(img)?)?),
        other => Err(RasterError::UnsupportedFormat(format!(
            "cannot write extension {:?}",
            other.unwrap_or("")
        ))),
    }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>, RasterError> {
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
        .expect("buffer size matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(image_error)?;
    Ok(out.into_inner())
}

fn image_error(e: image::ImageError) -> RasterError {
    match e {
        image::ImageError::IoError(e) => RasterError::Io(e),
        image::ImageError::Unsupported(e) => RasterError::UnsupportedFormat(e.to_string()),
        other => RasterError::CorruptData(other.to_string()),
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(image_error)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match (img.color(), img) {
        (ColorType::L8, DynamicImage::ImageLuma8(buf)) => GrayImage::new(w, h, buf.into_raw()),
        (ColorType::Rgb8, DynamicImage::ImageRgb8(buf)) => {
            let pixels = buf.pixels().map(|p| luma(p[0], p[1], p[2])).collect();
            GrayImage::new(w, h, pixels)
        }
        (color, _) => Err(RasterError::UnsupportedFormat(format!(
            "PNG color type {color:?}; only 8-bit gray and 8-bit RGB are accepted"
        ))),
    }
}

/// Splits PGM header tokens, skipping `#` comments. Returns the tokens and
/// the offset just past the single whitespace byte that follows the last one.
fn pgm_header(bytes: &[u8], count: usize) -> Result<(Vec<&str>, usize), RasterError> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(RasterError::CorruptData("truncated PGM header".into()));
        }
        let tok = std::str::from_utf8(&bytes[start..i])
            .map_err(|_| RasterError::CorruptData("non-ASCII PGM header".into()))?;
        tokens.push(tok);
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(RasterError::CorruptData("PGM header not terminated".into()));
    }
    Ok((tokens, i + 1))
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let (tokens, data_start) = pgm_header(bytes, 4)?;
    let parse = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| RasterError::CorruptData(format!("bad PGM {what}: {s:?}")))
    };
    let width = parse(tokens[1], "width")?;
    let height = parse(tokens[2], "height")?;
    let maxval = parse(tokens[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(RasterError::CorruptData("zero PGM dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(RasterError::UnsupportedFormat(format!(
            "PGM maxval {maxval}; only 8-bit samples are supported"
        )));
    }
    let n = width * height;
    let pixels = match tokens[0] {
        "P5" => {
            let data = &bytes[data_start..];
            if data.len() < n {
                return Err(RasterError::CorruptData(format!(
                    "expected {n} pixel bytes, found {}",
                    data.len()
                )));
            }
            data[..n].to_vec()
        }
        "P2" => {
            let text = std::str::from_utf8(&bytes[data_start..])
                .map_err(|_| RasterError::CorruptData("non-ASCII P2 body".into()))?;
            let values: Vec<u8> = text
                .split_ascii_whitespace()
                .take(n)
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v <= maxval => Ok(v as u8),
                    _ => Err(RasterError::CorruptData(format!("bad P2 sample {t:?}"))),
                })
                .collect::<Result<_, _>>()?;
            if values.len() < n {
                return Err(RasterError::CorruptData("truncated P2 body".into()));
            }
            values
        }
        other => return Err(RasterError::UnsupportedFormat(format!("PGM magic {other}"))),
    };
    if let Some(&v) = pixels.iter().find(|&&v| v as usize > maxval) {
        return Err(RasterError::CorruptData(format!(
            "sample {v} exceeds maxval {maxval}"
        )));
    }
    GrayImage::new(width, height, pixels)
}

/// Pixels of a midpoint-rasterized circle, deduplicated, in drawing order.
pub fn circle_points(cx: i64, cy: i64, r: i64) -> Vec<(i64, i64)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |x: i64, y: i64| {
        if seen.insert((x, y)) {
            out.push((x, y));
        }
    };
    if r <= 0 {
        push(cx, cy);
        return out;
    }
    let (mut x, mut y) = (r, 0i64);
    let mut err = 1 - r;
    while x >= y {
        for (dx, dy) in [
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            push(cx + dx, cy + dy);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    out
}

pub const PUPIL_COLOR: [u8; 3] = [255, 0, 0];
pub const LIMBIC_COLOR: [u8; 3] = [0, 255, 0];

/// Color copy of `img` with the pupil circle and the concentric limbic circle
/// drawn on it.
pub fn render_overlay(
    img: &GrayImage,
    pupil: &PupilCircle,
    limbic_radius: usize,
) -> Result<RgbImage, RasterError> {
    let cx = pupil.x.round() as i64;
    let cy = pupil.y.round() as i64;
    let circles = [
        (pupil.radius.round() as i64, PUPIL_COLOR),
        (limbic_radius as i64, LIMBIC_COLOR),
    ];
    let (w, h) = (img.width as i64, img.height as i64);
    for &(r, _) in &circles {
        if cx - r < 0 || cy - r < 0 || cx + r >= w || cy + r >= h {
            return Err(RasterError::CircleOutOfBounds {
                cx,
                cy,
                r,
                width: img.width,
                height: img.height,
            });
        }
    }
    let mut out = RgbImage::from_gray(img);
    for (r, color) in circles {
        for (x, y) in circle_points(cx, cy, r) {
            out.set(x as usize, y as usize, color);
        }
    }
    Ok(out)
}
