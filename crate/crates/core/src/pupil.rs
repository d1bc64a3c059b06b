//! Pupil localisation by dark-cluster binarization and run-length connected
//! components.
//!
//! The image intensities are 3-means quantized, the darkest cluster becomes a
//! binary mask, mask rows are run-length encoded and runs on adjacent rows
//! that share at least one column are merged (4-connectivity). The pupil is
//! the largest sufficiently disc-like component; its radius comes from the
//! area, which tolerates specular holes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantizer::{kmeans_quantize_u8, Init, QuantizeError, QuantizeOptions};
use crate::raster::GrayImage;

pub const MIN_SIDE: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PupilError {
    #[error("pupil not found: {0}")]
    NotFound(String),
    #[error("image is {0}x{1}; at least {MIN_SIDE}x{MIN_SIDE} is required")]
    ImageTooSmall(usize, usize),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilCircle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl PupilCircle {
    /// Centre rounded to the nearest pixel.
    pub fn pixel_center(&self) -> (usize, usize) {
        (self.x.round() as usize, self.y.round() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilOptions {
    /// Minimum component area as a fraction of the image area.
    pub min_area_fraction: f64,
    /// Minimum area / bounding-box area. An ideal disc scores π/4.
    pub disc_likeness: f64,
}

impl Default for PupilOptions {
    fn default() -> Self {
        PupilOptions {
            min_area_fraction: 0.0005,
            disc_likeness: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// A horizontal run of foreground pixels, `start..end` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub y: usize,
    pub start: usize,
    pub end: usize,
}

pub fn run_length_encode(mask: &BinaryMask) -> Vec<Run> {
    let mut runs = Vec::new();
    for y in 0..mask.height {
        let row = &mask.bits[y * mask.width..(y + 1) * mask.width];
        let mut x = 0;
        while x < row.len() {
            if row[x] {
                let start = x;
                while x < row.len() && row[x] {
                    x += 1;
                }
                runs.push(Run { y, start, end: x });
            } else {
                x += 1;
            }
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

impl BoundingBox {
    pub fn area(&self) -> usize {
        (self.max_x - self.min_x + 1) * (self.max_y - self.min_y + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub area: usize,
    pub centroid: (f64, f64),
    pub bbox: BoundingBox,
}

impl Component {
    pub fn fill_ratio(&self) -> f64 {
        self.area as f64 / self.bbox.area() as f64
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// 4-connected components of the mask, ordered by their first run.
pub fn rle_components(mask: &BinaryMask) -> Vec<Component> {
    let runs = run_length_encode(mask);
    let mut parent: Vec<usize> = (0..runs.len()).collect();

    // runs are sorted by row then column; sweep each pair of adjacent rows
    let mut row_start = 0;
    let mut prev: Option<(usize, usize)> = None;
    while row_start < runs.len() {
        let y = runs[row_start].y;
        let mut row_end = row_start;
        while row_end < runs.len() && runs[row_end].y == y {
            row_end += 1;
        }
        if let Some((ps, pe)) = prev.filter(|&(ps, _)| runs[ps].y + 1 == y) {
            let (mut a, mut b) = (ps, row_start);
            while a < pe && b < row_end {
                if runs[a].start < runs[b].end && runs[b].start < runs[a].end {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
                if runs[a].end < runs[b].end {
                    a += 1;
                } else {
                    b += 1;
                }
            }
        }
        prev = Some((row_start, row_end));
        row_start = row_end;
    }

    struct Acc {
        area: usize,
        sx: f64,
        sy: f64,
        bbox: BoundingBox,
    }
    let mut slot = vec![usize::MAX; runs.len()];
    let mut accs: Vec<Acc> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = accs.len();
            accs.push(Acc {
                area: 0,
                sx: 0.0,
                sy: 0.0,
                bbox: BoundingBox {
                    min_x: run.start,
                    min_y: run.y,
                    max_x: run.end - 1,
                    max_y: run.y,
                },
            });
        }
        let acc = &mut accs[slot[root]];
        let len = run.end - run.start;
        acc.area += len;
        // sum of x over start..end
        acc.sx += (run.start + run.end - 1) as f64 * len as f64 / 2.0;
        acc.sy += (run.y * len) as f64;
        acc.bbox.min_x = acc.bbox.min_x.min(run.start);
        acc.bbox.max_x = acc.bbox.max_x.max(run.end - 1);
        acc.bbox.max_y = acc.bbox.max_y.max(run.y);
    }
    accs.into_iter()
        .map(|a| Component {
            area: a.area,
            centroid: (a.sx / a.area as f64, a.sy / a.area as f64),
            bbox: a.bbox,
        })
        .collect()
}

pub fn find_pupil(img: &GrayImage, options: &PupilOptions) -> Result<PupilCircle, PupilError> {
    let (w, h) = img.dims();
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(PupilError::ImageTooSmall(w, h));
    }
    let mut seen = [false; 256];
    for &p in img.pixels() {
        seen[p as usize] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 3 {
        return Err(PupilError::NotFound(
            "fewer than 3 distinct intensities".into(),
        ));
    }

    // 256 bins at most, so the exact partition seed is always affordable
    let q = kmeans_quantize_u8(
        img.pixels(),
        3,
        &QuantizeOptions::with_init(Init::OptimalPartition),
    )?;
    let mask = BinaryMask {
        width: w,
        height: h,
        bits: q.labels.iter().map(|&l| l == 1).collect(),
    };

    let min_area = (options.min_area_fraction * (w * h) as f64).max(1.0);
    let best = rle_components(&mask)
        .into_iter()
        .filter(|c| c.area as f64 >= min_area && c.fill_ratio() >= options.disc_likeness)
        .max_by_key(|c| c.area)
        .ok_or_else(|| PupilError::NotFound("no disc-like dark component".into()))?;

    let radius = (best.area as f64 / std::f64::consts::PI).sqrt();
    let (x, y) = best.centroid;
    if radius < 1.0
        || x - radius < 0.0
        || y - radius < 0.0
        || x + radius > (w - 1) as f64
        || y + radius > (h - 1) as f64
    {
        return Err(PupilError::NotFound(format!(
            "candidate at ({x:.1}, {y:.1}) r={radius:.1} is not inside the image"
        )));
    }
    Ok(PupilCircle { x, y, radius })
}
