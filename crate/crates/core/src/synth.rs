//! Synthetic eye images with exact ground truth.
//!
//! An eye is three concentric regions (pupil, iris, sclera) with constant
//! intensities, an optional linear ramp across each boundary, an optional
//! square specular highlight and additive clamped Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Parallelism};
use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intensities {
    pub pupil: u8,
    pub iris: u8,
    pub sclera: u8,
}

/// Square highlight of side `size` centred on `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub x: f64,
    pub y: f64,
    pub size: usize,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEyeSpec {
    pub width: usize,
    pub height: usize,
    /// Pupil (and iris) centre `[x, y]` in pixels.
    pub center: [f64; 2],
    pub r_p: f64,
    pub r_i: f64,
    pub intensities: Intensities,
    pub noise_sigma: f64,
    #[serde(default)]
    pub highlight: Option<Highlight>,
    /// Width in pixels of the linear ramp across each boundary; 0 gives hard
    /// edges.
    #[serde(default)]
    pub blur_width: f64,
    pub rng_seed: u64,
}

impl SynthEyeSpec {
    /// Comparisons are negated so NaN fields are rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let [cx, cy] = self.center;
        if self.width == 0 || self.height == 0 {
            return bad("zero image dimension".into());
        }
        if !(self.r_p >= 5.0) {
            return bad(format!("pupil radius {} < 5", self.r_p));
        }
        if !(self.r_i > self.r_p) {
            return bad(format!(
                "iris radius {} <= pupil radius {}",
                self.r_i, self.r_p
            ));
        }
        let border = cx
            .min(cy)
            .min(self.width as f64 - 1.0 - cx)
            .min(self.height as f64 - 1.0 - cy);
        if !(self.r_i <= border) {
            return bad(format!(
                "iris radius {} exceeds border distance {border}",
                self.r_i
            ));
        }
        let Intensities {
            pupil,
            iris,
            sclera,
        } = self.intensities;
        if !(pupil < iris && iris < sclera) {
            return bad(format!(
                "intensities must increase: {pupil} {iris} {sclera}"
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {}", self.noise_sigma));
        }
        if !(self.blur_width >= 0.0 && self.blur_width.is_finite()) {
            return bad(format!("blur width {}", self.blur_width));
        }
        Ok(())
    }

    /// Noise-free intensity at distance `d` from the centre.
    fn clean_intensity(&self, d: f64) -> f64 {
        let Intensities {
            pupil,
            iris,
            sclera,
        } = self.intensities;
        let (p, i, s) = (f64::from(pupil), f64::from(iris), f64::from(sclera));
        if self.blur_width == 0.0 {
            return if d <= self.r_p {
                p
            } else if d <= self.r_i {
                i
            } else {
                s
            };
        }
        let ramp = |r: f64, a: f64, b: f64| {
            let t = ((d - (r - self.blur_width / 2.0)) / self.blur_width).clamp(0.0, 1.0);
            a + (b - a) * t
        };
        if d < (self.r_p + self.r_i) / 2.0 {
            ramp(self.r_p, p, i)
        } else {
            ramp(self.r_i, i, s)
        }
    }
}

pub fn generate_eye(spec: &SynthEyeSpec) -> Result<GrayImage, SynthError> {
    spec.validate()?;
    let [cx, cy] = spec.center;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("finite non-negative sigma"));

    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            let mut v = spec.clean_intensity(d);
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let mut img = GrayImage::new(spec.width, spec.height, pixels)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;

    if let Some(h) = spec.highlight {
        let half = h.size as f64 / 2.0;
        let x0 = (h.x - half).round().max(0.0) as usize;
        let y0 = (h.y - half).round().max(0.0) as usize;
        for y in y0..(y0 + h.size).min(spec.height) {
            for x in x0..(x0 + h.size).min(spec.width) {
                img.set(x, y, h.value);
            }
        }
    }
    Ok(img)
}

/// Parameters for a random corpus. Each noise level gets `n` images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOptions {
    pub n: usize,
    pub seed: u64,
    pub noise_levels: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub highlight_probability: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            n: 10,
            seed: 0,
            noise_levels: vec![4.0],
            width: 320,
            height: 240,
            highlight_probability: 0.5,
        }
    }
}

/// Draws random eye specs: pupil radius in [15, 40], iris radius in [55, 90],
/// at least 16 px of sclera between the iris and the nearest border.
pub fn random_specs(opts: &CorpusOptions) -> Vec<SynthEyeSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut specs = Vec::with_capacity(opts.n * opts.noise_levels.len());
    for &sigma in &opts.noise_levels {
        for _ in 0..opts.n {
            let r_p = rng.random_range(15..=40) as f64;
            let r_i = rng.random_range(55..=90) as f64;
            let margin = r_i as usize + 16;
            let cx = rng.random_range(margin..opts.width.saturating_sub(margin).max(margin + 1));
            let cy = rng.random_range(margin..opts.height.saturating_sub(margin).max(margin + 1));
            let intensities = Intensities {
                pupil: rng.random_range(10..=40),
                iris: rng.random_range(100..=140),
                sclera: rng.random_range(190..=235),
            };
            let highlight = rng.random_bool(opts.highlight_probability).then(|| {
                let reach = r_p / 3.0;
                Highlight {
                    x: cx as f64 + rng.random_range(-reach..=reach).round(),
                    y: cy as f64 + rng.random_range(-reach..=reach).round(),
                    size: rng.random_range(3..=7),
                    value: 255,
                }
            });
            specs.push(SynthEyeSpec {
                width: opts.width,
                height: opts.height,
                center: [cx as f64, cy as f64],
                r_p,
                r_i,
                intensities,
                noise_sigma: sigma,
                highlight,
                blur_width: 0.0,
                rng_seed: rng.random(),
            });
        }
    }
    specs
}

pub fn generate_corpus(
    specs: &[SynthEyeSpec],
    mode: Parallelism,
) -> Result<Vec<GrayImage>, SynthError> {
    par::map(mode, specs, generate_eye).into_iter().collect()
}
