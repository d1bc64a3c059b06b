//! Circular fuzzy iris segmentation.
//!
//! After the pupil is found, a pupil-concentric disc is unwrapped to polar
//! form (UI) and stretched to a rectangle (RUI). Three radial profiles are
//! taken: `A` (row means of UI, valid pixels only), `B` (row means of RUI)
//! and `C = (A + B) / 2`. Each profile is 3-means quantized; rows in the
//! middle-intensity cluster form that profile's iris band. Rows voted into
//! at least two of the three bands belong to the iris segment, and the
//! outermost row of the longest voted run is the limbic boundary line.
//!
//! The limbic search therefore examines `3 · L` profile cells for an unwrap
//! of `L` rings.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{self, IndicatorError};
use crate::par::{self, Parallelism};
use crate::polar::{self, PolarError, PolarMap, RectUnwrapped, UnwrappedImage};
use crate::pupil::{find_pupil, PupilCircle, PupilError, PupilOptions};
use crate::quantizer::{kmeans_quantize, Quantization, QuantizeError, QuantizeOptions, Signal};
use crate::raster::GrayImage;

/// Cluster count used by the segmentation.
pub const CLUSTERS: usize = 3;
/// Label of the iris cluster (middle centroid).
pub const IRIS_LABEL: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfisError {
    #[error("UI has {ui} rows but RUI has {rui}")]
    RowCountMismatch { ui: usize, rui: usize },
    #[error("row {0} has no valid pixels")]
    EmptyRow(usize),
    #[error("profile has {0} rows; at least 3 are required")]
    ProfileTooShort(usize),
    #[error("expected a 3-means quantization, got k = {0}")]
    NotThreeMeans(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no iris band")]
    NoIrisBand,
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfiles {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl RadialProfiles {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

pub fn radial_profiles(
    ui: &UnwrappedImage,
    rui: &RectUnwrapped,
) -> Result<RadialProfiles, CfisError> {
    if ui.rows() != rui.rows() {
        return Err(CfisError::RowCountMismatch {
            ui: ui.rows(),
            rui: rui.rows(),
        });
    }
    let rows = ui.rows();
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for i in 0..rows {
        let valid = ui.valid_row(i);
        if valid.is_empty() {
            return Err(CfisError::EmptyRow(i));
        }
        a.push(valid.iter().map(|&v| f64::from(v)).sum::<f64>() / valid.len() as f64);
        let r = rui.row(i);
        b.push(r.iter().sum::<f64>() / r.len() as f64);
    }
    let c = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
    Ok(RadialProfiles { a, b, c })
}

/// Longest run of `true`, as a half-open range. Ties go to the run that
/// starts later.
pub fn longest_run(flags: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            let start = i;
            while i < flags.len() && flags[i] {
                i += 1;
            }
            if best.map_or(true, |(s, e)| i - start >= e - s) {
                best = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    best
}

/// One profile's iris band: crisp membership plus the fuzzy memberships of
/// the underlying 3-means quantization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyIrisBand {
    pub crisp: Vec<bool>,
    pub centroids: Vec<f64>,
    pub cci: Vec<usize>,
    pub cfi: Vec<f64>,
    pub fib: Vec<f64>,
    /// Profile cells inspected while labelling the band.
    pub cells_examined: usize,
}

pub fn iris_band(profile: &[f64], q3: &Quantization) -> Result<FuzzyIrisBand, CfisError> {
    if q3.k != CLUSTERS {
        return Err(CfisError::NotThreeMeans(q3.k));
    }
    if q3.labels.len() != profile.len() {
        return Err(CfisError::LengthMismatch {
            left: profile.len(),
            right: q3.labels.len(),
        });
    }
    let mut cells_examined = 0;
    let mut crisp = Vec::with_capacity(profile.len());
    for &label in &q3.labels {
        cells_examined += 1;
        crisp.push(label == IRIS_LABEL);
    }
    let (start, end) = longest_run(&crisp).ok_or(CfisError::NoIrisBand)?;
    for (i, c) in crisp.iter_mut().enumerate() {
        *c = *c && (start..end).contains(&i);
    }

    let signal = Signal::new(profile.to_vec())?;
    let cci = indicators::crisp_indicator(q3);
    let cfi = indicators::fuzzy_indicator(&signal, q3)?;
    let fib = indicators::boundary_indicator(&cci, &cfi)?;
    Ok(FuzzyIrisBand {
        crisp,
        centroids: q3.centroids.clone(),
        cci,
        cfi,
        fib,
        cells_examined,
    })
}

/// A row is in the iris segment when at least two bands vote for it.
pub fn vote_iris_rows(bands: [&[bool]; 3]) -> Result<Vec<bool>, CfisError> {
    let n = bands[0].len();
    for b in &bands[1..] {
        if b.len() != n {
            return Err(CfisError::LengthMismatch {
                left: n,
                right: b.len(),
            });
        }
    }
    Ok((0..n)
        .map(|i| bands.iter().filter(|b| b[i]).count() >= 2)
        .collect())
}

/// 1-based row of the limbic boundary: the last row of the longest voted run.
pub fn limbic_boundary(voted: &[bool]) -> Result<usize, CfisError> {
    longest_run(voted)
        .map(|(_, end)| end)
        .ok_or(CfisError::NoIrisBand)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfisConfig {
    /// Width of the rectangular unwrapped image.
    pub rui_width: usize,
    /// Upper bound on the unwrap radius; `None` uses the largest disc that
    /// fits around the pupil centre.
    pub max_radius: Option<usize>,
    pub pupil: PupilOptions,
    pub quantize: QuantizeOptions,
    pub parallelism: Parallelism,
}

impl Default for CfisConfig {
    fn default() -> Self {
        CfisConfig {
            rui_width: 512,
            max_radius: None,
            pupil: PupilOptions::default(),
            quantize: QuantizeOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pupil,
    Unwrap,
    Profiles,
    Quantize,
    Vote,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Pupil => "pupil",
            Stage::Unwrap => "unwrap",
            Stage::Profiles => "profiles",
            Stage::Quantize => "quantize",
            Stage::Vote => "vote",
        })
    }
}

/// The two ways a segmentation can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    PupilFinder,
    LimbicBoundary,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentFailure {
    #[error(transparent)]
    Pupil(#[from] PupilError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Cfis(#[from] CfisError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage failed: {failure}")]
pub struct SegmentError {
    pub stage: Stage,
    #[source]
    pub failure: SegmentFailure,
}

impl SegmentError {
    fn at(stage: Stage) -> impl FnOnce(SegmentFailure) -> SegmentError {
        move |failure| SegmentError { stage, failure }
    }

    pub fn category(&self) -> FailureCategory {
        match self.stage {
            Stage::Pupil => FailureCategory::PupilFinder,
            _ => FailureCategory::LimbicBoundary,
        }
    }
}

/// Stage durations in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub pupil_us: u64,
    pub unwrap_us: u64,
    pub profiles_us: u64,
    pub quantize_us: u64,
    pub vote_us: u64,
    pub total_us: u64,
}

/// RUI rows of the selected voted run, `first_ring..=last_ring`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisSegment {
    pub first_ring: usize,
    pub last_ring: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl IrisSegment {
    pub fn rows(&self) -> usize {
        self.last_ring + 1 - self.first_ring
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub pupil: PupilCircle,
    /// Rings unwrapped, i.e. the profile length `L`.
    pub unwrap_radius: usize,
    /// 1-based row of the limbic boundary; equal to its radius in pixels.
    pub limbic_row: usize,
    pub voted: Vec<bool>,
    pub profiles: RadialProfiles,
    /// Bands of the quantizations of A, B and C (P, Q, R).
    pub bands: [FuzzyIrisBand; 3],
    pub iris_segment: IrisSegment,
    /// Profile cells examined by the limbic search.
    pub search_cells: usize,
    pub timings: StageTimings,
}

/// Intermediate rasters, for dumps.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub map: PolarMap,
    pub ui: UnwrappedImage,
    pub rui: RectUnwrapped,
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

pub fn segment(img: &GrayImage, config: &CfisConfig) -> Result<SegmentationResult, SegmentError> {
    segment_with_artifacts(img, config).map(|(r, _)| r)
}

pub fn segment_with_artifacts(
    img: &GrayImage,
    config: &CfisConfig,
) -> Result<(SegmentationResult, Artifacts), SegmentError> {
    let total = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let pupil =
        find_pupil(img, &config.pupil).map_err(|e| SegmentError::at(Stage::Pupil)(e.into()))?;
    timings.pupil_us = micros(t);

    let t = Instant::now();
    let center = pupil.pixel_center();
    let fit = polar::max_fitting_radius(center, img.dims());
    let radius = config.max_radius.map_or(fit, |m| m.min(fit));
    let unwrap_err = SegmentError::at(Stage::Unwrap);
    let (map, ui, rui) = (|| {
        let map = PolarMap::build(center, radius, img.dims())?;
        let ui = polar::unwrap(img, &map)?;
        let rui = polar::stretch_rows(&ui, config.rui_width)?;
        Ok::<_, PolarError>((map, ui, rui))
    })()
    .map_err(|e| unwrap_err(e.into()))?;
    timings.unwrap_us = micros(t);

    let t = Instant::now();
    let profiles =
        radial_profiles(&ui, &rui).map_err(|e| SegmentError::at(Stage::Profiles)(e.into()))?;
    if profiles.len() < 3 {
        return Err(SegmentError::at(Stage::Profiles)(
            CfisError::ProfileTooShort(profiles.len()).into(),
        ));
    }
    timings.profiles_us = micros(t);

    let t = Instant::now();
    let inputs = [&profiles.a, &profiles.b, &profiles.c];
    let bands = par::map(config.parallelism, &inputs, |p| {
        let signal = Signal::new(p.to_vec())?;
        let q = kmeans_quantize(&signal, CLUSTERS, &config.quantize)?;
        iris_band(p, &q)
    });
    let [p, q, r]: [Result<FuzzyIrisBand, CfisError>; 3] =
        bands.try_into().expect("three profiles");
    let quantize_err = |e: CfisError| SegmentError::at(Stage::Quantize)(e.into());
    let bands = [
        p.map_err(quantize_err)?,
        q.map_err(quantize_err)?,
        r.map_err(quantize_err)?,
    ];
    timings.quantize_us = micros(t);

    let t = Instant::now();
    let vote_err = |e: CfisError| SegmentError::at(Stage::Vote)(e.into());
    let voted =
        vote_iris_rows([&bands[0].crisp, &bands[1].crisp, &bands[2].crisp]).map_err(vote_err)?;
    let (start, end) = longest_run(&voted).ok_or_else(|| vote_err(CfisError::NoIrisBand))?;
    let limbic_row = end;
    let mut pixels = Vec::with_capacity((end - start) * rui.width());
    for i in start..end {
        pixels.extend_from_slice(rui.row(i));
    }
    let iris_segment = IrisSegment {
        first_ring: start + 1,
        last_ring: end,
        width: rui.width(),
        pixels,
    };
    timings.vote_us = micros(t);
    timings.total_us = micros(total);

    let search_cells = bands.iter().map(|b| b.cells_examined).sum();
    Ok((
        SegmentationResult {
            pupil,
            unwrap_radius: radius,
            limbic_row,
            voted,
            profiles,
            bands,
            iris_segment,
            search_cells,
            timings,
        },
        Artifacts { map, ui, rui },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupilReport {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingsMs {
    pub pupil: f64,
    pub unwrap: f64,
    pub profiles: f64,
    pub quantize: f64,
    pub vote: f64,
    pub total: f64,
}

impl From<StageTimings> for TimingsMs {
    fn from(t: StageTimings) -> Self {
        let ms = |us: u64| us as f64 / 1000.0;
        TimingsMs {
            pupil: ms(t.pupil_us),
            unwrap: ms(t.unwrap_us),
            profiles: ms(t.profiles_us),
            quantize: ms(t.quantize_us),
            vote: ms(t.vote_us),
            total: ms(t.total_us),
        }
    }
}

/// Machine-readable summary of one segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub pupil: PupilReport,
    pub limbic_row: usize,
    pub limbic_radius_px: usize,
    pub voted: Vec<bool>,
    pub timings_ms: TimingsMs,
    pub unwrap_radius: usize,
    pub search_cells: usize,
}

impl SegmentationResult {
    pub fn report(&self) -> SegmentReport {
        SegmentReport {
            pupil: PupilReport {
                cx: self.pupil.x,
                cy: self.pupil.y,
                r: self.pupil.radius,
            },
            limbic_row: self.limbic_row,
            limbic_radius_px: self.limbic_row,
            voted: self.voted.clone(),
            timings_ms: self.timings.into(),
            unwrap_radius: self.unwrap_radius,
            search_cells: self.search_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub stage: Stage,
    pub category: FailureCategory,
    pub message: String,
}

impl From<&SegmentError> for ErrorReport {
    fn from(e: &SegmentError) -> Self {
        ErrorReport {
            stage: e.stage,
            category: e.category(),
            message: e.failure.to_string(),
        }
    }
}
