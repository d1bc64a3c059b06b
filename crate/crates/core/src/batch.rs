//! Batch segmentation over many images with failure and timing summaries.
//!
//! Images are processed independently (in parallel when enabled); results
//! are always reported in file-name order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfis::{segment, CfisConfig, ErrorReport, FailureCategory, SegmentReport, StageTimings};
use crate::par;
use crate::raster::{load_image, GrayImage};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("no PGM or PNG images in {0}")]
    NoImages(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SegmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
    /// Set when the file could not be read or decoded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub io_error: Option<String>,
    #[serde(skip)]
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub succeeded: usize,
    pub pupil_failures: usize,
    pub limbic_failures: usize,
    pub io_failures: usize,
    /// Medians over successful segmentations.
    pub median_ms_pupil: Option<f64>,
    pub median_ms_total: Option<f64>,
    pub fps_pupil: Option<f64>,
    pub fps_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub images: Vec<ImageOutcome>,
    pub summary: BatchSummary,
}

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        .unwrap_or(false)
}

/// Supported image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn outcome(file: String, img: &GrayImage, config: &CfisConfig) -> ImageOutcome {
    match segment(img, config) {
        Ok(r) => ImageOutcome {
            file,
            result: Some(r.report()),
            error: None,
            io_error: None,
            timings: Some(r.timings),
        },
        Err(e) => ImageOutcome {
            file,
            result: None,
            error: Some((&e).into()),
            io_error: None,
            timings: None,
        },
    }
}

/// Segments every supported image in `dir`.
pub fn run_directory(
    dir: &Path,
    config: &CfisConfig,
    jobs: Option<usize>,
) -> Result<BatchReport, BatchError> {
    let files = list_images(dir)?;
    if files.is_empty() {
        return Err(BatchError::NoImages(dir.display().to_string()));
    }
    let images = par::with_jobs(jobs, || {
        par::map(config.parallelism, &files, |path| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            match load_image(path) {
                Ok(img) => outcome(name, &img, config),
                Err(e) => ImageOutcome {
                    file: name,
                    result: None,
                    error: None,
                    io_error: Some(e.to_string()),
                    timings: None,
                },
            }
        })
    });
    let summary = summarize(&images);
    Ok(BatchReport { images, summary })
}

/// Segments in-memory images; `names` label the outcomes.
pub fn run_images(names: &[String], images: &[GrayImage], config: &CfisConfig) -> BatchReport {
    let indices: Vec<usize> = (0..images.len()).collect();
    let outcomes = par::map(config.parallelism, &indices, |&i| {
        outcome(names[i].clone(), &images[i], config)
    });
    let summary = summarize(&outcomes);
    BatchReport {
        images: outcomes,
        summary,
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn summarize(outcomes: &[ImageOutcome]) -> BatchSummary {
    let mut pupil_failures = 0;
    let mut limbic_failures = 0;
    let mut io_failures = 0;
    let mut pupil_ms = Vec::new();
    let mut total_ms = Vec::new();
    for o in outcomes {
        if o.io_error.is_some() {
            io_failures += 1;
        }
        match o.error.as_ref().map(|e| e.category) {
            Some(FailureCategory::PupilFinder) => pupil_failures += 1,
            Some(FailureCategory::LimbicBoundary) => limbic_failures += 1,
            None => {}
        }
        if let Some(t) = o.timings {
            pupil_ms.push(t.pupil_us as f64 / 1000.0);
            total_ms.push(t.total_us as f64 / 1000.0);
        }
    }
    let median_ms_pupil = median(&mut pupil_ms);
    let median_ms_total = median(&mut total_ms);
    let fps = |m: Option<f64>| m.filter(|&ms| ms > 0.0).map(|ms| 1000.0 / ms);
    BatchSummary {
        total: outcomes.len(),
        succeeded: total_ms.len(),
        pupil_failures,
        limbic_failures,
        io_failures,
        median_ms_pupil,
        median_ms_total,
        fps_pupil: fps(median_ms_pupil),
        fps_total: fps(median_ms_total),
    }
}
