//! Crater detections from rim-prediction masks, plus a statistical detector
//! model for closed-loop simulation.

pub mod ellipse;
pub mod mask;
pub mod pgm;
pub mod simulator;

use serde::{Deserialize, Serialize};

pub use ellipse::{fit_ellipse_direct, Ellipse};
pub use mask::{erode_to_rims, extract_contours, render_rim_mask, threshold_mask, MaskError, PixelChain, PredictionMask, Ring};
pub use simulator::{simulate_detections, BrightnessResponse, DetectorProfile, ProfileError, ProfileSet, SimulatedDetection, VisibleCrater};

/// A crater rim ellipse in image coordinates. Axes are full lengths in
/// pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedCrater {
    pub u: f64,
    pub v: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub orientation: f64,
}

impl DetectedCrater {
    pub fn circle(u: f64, v: f64, diameter: f64) -> Self {
        Self { u, v, major_axis: diameter, minor_axis: diameter, orientation: 0.0 }
    }

    /// Mean of the two axes.
    pub fn diameter(&self) -> f64 {
        0.5 * (self.major_axis + self.minor_axis)
    }

    pub fn axis_ratio(&self) -> f64 {
        self.minor_axis / self.major_axis
    }
}

/// Tunables of the post-prediction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskPipelineParams {
    /// Predictions must strictly exceed this certainty to survive.
    pub certainty: f64,
    /// Components with fewer pixels are discarded.
    pub min_pixels: usize,
    /// Minimum minor/major axis ratio for an accepted ellipse.
    pub min_axis_ratio: f64,
}

impl Default for MaskPipelineParams {
    fn default() -> Self {
        Self { certainty: 0.90, min_pixels: 3, min_axis_ratio: 0.85 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitDiagnostics {
    pub too_short: usize,
    pub fit_failed: usize,
    pub too_elliptical: usize,
}

const MIN_FIT_POINTS: usize = 5;

/// Fits an ellipse to each chain; chains under five pixels are skipped and
/// fits with minor/major below `min_axis_ratio` are rejected.
pub fn fit_ellipses(chains: &[PixelChain], min_axis_ratio: f64) -> (Vec<DetectedCrater>, FitDiagnostics) {
    let mut diag = FitDiagnostics::default();
    let mut out = Vec::new();
    for chain in chains {
        if chain.len() < MIN_FIT_POINTS {
            diag.too_short += 1;
            continue;
        }
        let pts: Vec<(f64, f64)> = chain.pixels.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let Some(e) = fit_ellipse_direct(&pts) else {
            diag.fit_failed += 1;
            continue;
        };
        let det = DetectedCrater { u: e.cu, v: e.cv, major_axis: e.major, minor_axis: e.minor, orientation: e.theta };
        if det.axis_ratio() < min_axis_ratio {
            diag.too_elliptical += 1;
            continue;
        }
        out.push(det);
    }
    (out, diag)
}

/// threshold → thin → contours → ellipse fit.
pub fn detect_from_mask(m: &PredictionMask, params: &MaskPipelineParams) -> Vec<DetectedCrater> {
    let binary = threshold_mask(m, params.certainty);
    let skeleton = erode_to_rims(&binary);
    let chains = extract_contours(&skeleton, params.min_pixels);
    fit_ellipses(&chains, params.min_axis_ratio).0
}
