//! Statistical crater-detector model.
//!
//! Instead of rendering imagery, each catalog crater that projects into the
//! true image is emitted with a probability that depends on whether the
//! detector has already seen it (persistence), perturbed by pixel noise.
//! Spurious detections arrive as a Poisson process; some of them land close
//! to a real crater so the identifier can pair them with the wrong record.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DetectedCrater;
use crate::catalog::CraterRecord;
use crate::geometry::CameraModel;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("profile `{profile}`: {msg}")]
    Invalid { profile: String, msg: String },
    #[error("unknown detector profile `{0}`")]
    Unknown(String),
    #[error("cannot parse profile table: {0}")]
    Parse(String),
}

/// Multipliers applied at one brightness offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrightnessResponse {
    pub offset: f64,
    pub p_detect_new: f64,
    pub p_redetect: f64,
    pub false_rate: f64,
    pub mismatch_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    /// Per-frame detection probability of a crater this detector has not
    /// reported before.
    pub p_detect_new: f64,
    /// Per-frame detection probability of a crater it has reported before.
    pub p_redetect: f64,
    /// Center noise standard deviation, pixels.
    pub center_noise_px: f64,
    /// Relative diameter noise standard deviation.
    pub diameter_noise: f64,
    /// Mean spurious detections per frame.
    pub false_rate: f64,
    /// Probability a spurious detection is placed next to a real crater.
    pub mismatch_rate: f64,
    /// Distance range of such a placement from the crater center, pixels.
    pub mismatch_offset_px: [f64; 2],
    /// Diameter range of free-floating spurious detections, pixels.
    pub false_diameter_px: [f64; 2],
    /// Response to brightness offsets, sorted by offset; interpolated
    /// linearly and clamped at the ends.
    #[serde(default)]
    pub brightness_response: Vec<BrightnessResponse>,
}

/// Rates after the brightness response is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub p_detect_new: f64,
    pub p_redetect: f64,
    pub false_rate: f64,
    pub mismatch_rate: f64,
}

impl DetectorProfile {
    /// Always detects, never lies, no noise.
    pub fn perfect() -> Self {
        Self {
            p_detect_new: 1.0,
            p_redetect: 1.0,
            center_noise_px: 0.0,
            diameter_noise: 0.0,
            false_rate: 0.0,
            mismatch_rate: 0.0,
            mismatch_offset_px: [0.0, 0.0],
            false_diameter_px: [10.0, 10.0],
            brightness_response: Vec::new(),
        }
    }

    fn multipliers(&self, brightness: f64) -> (f64, f64, f64, f64) {
        let r = &self.brightness_response;
        match r.len() {
            0 => (1.0, 1.0, 1.0, 1.0),
            _ if brightness <= r[0].offset => (r[0].p_detect_new, r[0].p_redetect, r[0].false_rate, r[0].mismatch_rate),
            n if brightness >= r[n - 1].offset => {
                let l = &r[n - 1];
                (l.p_detect_new, l.p_redetect, l.false_rate, l.mismatch_rate)
            }
            _ => {
                let k = r.windows(2).position(|w| brightness >= w[0].offset && brightness <= w[1].offset).expect("bracketed");
                let (a, b) = (&r[k], &r[k + 1]);
                let t = (brightness - a.offset) / (b.offset - a.offset);
                let lerp = |x: f64, y: f64| x + t * (y - x);
                (
                    lerp(a.p_detect_new, b.p_detect_new),
                    lerp(a.p_redetect, b.p_redetect),
                    lerp(a.false_rate, b.false_rate),
                    lerp(a.mismatch_rate, b.mismatch_rate),
                )
            }
        }
    }

    pub fn effective(&self, brightness: f64) -> EffectiveRates {
        let (a, b, c, d) = self.multipliers(brightness);
        EffectiveRates {
            p_detect_new: (self.p_detect_new * a).clamp(0.0, 1.0),
            p_redetect: (self.p_redetect * b).clamp(0.0, 1.0),
            false_rate: (self.false_rate * c).max(0.0),
            mismatch_rate: (self.mismatch_rate * d).clamp(0.0, 1.0),
        }
    }

    pub fn validate(&self, name: &str) -> Result<(), ProfileError> {
        let bad = |msg: String| Err(ProfileError::Invalid { profile: name.to_string(), msg });
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !prob(self.p_detect_new) || !prob(self.p_redetect) || !prob(self.mismatch_rate) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(self.false_rate >= 0.0 && self.center_noise_px >= 0.0 && self.diameter_noise >= 0.0) {
            return bad("rates and noise levels must be non-negative".into());
        }
        for range in [self.mismatch_offset_px, self.false_diameter_px] {
            if !(range[0] >= 0.0 && range[1] >= range[0]) {
                return bad(format!("invalid range {range:?}"));
            }
        }
        if self.false_diameter_px[0] <= 0.0 {
            return bad("false detection diameters must be positive".into());
        }
        if self.brightness_response.windows(2).any(|w| w[1].offset <= w[0].offset) {
            return bad("brightness_response offsets must be strictly increasing".into());
        }
        for r in &self.brightness_response {
            let e = self.effective(r.offset);
            let raw = [self.p_detect_new * r.p_detect_new, self.p_redetect * r.p_redetect, self.mismatch_rate * r.mismatch_rate];
            if raw.iter().any(|&p| !prob(p)) || r.false_rate < 0.0 || e.false_rate < 0.0 {
                return bad(format!("response at offset {} yields invalid rates", r.offset));
            }
        }
        Ok(())
    }
}

/// Named detector profiles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileSet(pub BTreeMap<String, DetectorProfile>);

/// Shipped calibration presets (`lunanet`, `trinary`).
pub const PRESET_PROFILES_TOML: &str = include_str!("../../profiles.toml");

impl ProfileSet {
    pub fn presets() -> Self {
        Self::from_toml(PRESET_PROFILES_TOML).expect("shipped presets are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        let set: ProfileSet = toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        for (name, p) in &set.0 {
            p.validate(name)?;
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&DetectorProfile, ProfileError> {
        if name == "perfect" && !self.0.contains_key(name) {
            return Ok(perfect_profile());
        }
        self.0.get(name).ok_or_else(|| ProfileError::Unknown(name.to_string()))
    }

    pub fn insert(&mut self, name: String, p: DetectorProfile) {
        self.0.insert(name, p);
    }
}

fn perfect_profile() -> &'static DetectorProfile {
    static P: std::sync::OnceLock<DetectorProfile> = std::sync::OnceLock::new();
    P.get_or_init(DetectorProfile::perfect)
}

/// A catalog crater projecting into the margin-inflated image, with its
/// true projected rim.
#[derive(Debug, Clone, Copy)]
pub struct VisibleCrater<'a> {
    pub record: &'a CraterRecord,
    pub projected: DetectedCrater,
    /// Center lies inside the image proper; only these can be detected.
    /// The rest only attract misplaced false detections.
    pub in_view: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDetection {
    pub detection: DetectedCrater,
    /// Catalog id of the crater that produced it; `None` for spurious ones.
    pub true_id: Option<String>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("positive std").sample(rng)
    } else {
        0.0
    }
}

/// One frame of detector output. `visible` should be in a stable order
/// (the simulation passes it sorted by id) for reproducibility.
pub fn simulate_detections<R: Rng + ?Sized>(
    visible: &[VisibleCrater<'_>],
    tracked_ids: &HashSet<String>,
    profile: &DetectorProfile,
    brightness: f64,
    cam: &CameraModel,
    rng: &mut R,
) -> Vec<SimulatedDetection> {
    let rates = profile.effective(brightness);
    let mut out = Vec::new();
    for vc in visible.iter().filter(|v| v.in_view) {
        let p = if tracked_ids.contains(&vc.record.id) { rates.p_redetect } else { rates.p_detect_new };
        if !rng.random_bool(p) {
            continue;
        }
        let du = gaussian(rng, profile.center_noise_px);
        let dv = gaussian(rng, profile.center_noise_px);
        let scale = (1.0 + gaussian(rng, profile.diameter_noise)).max(0.1);
        let t = &vc.projected;
        out.push(SimulatedDetection {
            detection: DetectedCrater {
                u: t.u + du,
                v: t.v + dv,
                major_axis: t.major_axis * scale,
                minor_axis: t.minor_axis * scale,
                orientation: t.orientation,
            },
            true_id: Some(vc.record.id.clone()),
        });
    }

    let n_false = if rates.false_rate > 0.0 {
        Poisson::new(rates.false_rate).expect("positive rate").sample(rng) as usize
    } else {
        0
    };
    let (w, h) = (cam.width(), cam.height());
    for _ in 0..n_false {
        let near_real = !visible.is_empty() && rng.random_bool(rates.mismatch_rate);
        let det = if near_real {
            let anchor = &visible[rng.random_range(0..visible.len())].projected;
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let dist = uniform(rng, profile.mismatch_offset_px);
            let scale = (1.0 + gaussian(rng, profile.diameter_noise)).max(0.1);
            DetectedCrater::circle(
                (anchor.u + dist * ang.cos()).clamp(0.0, w),
                (anchor.v + dist * ang.sin()).clamp(0.0, h),
                anchor.diameter() * scale,
            )
        } else {
            let u = rng.random_range(0.0..w);
            let v = rng.random_range(0.0..h);
            DetectedCrater::circle(u, v, uniform(rng, profile.false_diameter_px))
        };
        out.push(SimulatedDetection { detection: det, true_id: None });
    }
    out
}
