//! Closed-loop navigation trials and Monte-Carlo aggregation.

mod monte_carlo;
mod report;
mod trajectory;
mod trial;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::CraterCatalog;
use crate::detect::{DetectorProfile, ProfileError, ProfileSet};
use crate::ekf::{EkfError, FilterParams};
use crate::geometry::{CameraModel, GeometryError};
use crate::matching::MatchParams;

pub use monte_carlo::{
    compare_profiles, monte_carlo, monte_carlo_sequential, summarize, ComparisonCell, McSummary, MonteCarloRun, StepStats,
};
#[cfg(feature = "parallel")]
pub use monte_carlo::monte_carlo_parallel;
pub use report::{write_steps_csv, write_summary_csv, STEPS_HEADER, SUMMARY_HEADER};
pub use trajectory::{circular_speed, generate_trajectory, TruthSample};
pub use trial::{run_trial, StepFlag, StepRecord, TrialResult};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid value for `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filter(#[from] EkfError),
}

fn invalid(key: &str, msg: impl Into<String>) -> SimError {
    SimError::Config { key: key.to_string(), msg: msg.into() }
}

/// Everything that defines one trajectory's simulation, apart from the
/// trial index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    pub altitude_m: f64,
    pub duration_s: f64,
    #[serde(rename = "dT")]
    pub dt: f64,
    /// IMU acceleration noise std per axis, m/s².
    pub imu_noise_std: f64,
    pub profile: String,
    /// Image brightness offset as a fraction of nominal.
    pub brightness: f64,
    /// Master seed; each trial derives its own streams from it.
    pub seed: u64,
    /// Position error beyond which a trial is stopped and flagged, m.
    pub bailout_m: f64,
    /// Filter line-of-sight noise in pixels. Defaults to the profile's
    /// center noise, floored at `MIN_MEASUREMENT_NOISE_PX`.
    pub measurement_noise_px: Option<f64>,
    /// Maximum |latitude| of the random start point, degrees.
    pub max_start_lat_deg: f64,
    pub camera: CameraModel,
    pub filter: FilterParams,
    pub matching: MatchParams,
}

pub const MIN_MEASUREMENT_NOISE_PX: f64 = 0.5;

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            altitude_m: 100_000.0,
            duration_s: 500.0,
            dt: 2.5,
            imu_noise_std: 0.1,
            profile: "lunanet".into(),
            brightness: 0.0,
            seed: 1,
            bailout_m: 10_000.0,
            measurement_noise_px: None,
            max_start_lat_deg: 45.0,
            camera: CameraModel::default(),
            filter: FilterParams::default(),
            matching: MatchParams::default(),
        }
    }
}

impl TrialConfig {
    pub fn steps(&self) -> usize {
        (self.duration_s / self.dt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dt) {
            return Err(invalid("dT", format!("{} must be > 0", self.dt)));
        }
        if !(self.duration_s.is_finite() && self.duration_s >= self.dt) {
            return Err(invalid("duration_s", format!("{} must be at least dT", self.duration_s)));
        }
        if !positive(self.altitude_m) {
            return Err(invalid("altitude_m", format!("{} must be > 0", self.altitude_m)));
        }
        if !(self.imu_noise_std >= 0.0 && self.imu_noise_std.is_finite()) {
            return Err(invalid("imu_noise_std", "must be finite and non-negative"));
        }
        if !self.brightness.is_finite() || self.brightness <= -1.0 {
            return Err(invalid("brightness", format!("{} must be a finite offset above -1", self.brightness)));
        }
        if !positive(self.bailout_m) {
            return Err(invalid("bailout_m", "must be > 0"));
        }
        if let Some(px) = self.measurement_noise_px {
            if !positive(px) {
                return Err(invalid("measurement_noise_px", "must be > 0"));
            }
        }
        if !(0.0..=90.0).contains(&self.max_start_lat_deg) {
            return Err(invalid("max_start_lat_deg", "must lie in [0, 90]"));
        }
        self.camera.validate().map_err(|e| invalid("camera", e.to_string()))?;
        self.filter.validate().map_err(|e| match e {
            EkfError::InvalidParams(name) => invalid(&format!("filter.{name}"), "must be positive and finite"),
            other => invalid("filter", other.to_string()),
        })?;
        let m = &self.matching;
        if !(m.gate_px > 0.0 && m.inlier_tol_px > 0.0 && m.diameter_weight >= 0.0) {
            return Err(invalid("matching", "gate_px and inlier_tol_px must be > 0, diameter_weight ≥ 0"));
        }
        if m.min_pairs < 1 {
            return Err(invalid("matching.min_pairs", "must be at least 1"));
        }
        if m.iterations < 1 {
            return Err(invalid("matching.iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// Filter parameters with the measurement noise resolved for `profile`.
    pub fn resolved_filter(&self, profile: &DetectorProfile) -> FilterParams {
        let px = self
            .measurement_noise_px
            .unwrap_or_else(|| profile.center_noise_px.max(MIN_MEASUREMENT_NOISE_PX));
        FilterParams { measurement_std: px / self.camera.focal_px, ..self.filter }
    }
}

/// Shared, read-only inputs of a batch of trials.
#[derive(Debug, Clone)]
pub struct SimEnv {
    pub catalog: CraterCatalog,
    pub profiles: ProfileSet,
}

impl SimEnv {
    pub fn new(catalog: CraterCatalog, profiles: ProfileSet) -> Self {
        Self { catalog, profiles }
    }
}

/// Independent random streams of one trial.
pub(crate) struct TrialStreams {
    pub trajectory: ChaCha8Rng,
    pub imu: ChaCha8Rng,
    pub detector: ChaCha8Rng,
    pub ransac: ChaCha8Rng,
}

/// SplitMix64 finalizer; spreads (seed, index) pairs over the seed space.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix64(mix64(master) ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

impl TrialStreams {
    pub fn new(master: u64, trial: usize) -> Self {
        let seed = trial_seed(master, trial);
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        Self { trajectory: stream(0), imu: stream(1), detector: stream(2), ransac: stream(3) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn steps_is_floor() {
        let c = TrialConfig { duration_s: 500.0, dt: 2.5, ..Default::default() };
        assert_eq!(c.steps(), 200);
        let c = TrialConfig { duration_s: 6.0, dt: 2.5, ..Default::default() };
        assert_eq!(c.steps(), 2);
    }

    #[test]
    fn validation_names_keys() {
        let bad = |c: TrialConfig| match c.validate() {
            Err(SimError::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(bad(TrialConfig { dt: 0.0, ..Default::default() }), "dT");
        assert_eq!(bad(TrialConfig { duration_s: 1.0, ..Default::default() }), "duration_s");
        assert_eq!(bad(TrialConfig { altitude_m: -5.0, ..Default::default() }), "altitude_m");
        let mut c = TrialConfig::default();
        c.filter.feature_std_m = 0.0;
        assert_eq!(bad(c), "filter.feature_std_m");
        assert!(TrialConfig::default().validate().is_ok());
    }

    #[test]
    fn toml_uses_dt_key() {
        let c: TrialConfig = toml::from_str("dT = 1.0\nprofile = \"trinary\"").unwrap();
        assert_eq!(c.dt, 1.0);
        assert_eq!(c.profile, "trinary");
        assert!(toml::from_str::<TrialConfig>("dt = 1.0").is_err());
        let back: TrialConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut a = TrialStreams::new(9, 3);
        let mut b = TrialStreams::new(9, 3);
        let x: u64 = a.imu.random();
        assert_eq!(x, b.imu.random::<u64>());
        assert_ne!(a.detector.random::<u64>(), a.ransac.random::<u64>());
        assert_ne!(trial_seed(9, 3), trial_seed(9, 4));
        assert_ne!(trial_seed(9, 3), trial_seed(10, 3));
    }
}
