use std::collections::{BTreeSet, HashSet};
use std::fmt;

use nalgebra::Vector3;
use rand_distr::{Distribution, Normal};

use super::{generate_trajectory, SimEnv, SimError, TrialConfig, TrialStreams};
use crate::detect::{simulate_detections, DetectedCrater, VisibleCrater};
use crate::ekf::NavState;
use crate::geometry::{nadir_pose, CameraPose, Lclf};
use crate::matching::{expected_craters, identify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepFlag {
    Ok,
    /// Fewer pairs than RANSAC needs; all pairs were accepted.
    LowConfidence,
    /// Innovation covariance was not positive definite; update skipped.
    SingularUpdate,
    /// Position error exceeded the bail-out threshold; trial stopped here.
    Diverged,
}

impl StepFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepFlag::Ok => "ok",
            StepFlag::LowConfidence => "low_confidence",
            StepFlag::SingularUpdate => "singular",
            StepFlag::Diverged => "diverged",
        }
    }
}

impl fmt::Display for StepFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t_s: f64,
    pub pos_err_m: f64,
    pub vel_err_mps: f64,
    /// Catalog matches accepted this step, first sightings included.
    pub n_matched: usize,
    pub n_rejected: usize,
    pub n_visible: usize,
    pub state_dim: usize,
    pub flag: StepFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub records: Vec<StepRecord>,
    pub final_pos_err_m: f64,
    pub final_vel_err_mps: f64,
    pub diverged: bool,
    /// Frames in which each matched crater was matched, in registry order.
    pub track_lengths: Vec<u32>,
    /// Distinct catalog craters matched over the trajectory.
    pub craters: usize,
    pub detections: usize,
    /// Accepted matches whose detection did not come from that crater.
    pub wrong_matches: usize,
}

impl TrialResult {
    pub fn mean_track_len(&self) -> f64 {
        if self.track_lengths.is_empty() {
            return 0.0;
        }
        self.track_lengths.iter().map(|&t| t as f64).sum::<f64>() / self.track_lengths.len() as f64
    }
}

fn north_pole() -> Vector3<f64> {
    Vector3::z()
}

fn pose_at(position: &Vector3<f64>) -> Result<CameraPose, SimError> {
    Ok(nadir_pose(&Lclf(*position), &north_pole())?)
}

/// One closed-loop trajectory: noisy IMU propagation, simulated detections
/// from the true pose, identification against the estimated pose, and
/// line-of-sight updates for re-observed craters.
pub fn run_trial(cfg: &TrialConfig, trial: usize, env: &SimEnv) -> Result<TrialResult, SimError> {
    cfg.validate()?;
    let profile = env.profiles.get(&cfg.profile)?;
    let fparams = cfg.resolved_filter(profile);
    let mut rng = TrialStreams::new(cfg.seed, trial);
    let truth = generate_trajectory(cfg, &mut rng.trajectory);
    let imu_noise = (cfg.imu_noise_std > 0.0).then(|| Normal::new(0.0, cfg.imu_noise_std).expect("validated std"));
    let cam = &cfg.camera;

    let mut state = NavState::init(truth[0].velocity, truth[0].position, &fparams);
    let mut detected_ids: HashSet<String> = HashSet::new();
    let mut matched_ids: BTreeSet<String> = BTreeSet::new();
    let mut records = Vec::with_capacity(truth.len());
    let (mut detections, mut wrong_matches) = (0, 0);
    let mut diverged = false;

    for (k, sample) in truth.iter().enumerate() {
        if k > 0 {
            let mut u = sample.accel;
            if let Some(noise) = &imu_noise {
                u += Vector3::from_fn(|_, _| noise.sample(&mut rng.imu));
            }
            state.propagate(&u, cfg.dt, &fparams)?;
        }

        let true_pose = pose_at(&sample.position)?;
        let expected_true = expected_craters(&true_pose, cam, &env.catalog, &cfg.matching)?;
        let visible: Vec<VisibleCrater> = expected_true
            .iter()
            .map(|e| VisibleCrater {
                record: e.record,
                projected: DetectedCrater::circle(e.u, e.v, e.diameter_px),
                in_view: cam.contains(e.u, e.v, 0.0),
            })
            .collect();
        let n_visible = visible.iter().filter(|v| v.in_view).count();
        let sims = simulate_detections(&visible, &detected_ids, profile, cfg.brightness, cam, &mut rng.detector);
        detected_ids.extend(sims.iter().filter_map(|s| s.true_id.clone()));
        let dets: Vec<DetectedCrater> = sims.iter().map(|s| s.detection).collect();
        detections += dets.len();

        let est_pose = pose_at(&state.position())?;
        let ident = identify(&dets, &est_pose, cam, &env.catalog, &cfg.matching, &mut rng.ransac)?;
        let mut observations = Vec::new();
        for m in &ident.matches {
            if sims[m.detection_index].true_id.as_deref() != Some(m.record.id.as_str()) {
                wrong_matches += 1;
            }
            matched_ids.insert(m.record.id.clone());
            if let Some(obs) = state.measure_from_match(m, cam, &true_pose, &fparams)? {
                if !obs.first_sighting {
                    observations.push((obs.feature, obs.z_obs));
                }
            }
        }
        let report = state.update(&observations, &fparams)?;

        let pos_err_m = (state.position() - sample.position).norm();
        let vel_err_mps = (state.velocity() - sample.velocity).norm();
        let flag = if !(pos_err_m <= cfg.bailout_m) {
            diverged = true;
            StepFlag::Diverged
        } else if report.singular {
            StepFlag::SingularUpdate
        } else if ident.diagnostics.low_confidence {
            StepFlag::LowConfidence
        } else {
            StepFlag::Ok
        };
        records.push(StepRecord {
            t_s: sample.t_s,
            pos_err_m,
            vel_err_mps,
            n_matched: ident.matches.len(),
            n_rejected: ident.diagnostics.outliers,
            n_visible,
            state_dim: state.dim(),
            flag,
        });
        if diverged {
            break;
        }
    }

    let last = records.last().expect("at least one step");
    let track_lengths = state.feature_ids().iter().map(|id| state.tracks()[id].total).collect();
    Ok(TrialResult {
        trial,
        final_pos_err_m: last.pos_err_m,
        final_vel_err_mps: last.vel_err_mps,
        records,
        diverged,
        track_lengths,
        craters: matched_ids.len(),
        detections,
        wrong_matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SyntheticCatalog;
    use crate::detect::ProfileSet;
    use std::sync::OnceLock;

    fn env() -> &'static SimEnv {
        static ENV: OnceLock<SimEnv> = OnceLock::new();
        ENV.get_or_init(|| SimEnv::new(SyntheticCatalog::default().generate(), ProfileSet::presets()))
    }

    fn short(profile: &str) -> TrialConfig {
        TrialConfig { duration_s: 100.0, profile: profile.into(), seed: 5, ..Default::default() }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = short("lunanet");
        assert_eq!(run_trial(&cfg, 2, env()).unwrap(), run_trial(&cfg, 2, env()).unwrap());
        assert_ne!(run_trial(&cfg, 2, env()).unwrap(), run_trial(&cfg, 3, env()).unwrap());
    }

    #[test]
    fn noise_free_run_stays_on_truth() {
        let cfg = TrialConfig { imu_noise_std: 0.0, profile: "perfect".into(), ..short("perfect") };
        for trial in 0..3 {
            let r = run_trial(&cfg, trial, env()).unwrap();
            assert_eq!(r.records.len(), cfg.steps());
            assert!(r.final_pos_err_m < 1e-3, "{}", r.final_pos_err_m);
            assert_eq!(r.wrong_matches, 0);
            for s in &r.records {
                assert_eq!(s.n_matched, s.n_visible);
                assert_eq!(s.n_rejected, 0);
            }
        }
    }

    #[test]
    fn records_are_well_formed() {
        let cfg = short("trinary");
        let r = run_trial(&cfg, 0, env()).unwrap();
        assert!(r.records.len() == cfg.steps() || r.diverged);
        for (k, s) in r.records.iter().enumerate() {
            assert_eq!(s.t_s, k as f64 * cfg.dt);
            assert!(s.pos_err_m.is_finite() && s.pos_err_m >= 0.0);
            assert!(s.vel_err_mps.is_finite() && s.vel_err_mps >= 0.0);
            assert_eq!((s.state_dim - 6) % 3, 0);
        }
        assert_eq!(r.track_lengths.len(), r.craters);
    }

    #[test]
    fn tiny_bailout_flags_divergence() {
        let cfg = TrialConfig { bailout_m: 1e-9, ..short("trinary") };
        let r = run_trial(&cfg, 0, env()).unwrap();
        assert!(r.diverged);
        assert_eq!(r.records.last().unwrap().flag, StepFlag::Diverged);
        assert!(r.records.len() < cfg.steps());
    }

    #[test]
    fn unknown_profile_is_an_error() {
        assert!(matches!(run_trial(&short("nope"), 0, env()), Err(SimError::Profile(_))));
    }
}
