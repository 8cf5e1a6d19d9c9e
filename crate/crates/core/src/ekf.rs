//! Feature-augmenting extended Kalman filter.
//!
//! State layout is `[V_c, X_c, X_F1, …, X_FN]`: camera velocity and position
//! followed by one LCLF position per initialized crater feature, all in the
//! lunar-centered lunar-fixed frame. Propagation is the constant-acceleration
//! step driven by the measured acceleration; each re-observed feature
//! contributes a unit line-of-sight measurement
//! `z = (X_F − X_c) / ‖X_F − X_c‖`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::CraterRecord;
use crate::geometry::{CameraModel, CameraPose, Lclf};
use crate::matching::CraterMatch;

pub const CAMERA_DIM: usize = 6;
const VEL: usize = 0;
const POS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EkfError {
    #[error("feature `{0}` is already registered")]
    DuplicateFeature(String),
    #[error("unknown feature index {0}")]
    UnknownFeature(usize),
    #[error("observation for feature {index} is not unit norm (|z| = {norm})")]
    NonUnitObservation { index: usize, norm: f64 },
    #[error("degenerate geometry: feature {0} coincides with the camera")]
    DegenerateGeometry(usize),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("invalid filter parameter {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    /// White acceleration noise std per axis, m/s², applied over each step.
    pub accel_noise_std: f64,
    /// Isotropic std of each unit-vector component, radians.
    pub measurement_std: f64,
    /// Initial std of a newly added feature position, m.
    pub feature_std_m: f64,
    pub initial_velocity_std: f64,
    pub initial_position_std: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            accel_noise_std: 0.1,
            measurement_std: 1.5 / 320.0,
            feature_std_m: 100.0,
            initial_velocity_std: 0.1,
            initial_position_std: 1.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), EkfError> {
        let checks = [
            (self.accel_noise_std, "accel_noise_std"),
            (self.measurement_std, "measurement_std"),
            (self.feature_std_m, "feature_std_m"),
            (self.initial_velocity_std, "initial_velocity_std"),
            (self.initial_position_std, "initial_position_std"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EkfError::InvalidParams(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackStats {
    /// Frames in which the crater was matched.
    pub total: u32,
    /// Length of the current run of consecutive matched frames.
    pub consecutive: u32,
    pub longest_run: u32,
    pub last_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavState {
    x: DVector<f64>,
    p: DMatrix<f64>,
    features: Vec<String>,
    index: HashMap<String, usize>,
    step: u64,
    tracks: BTreeMap<String, TrackStats>,
}

/// Result of a measurement update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateReport {
    pub observations: usize,
    pub applied: bool,
    /// Innovation covariance was not positive definite; state untouched.
    pub singular: bool,
}

/// A crater match turned into a filter measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchObservation {
    pub feature: usize,
    pub z_obs: Vector3<f64>,
    /// The feature was created by this match.
    pub first_sighting: bool,
}

impl NavState {
    pub fn init(velocity: Vector3<f64>, position: Vector3<f64>, params: &FilterParams) -> Self {
        let mut x = DVector::zeros(CAMERA_DIM);
        x.fixed_rows_mut::<3>(VEL).copy_from(&velocity);
        x.fixed_rows_mut::<3>(POS).copy_from(&position);
        let mut p = DMatrix::zeros(CAMERA_DIM, CAMERA_DIM);
        for i in 0..3 {
            p[(VEL + i, VEL + i)] = params.initial_velocity_std.powi(2);
            p[(POS + i, POS + i)] = params.initial_position_std.powi(2);
        }
        Self { x, p, features: Vec::new(), index: HashMap::new(), step: 0, tracks: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(VEL).into_owned()
    }

    pub fn position(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(POS).into_owned()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.features
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn feature_position(&self, i: usize) -> Option<Vector3<f64>> {
        (i < self.features.len()).then(|| self.x.fixed_rows::<3>(feature_offset(i)).into_owned())
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn tracks(&self) -> &BTreeMap<String, TrackStats> {
        &self.tracks
    }

    /// Overwrites mean and covariance; dimensions must match.
    pub fn set_state(&mut self, x: DVector<f64>, p: DMatrix<f64>) {
        assert_eq!(x.len(), self.x.len());
        assert_eq!(p.shape(), self.p.shape());
        self.x = x;
        self.p = p;
    }

    /// Constant-acceleration step with measured acceleration `accel`.
    pub fn propagate(&mut self, accel: &Vector3<f64>, dt: f64, params: &FilterParams) -> Result<(), EkfError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EkfError::BadTimeStep(dt));
        }
        let v_prev = self.velocity();
        let x_prev = self.position();
        self.x.fixed_rows_mut::<3>(VEL).copy_from(&(v_prev + accel * dt));
        self.x.fixed_rows_mut::<3>(POS).copy_from(&(x_prev + v_prev * dt + accel * (dt * dt / 2.0)));

        // F acts on the camera block only: X += V·dT.
        let n = self.dim();
        for c in 0..n {
            for i in 0..3 {
                let v = self.p[(VEL + i, c)];
                self.p[(POS + i, c)] += dt * v;
            }
        }
        for r in 0..n {
            for i in 0..3 {
                let v = self.p[(r, VEL + i)];
                self.p[(r, POS + i)] += dt * v;
            }
        }
        // Q = σ² G Gᵀ with G = [dT·I; dT²/2·I]
        let q = params.accel_noise_std.powi(2);
        let (gv, gx) = (dt, dt * dt / 2.0);
        for i in 0..3 {
            self.p[(VEL + i, VEL + i)] += q * gv * gv;
            self.p[(POS + i, POS + i)] += q * gx * gx;
            self.p[(VEL + i, POS + i)] += q * gv * gx;
            self.p[(POS + i, VEL + i)] += q * gv * gx;
        }
        self.step += 1;
        Ok(())
    }

    /// Appends a catalog crater as a feature at its surface position.
    pub fn initialize_feature(&mut self, record: &CraterRecord, params: &FilterParams) -> Result<usize, EkfError> {
        if self.index.contains_key(&record.id) {
            return Err(EkfError::DuplicateFeature(record.id.clone()));
        }
        let n = self.dim();
        let pos = record.position();
        let x = self.x.clone().resize_vertically(n + 3, 0.0);
        self.x = x;
        self.x.fixed_rows_mut::<3>(n).copy_from(pos.vec());
        let mut p = self.p.clone().resize(n + 3, n + 3, 0.0);
        let var = params.feature_std_m.powi(2);
        for i in 0..3 {
            p[(n + i, n + i)] = var;
        }
        self.p = p;
        let k = self.features.len();
        self.features.push(record.id.clone());
        self.index.insert(record.id.clone(), k);
        Ok(k)
    }

    /// Predicted unit vector from the camera toward feature `i`.
    pub fn predict_measurement(&self, i: usize) -> Result<Vector3<f64>, EkfError> {
        let (z, _) = self.line_of_sight(i)?;
        Ok(z)
    }

    fn line_of_sight(&self, i: usize) -> Result<(Vector3<f64>, f64), EkfError> {
        let f = self.feature_position(i).ok_or(EkfError::UnknownFeature(i))?;
        let d = f - self.position();
        let r = d.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(EkfError::DegenerateGeometry(i));
        }
        Ok((d / r, r))
    }

    /// ∂z/∂X_c and ∂z/∂X_Fi for feature `i`; the latter is the negation of
    /// the former and all other columns are zero.
    pub fn measurement_jacobian(&self, i: usize) -> Result<(Matrix3<f64>, Matrix3<f64>), EkfError> {
        let (z, r) = self.line_of_sight(i)?;
        let proj = (Matrix3::identity() - z * z.transpose()) / r;
        Ok((-proj, proj))
    }

    /// Full 3×n observation rows for feature `i`.
    pub fn measurement_rows(&self, i: usize) -> Result<DMatrix<f64>, EkfError> {
        let (dc, df) = self.measurement_jacobian(i)?;
        let mut h = DMatrix::zeros(3, self.dim());
        h.fixed_view_mut::<3, 3>(0, POS).copy_from(&dc);
        h.fixed_view_mut::<3, 3>(0, feature_offset(i)).copy_from(&df);
        Ok(h)
    }

    /// Stacked update over the observed features (ascending registry order);
    /// unobserved features only move through their cross-covariance.
    pub fn update(&mut self, observations: &[(usize, Vector3<f64>)], params: &FilterParams) -> Result<UpdateReport, EkfError> {
        let mut obs: Vec<(usize, Vector3<f64>)> = observations.to_vec();
        obs.sort_by_key(|o| o.0);
        for &(i, z) in &obs {
            if i >= self.features.len() {
                return Err(EkfError::UnknownFeature(i));
            }
            let norm = z.norm();
            if !((norm - 1.0).abs() <= 1e-6) {
                return Err(EkfError::NonUnitObservation { index: i, norm });
            }
        }
        let m = obs.len();
        if m == 0 {
            return Ok(UpdateReport::default());
        }
        let n = self.dim();
        let mut h = DMatrix::zeros(3 * m, n);
        let mut y = DVector::zeros(3 * m);
        let mut cols: Vec<usize> = vec![POS, POS + 1, POS + 2];
        for (k, &(i, z_obs)) in obs.iter().enumerate() {
            let (z_hat, _) = self.line_of_sight(i)?;
            let (dc, df) = self.measurement_jacobian(i)?;
            h.fixed_view_mut::<3, 3>(3 * k, POS).copy_from(&dc);
            h.fixed_view_mut::<3, 3>(3 * k, feature_offset(i)).copy_from(&df);
            y.fixed_rows_mut::<3>(3 * k).copy_from(&(z_obs - z_hat));
            cols.extend(feature_offset(i)..feature_offset(i) + 3);
        }
        cols.sort_unstable();
        cols.dedup();

        let r_var = params.measurement_std.powi(2);
        // P Hᵀ using only the non-zero columns of H
        let mut pht = DMatrix::zeros(n, 3 * m);
        for &c in &cols {
            for row in 0..3 * m {
                let hv = h[(row, c)];
                if hv != 0.0 {
                    pht.column_mut(row).axpy(hv, &self.p.column(c), 1.0);
                }
            }
        }
        let mut s = DMatrix::zeros(3 * m, 3 * m);
        for &c in &cols {
            for a in 0..3 * m {
                let hv = h[(a, c)];
                if hv != 0.0 {
                    for b in 0..3 * m {
                        s[(a, b)] += hv * pht[(c, b)];
                    }
                }
            }
        }
        for d in 0..3 * m {
            s[(d, d)] += r_var;
        }
        s = (&s + s.transpose()) * 0.5;
        let chol = s.iter().all(|v| v.is_finite()).then(|| s.clone().cholesky()).flatten();
        let Some(chol) = chol else {
            return Ok(UpdateReport { observations: m, applied: false, singular: true });
        };
        // K = P Hᵀ S⁻¹
        let k_gain = chol.solve(&pht.transpose()).transpose();
        self.x += &k_gain * &y;

        // Joseph form (I − KH) P (I − KH)ᵀ + K R Kᵀ, applied as two rank-3m
        // corrections since KH is non-zero only in `cols`.
        let kh = sparse_cols_product(&k_gain, &h, &cols, n);
        let a_p = &self.p - &kh * &self.p;
        let mut joseph = &a_p - &a_p * kh.transpose();
        joseph += (&k_gain * k_gain.transpose()) * r_var;
        self.p = (&joseph + joseph.transpose()) * 0.5;
        Ok(UpdateReport { observations: m, applied: true, singular: false })
    }

    /// Converts a crater match into a line-of-sight observation, creating
    /// the feature on first sighting and updating its track statistics.
    /// `attitude` supplies the camera orientation used for back-projection.
    pub fn measure_from_match(
        &mut self,
        m: &CraterMatch,
        cam: &CameraModel,
        attitude: &CameraPose,
        params: &FilterParams,
    ) -> Result<Option<MatchObservation>, EkfError> {
        if !(m.detection.u.is_finite() && m.detection.v.is_finite()) {
            return Ok(None);
        }
        let Some(ray_cam) = cam.back_project(m.detection.u, m.detection.v) else {
            return Ok(None);
        };
        let z_obs = attitude.direction_to_lclf(&ray_cam).normalize();
        let (feature, first_sighting) = match self.feature_index(&m.record.id) {
            Some(i) => (i, false),
            None => (self.initialize_feature(&m.record, params)?, true),
        };
        let step = self.step;
        let t = self.tracks.entry(m.record.id.clone()).or_default();
        t.consecutive = if t.total > 0 && t.last_step + 1 == step { t.consecutive + 1 } else { 1 };
        t.total += 1;
        t.longest_run = t.longest_run.max(t.consecutive);
        t.last_step = step;
        Ok(Some(MatchObservation { feature, z_obs, first_sighting }))
    }

    /// Camera position as an LCLF point.
    pub fn camera_position(&self) -> Lclf {
        Lclf(self.position())
    }
}

/// K·H restricted to the columns where H is non-zero.
fn sparse_cols_product(k: &DMatrix<f64>, h: &DMatrix<f64>, cols: &[usize], n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for &c in cols {
        let col = k * h.column(c);
        out.set_column(c, &col);
    }
    out
}

pub fn feature_offset(i: usize) -> usize {
    CAMERA_DIM + 3 * i
}
