use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;

use super::TrialConfig;
use crate::geometry::{geodetic_to_lclf, Geodetic, MOON_MU_M3_S2, MOON_RADIUS_M};

/// Truth state at one sample. `accel` is the acceleration that carried the
/// previous sample to this one (zero for the first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t_s: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub accel: Vector3<f64>,
}

pub fn circular_speed(radius_m: f64) -> f64 {
    (MOON_MU_M3_S2 / radius_m).sqrt()
}

fn gravity(x: &Vector3<f64>) -> Vector3<f64> {
    let r = x.norm();
    -x * (MOON_MU_M3_S2 / (r * r * r))
}

/// Circular-orbit segment from a random start point and heading, stepped
/// with the same constant-acceleration update the filter uses, so the
/// filter's motion model is exact for the noise-free acceleration.
pub fn generate_trajectory<R: Rng + ?Sized>(cfg: &TrialConfig, rng: &mut R) -> Vec<TruthSample> {
    let max_lat = cfg.max_start_lat_deg.to_radians();
    let lat = if max_lat > 0.0 { rng.random_range(-max_lat..=max_lat) } else { 0.0 };
    let lon = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let heading = rng.random_range(0.0..TAU);
    let radius = MOON_RADIUS_M + cfg.altitude_m;

    let start = Geodetic::new(lat, lon, radius).expect("sampled start is valid");
    let position = geodetic_to_lclf(&start).0;
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    let north = Vector3::new(-sl * co, -sl * so, cl);
    let east = Vector3::new(-so, co, 0.0);
    let velocity = (north * heading.cos() + east * heading.sin()) * circular_speed(radius);

    let n = cfg.steps();
    let mut out = Vec::with_capacity(n);
    out.push(TruthSample { t_s: 0.0, position, velocity, accel: Vector3::zeros() });
    let dt = cfg.dt;
    for k in 1..n {
        let prev = out[k - 1];
        let a = gravity(&prev.position);
        out.push(TruthSample {
            t_s: k as f64 * dt,
            position: prev.position + prev.velocity * dt + a * (dt * dt / 2.0),
            velocity: prev.velocity + a * dt,
            accel: a,
        });
    }
    out
}
