//! Lunar coordinate frames, nadir camera pose and pinhole projection.
//!
//! The Moon is modelled as a sphere of radius [`MOON_RADIUS_M`]. Positions are
//! expressed in the lunar-centered lunar-fixed (LCLF) Cartesian frame. The
//! camera frame has +Z along the boresight, +X toward increasing `u` (image
//! right) and +Y toward increasing `v` (image down).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean lunar radius in meters.
pub const MOON_RADIUS_M: f64 = 1_737_400.0;

/// Lunar gravitational parameter in m³/s².
pub const MOON_MU_M3_S2: f64 = 4.902_800_066e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid geodetic coordinate: {0}")]
    InvalidGeodetic(String),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("camera boresight does not intersect the lunar surface")]
    NoFootprint,
}

/// A position in the lunar-centered lunar-fixed frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lclf(pub Vector3<f64>);

impl Lclf {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn vec(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl From<Vector3<f64>> for Lclf {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}

/// Spherical latitude/longitude/radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    lat: f64,
    lon: f64,
    radius: f64,
}

/// Wrap an angle into (−π, π].
pub fn wrap_lon(lon: f64) -> f64 {
    let mut l = lon.rem_euclid(TAU);
    if l > PI {
        l -= TAU;
    }
    l
}

impl Geodetic {
    /// Builds a coordinate, normalizing longitude into (−π, π].
    pub fn new(lat: f64, lon: f64, radius: f64) -> Result<Self, GeometryError> {
        if !lat.is_finite() || !lon.is_finite() || !radius.is_finite() {
            return Err(GeometryError::InvalidGeodetic("non-finite component".into()));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&lat) {
            return Err(GeometryError::InvalidGeodetic(format!("latitude {lat} outside [-pi/2, pi/2]")));
        }
        if radius <= 0.0 {
            return Err(GeometryError::InvalidGeodetic(format!("radius {radius} must be positive")));
        }
        Ok(Self { lat, lon: wrap_lon(lon), radius })
    }

    /// Surface point at the reference lunar radius.
    pub fn surface(lat: f64, lon: f64) -> Result<Self, GeometryError> {
        Self::new(lat, lon, MOON_RADIUS_M)
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, radius: f64) -> Result<Self, GeometryError> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), radius)
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

pub fn geodetic_to_lclf(g: &Geodetic) -> Lclf {
    let (slat, clat) = g.lat.sin_cos();
    let (slon, clon) = g.lon.sin_cos();
    Lclf::new(g.radius * clat * clon, g.radius * clat * slon, g.radius * slat)
}

pub fn lclf_to_geodetic(p: &Lclf) -> Result<Geodetic, GeometryError> {
    let r = p.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(GeometryError::Degenerate("zero or non-finite position vector"));
    }
    let v = p.vec();
    let lat = (v.z / r).clamp(-1.0, 1.0).asin();
    let lon = v.y.atan2(v.x);
    Geodetic::new(lat, lon, r)
}

/// Pinhole intrinsics. Pixel origin is the top-left corner, `u` rightward,
/// `v` downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraModel {
    pub focal_px: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub cu: f64,
    pub cv: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self::centered(320.0, 256, 256)
    }
}

impl CameraModel {
    /// Camera with the principal point at the image center.
    pub fn centered(focal_px: f64, width_px: u32, height_px: u32) -> Self {
        Self {
            focal_px,
            width_px,
            height_px,
            cu: width_px as f64 / 2.0,
            cv: height_px as f64 / 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.focal_px > 0.0 && self.focal_px.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!("focal_px {} must be positive", self.focal_px)));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(GeometryError::InvalidCamera("image dimensions must be positive".into()));
        }
        if !(0.0..=self.width_px as f64).contains(&self.cu) || !(0.0..=self.height_px as f64).contains(&self.cv) {
            return Err(GeometryError::InvalidCamera("principal point outside image".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.width_px as f64
    }

    pub fn height(&self) -> f64 {
        self.height_px as f64
    }

    /// True when `(u, v)` lies inside the image inflated by `margin` (a
    /// fraction of the image size on each side).
    pub fn contains(&self, u: f64, v: f64, margin: f64) -> bool {
        let mu = margin * self.width();
        let mv = margin * self.height();
        u >= -mu && u <= self.width() + mu && v >= -mv && v <= self.height() + mv
    }

    /// Unit line of sight in the camera frame through pixel `(u, v)`.
    pub fn back_project(&self, u: f64, v: f64) -> Option<Vector3<f64>> {
        let ray = Vector3::new((u - self.cu) / self.focal_px, (v - self.cv) / self.focal_px, 1.0);
        let n = ray.norm();
        if !n.is_finite() {
            return None;
        }
        Some(ray / n)
    }
}

/// Camera position plus the rotation taking LCLF directions into the camera
/// frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Lclf,
    pub orientation: Rotation3<f64>,
}

impl CameraPose {
    /// Boresight direction expressed in LCLF.
    pub fn boresight(&self) -> Vector3<f64> {
        self.orientation.inverse() * Vector3::z()
    }

    pub fn to_camera(&self, p: &Lclf) -> Vector3<f64> {
        self.orientation * (p.0 - self.position.0)
    }

    pub fn direction_to_lclf(&self, d_cam: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * d_cam
    }
}

/// Nadir-pointing pose with image "up" along the projection of
/// `reference_north` onto the local horizontal plane.
pub fn nadir_pose(position: &Lclf, reference_north: &Vector3<f64>) -> Result<CameraPose, GeometryError> {
    let r = position.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(GeometryError::Degenerate("camera at the lunar center"));
    }
    let radial = position.0 / r;
    let north_horiz = reference_north - radial * reference_north.dot(&radial);
    let nh = north_horiz.norm();
    if nh < 1e-12 * reference_north.norm().max(1.0) {
        return Err(GeometryError::Degenerate("position collinear with reference north"));
    }
    let z_cam = -radial;
    let y_cam = -north_horiz / nh;
    let x_cam = y_cam.cross(&z_cam);
    let m = Matrix3::from_rows(&[x_cam.transpose(), y_cam.transpose(), z_cam.transpose()]);
    Ok(CameraPose {
        position: *position,
        orientation: Rotation3::from_matrix_unchecked(m),
    })
}

/// Projects without the image-rectangle test. `None` when the point is at or
/// behind the camera plane.
pub fn project_unclipped(point: &Lclf, pose: &CameraPose, cam: &CameraModel) -> Option<(f64, f64, f64)> {
    let pc = pose.to_camera(point);
    if pc.z <= 0.0 {
        return None;
    }
    Some((cam.cu + cam.focal_px * pc.x / pc.z, cam.cv + cam.focal_px * pc.y / pc.z, pc.z))
}

/// Pinhole projection; `None` when the point is behind the camera or falls
/// outside the image.
pub fn project(point: &Lclf, pose: &CameraPose, cam: &CameraModel) -> Option<(f64, f64)> {
    let (u, v, _) = project_unclipped(point, pose, cam)?;
    cam.contains(u, v, 0.0).then_some((u, v))
}

/// Latitude/longitude bounding box, radians, inclusive. When `lon_min >
/// lon_max` the box wraps across the ±π meridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLonBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl LatLonBox {
    pub fn full() -> Self {
        Self { lat_min: -FRAC_PI_2, lat_max: FRAC_PI_2, lon_min: -PI, lon_max: PI }
    }

    pub fn wraps(&self) -> bool {
        self.lon_min > self.lon_max
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        if lat < self.lat_min || lat > self.lat_max {
            return false;
        }
        if self.wraps() {
            lon >= self.lon_min || lon <= self.lon_max
        } else {
            lon >= self.lon_min && lon <= self.lon_max
        }
    }

    /// Longitude extent in radians.
    pub fn lon_span(&self) -> f64 {
        if self.wraps() {
            self.lon_max - self.lon_min + TAU
        } else {
            self.lon_max - self.lon_min
        }
    }

    /// Splits a wrapping box into its two non-wrapping halves.
    pub fn split(&self) -> Vec<LatLonBox> {
        if self.wraps() {
            vec![
                LatLonBox { lon_max: PI, ..*self },
                LatLonBox { lon_min: -PI, ..*self },
            ]
        } else {
            vec![*self]
        }
    }
}

fn ray_sphere(origin: &Vector3<f64>, dir: &Vector3<f64>, radius: f64) -> Option<Vector3<f64>> {
    let b = origin.dot(dir);
    let c = origin.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t > 0.0).then(|| origin + dir * t)
}

/// Ground intersection of the ray through pixel `(u, v)`.
pub fn pixel_ground_point(pose: &CameraPose, cam: &CameraModel, u: f64, v: f64, radius: f64) -> Option<Lclf> {
    let d_cam = cam.back_project(u, v)?;
    ray_sphere(&pose.position.0, &pose.direction_to_lclf(&d_cam), radius).map(Lclf)
}

const EDGE_SAMPLES: usize = 8;

/// Lat/lon box containing the ground footprint of the image, inflated by
/// `margin` times the span on each side.
pub fn footprint_bounds(pose: &CameraPose, cam: &CameraModel, radius: f64, margin: f64) -> Result<LatLonBox, GeometryError> {
    let origin = pose.position.0;
    if ray_sphere(&origin, &pose.boresight(), radius).is_none() {
        return Err(GeometryError::NoFootprint);
    }
    let (w, h) = (cam.width(), cam.height());
    let mut pixels = Vec::with_capacity(4 * EDGE_SAMPLES + 1);
    for i in 0..EDGE_SAMPLES {
        let f = i as f64 / EDGE_SAMPLES as f64;
        pixels.push((f * w, 0.0));
        pixels.push((w, f * h));
        pixels.push((w - f * w, h));
        pixels.push((0.0, h - f * h));
    }
    pixels.push((cam.cu, cam.cv));

    let mut lats = Vec::with_capacity(pixels.len());
    let mut lons = Vec::with_capacity(pixels.len());
    let mut missed = false;
    for (u, v) in pixels {
        match pixel_ground_point(pose, cam, u, v, radius) {
            Some(p) => {
                let g = lclf_to_geodetic(&p)?;
                lats.push(g.lat());
                lons.push(g.lon());
            }
            None => missed = true,
        }
    }
    if missed {
        // Part of the frustum sees past the limb: bound the whole visible cap.
        return Ok(cap_bounds(&pose.position, radius, margin));
    }

    let mut lat_min = lats.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lat_max = lats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lat_pad = margin * (lat_max - lat_min);
    lat_min -= lat_pad;
    lat_max += lat_pad;

    for pole_sign in [1.0, -1.0] {
        let pole = Lclf::new(0.0, 0.0, pole_sign * radius);
        if project(&pole, pose, cam).is_some() && surface_point_visible(&pole, &pose.position) {
            if pole_sign > 0.0 {
                lat_max = FRAC_PI_2;
            } else {
                lat_min = -FRAC_PI_2;
            }
            return Ok(LatLonBox { lat_min: lat_min.max(-FRAC_PI_2), lat_max: lat_max.min(FRAC_PI_2), lon_min: -PI, lon_max: PI });
        }
    }
    lat_min = lat_min.max(-FRAC_PI_2);
    lat_max = lat_max.min(FRAC_PI_2);

    let (lon_min, span) = covering_arc(&mut lons);
    let lon_pad = margin * span;
    if span + 2.0 * lon_pad >= TAU || lat_max >= FRAC_PI_2 || lat_min <= -FRAC_PI_2 {
        return Ok(LatLonBox { lat_min, lat_max, lon_min: -PI, lon_max: PI });
    }
    Ok(LatLonBox {
        lat_min,
        lat_max,
        lon_min: wrap_lon(lon_min - lon_pad),
        lon_max: wrap_lon(lon_min + span + lon_pad),
    })
}

fn surface_point_visible(p: &Lclf, camera: &Lclf) -> bool {
    (camera.0 - p.0).dot(&p.0) > 0.0
}

/// Smallest arc (start, length) covering all longitudes.
fn covering_arc(lons: &mut [f64]) -> (f64, f64) {
    lons.sort_by(f64::total_cmp);
    let n = lons.len();
    let mut best_gap = -1.0;
    let mut best_end = 0;
    for i in 0..n {
        let next = if i + 1 < n { lons[i + 1] } else { lons[0] + TAU };
        let gap = next - lons[i];
        if gap > best_gap {
            best_gap = gap;
            best_end = i;
        }
    }
    let start = lons[(best_end + 1) % n];
    (start, TAU - best_gap)
}

fn cap_bounds(position: &Lclf, radius: f64, margin: f64) -> LatLonBox {
    let r = position.norm();
    let half_angle = (radius / r).clamp(-1.0, 1.0).acos() * (1.0 + margin);
    let sub = lclf_to_geodetic(position).expect("camera position is non-zero");
    let lat_min = sub.lat() - half_angle;
    let lat_max = sub.lat() + half_angle;
    if lat_min <= -FRAC_PI_2 || lat_max >= FRAC_PI_2 {
        return LatLonBox { lat_min: lat_min.max(-FRAC_PI_2), lat_max: lat_max.min(FRAC_PI_2), lon_min: -PI, lon_max: PI };
    }
    let dlon = (half_angle.sin() / sub.lat().cos()).clamp(-1.0, 1.0).asin();
    if dlon >= FRAC_PI_2 {
        return LatLonBox { lat_min, lat_max, lon_min: -PI, lon_max: PI };
    }
    LatLonBox { lat_min, lat_max, lon_min: wrap_lon(sub.lon() - dlon), lon_max: wrap_lon(sub.lon() + dlon) }
}
