//! Direct least-squares ellipse fitting (Fitzgibbon's constrained conic fit,
//! in Halíř and Flusser's numerically stable partitioned form).

use nalgebra::{Matrix3, SymmetricEigen, Vector3, Vector6};

/// Ellipse with full axis lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cu: f64,
    pub cv: f64,
    pub major: f64,
    pub minor: f64,
    /// Angle of the major axis from the +u axis, radians in (−π/2, π/2].
    pub theta: f64,
}

/// Fits an ellipse to at least five points. Returns `None` when the points
/// are degenerate or the best conic is not an ellipse.
pub fn fit_ellipse_direct(points: &[(f64, f64)]) -> Option<Ellipse> {
    if points.len() < 5 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let scale = (points.iter().map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2)).sum::<f64>() / n).sqrt();
    if !(scale > 0.0) {
        return None;
    }

    // Scatter blocks of the design matrix [x², xy, y² | x, y, 1].
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    let mut s3 = Matrix3::zeros();
    for &(px, py) in points {
        let x = (px - mx) / scale;
        let y = (py - my) / scale;
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }
    let s3_inv = s3.try_inverse()?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // premultiply by C1⁻¹ for C1 = [[0,0,2],[0,-1,0],[2,0,0]]
    let m = Matrix3::from_rows(&[
        (m.row(2) / 2.0).into_owned(),
        (-m.row(1)).into_owned(),
        (m.row(0) / 2.0).into_owned(),
    ]);

    let a1 = best_ellipse_eigenvector(&m)?;
    let a2 = t * a1;
    let conic = Vector6::new(a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]);
    let e = conic_to_ellipse(&conic)?;
    Some(Ellipse {
        cu: e.cu * scale + mx,
        cv: e.cv * scale + my,
        major: e.major * scale,
        minor: e.minor * scale,
        theta: e.theta,
    })
}

/// Eigenvector of the reduced 3×3 system satisfying 4ac − b² > 0.
fn best_ellipse_eigenvector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let eigenvalues = m.complex_eigenvalues();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for ev in eigenvalues.iter() {
        if ev.im.abs() > 1e-9 * (1.0 + ev.re.abs()) {
            continue;
        }
        let Some(v) = null_vector(&(m - Matrix3::identity() * ev.re)) else { continue };
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 {
            let v = v / cond.sqrt();
            // Among admissible solutions keep the one with the smallest residual |λ|.
            if best.as_ref().is_none_or(|(l, _)| ev.re.abs() < l.abs()) {
                best = Some((ev.re, v));
            }
        }
    }
    best.map(|(_, v)| v)
}

fn null_vector(a: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let (k, _) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1))?;
    let v = eig.eigenvectors.column(k).into_owned();
    v.iter().all(|c| c.is_finite()).then_some(v)
}

/// Geometric parameters of `a x² + b xy + c y² + d x + e y + f = 0`.
pub fn conic_to_ellipse(k: &Vector6<f64>) -> Option<Ellipse> {
    let (a, b, c, d, e, f) = (k[0], k[1], k[2], k[3], k[4], k[5]);
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        return None;
    }
    let cu = (2.0 * c * d - b * e) / disc;
    let cv = (2.0 * a * e - b * d) / disc;
    // value of the conic at the center
    let f0 = a * cu * cu + b * cu * cv + c * cv * cv + d * cu + e * cv + f;
    let root = ((a - c).powi(2) + b * b).sqrt();
    let l1 = (a + c + root) / 2.0;
    let l2 = (a + c - root) / 2.0;
    // x'ᵀ diag(l) x' = −f0 along the principal axes
    let s1 = -f0 / l1;
    let s2 = -f0 / l2;
    if !(s1 > 0.0 && s2 > 0.0) {
        return None;
    }
    let (r1, r2) = (s1.sqrt(), s2.sqrt());
    // eigenvector for l2 (larger semi-axis when f0 < 0 and l2 < l1)
    let theta_l1 = 0.5 * b.atan2(a - c);
    let (major, minor, mut theta) = if r1 >= r2 {
        (r1, r2, theta_l1)
    } else {
        (r2, r1, theta_l1 + std::f64::consts::FRAC_PI_2)
    };
    if theta > std::f64::consts::FRAC_PI_2 {
        theta -= std::f64::consts::PI;
    }
    if theta <= -std::f64::consts::FRAC_PI_2 {
        theta += std::f64::consts::PI;
    }
    Some(Ellipse { cu, cv, major: 2.0 * major, minor: 2.0 * minor, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, TAU};

    fn sample(cu: f64, cv: f64, a: f64, b: f64, th: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                let (x, y) = (a * t.cos(), b * t.sin());
                (cu + x * th.cos() - y * th.sin(), cv + x * th.sin() + y * th.cos())
            })
            .collect()
    }

    #[test]
    fn exact_circle() {
        let e = fit_ellipse_direct(&sample(50.0, 40.0, 20.0, 20.0, 0.0, 36)).unwrap();
        assert_relative_eq!(e.cu, 50.0, epsilon = 1e-8);
        assert_relative_eq!(e.cv, 40.0, epsilon = 1e-8);
        assert_relative_eq!(e.major, 40.0, epsilon = 1e-8);
        assert_relative_eq!(e.minor, 40.0, epsilon = 1e-8);
    }

    #[test]
    fn rotated_ellipse() {
        let e = fit_ellipse_direct(&sample(10.0, -5.0, 30.0, 10.0, FRAC_PI_4, 50)).unwrap();
        assert_relative_eq!(e.cu, 10.0, epsilon = 1e-7);
        assert_relative_eq!(e.cv, -5.0, epsilon = 1e-7);
        assert_relative_eq!(e.major, 60.0, epsilon = 1e-7);
        assert_relative_eq!(e.minor, 20.0, epsilon = 1e-7);
        assert_relative_eq!(e.theta, FRAC_PI_4, epsilon = 1e-7);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_ellipse_direct(&[(0.0, 0.0); 4]).is_none());
        assert!(fit_ellipse_direct(&[(0.0, 0.0); 8]).is_none());
        let line: Vec<_> = (0..10).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(fit_ellipse_direct(&line).is_none());
    }
}
