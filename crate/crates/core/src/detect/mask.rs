//! Rim-prediction masks and the morphological steps that turn them into
//! pixel chains.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("mask dimensions must be positive (got {0}x{1})")]
    EmptyDimensions(usize, usize),
    #[error("pixel buffer has {got} bytes, expected {expected}")]
    BufferSize { got: usize, expected: usize },
    #[error("crater center ({0}, {1}) outside the {2}x{3} image")]
    OutOfBounds(f64, f64, usize, usize),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
}

/// 8-bit grayscale image, row-major. Used both for raw rim predictions and
/// for binary (0/255) masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMask {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl PredictionMask {
    pub fn new(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::EmptyDimensions(width, height));
        }
        Ok(Self { width, height, pixels: vec![0; width * height] })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::EmptyDimensions(width, height));
        }
        if pixels.len() != width * height {
            return Err(MaskError::BufferSize { got: pixels.len(), expected: width * height });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn count_nonzero(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Multiplies every pixel by `factor`, saturating at 255.
    pub fn scaled(&self, factor: f64) -> Self {
        let pixels = self.pixels.iter().map(|&p| (p as f64 * factor).round().clamp(0.0, 255.0) as u8).collect();
        Self { pixels, ..*self }
    }

    #[inline]
    fn on(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize) != 0
    }
}

/// Sets pixels whose certainty `intensity / 255` strictly exceeds
/// `certainty` to 255 and everything else to 0.
pub fn threshold_mask(m: &PredictionMask, certainty: f64) -> PredictionMask {
    let pixels = m
        .pixels
        .iter()
        .map(|&p| if p as f64 / 255.0 > certainty { 255 } else { 0 })
        .collect();
    PredictionMask { pixels, ..*m }
}

// Neighbours P2..P9, clockwise from north.
const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Zhang–Suen thinning to 1-pixel-wide, 8-connected curves.
pub fn erode_to_rims(binary: &PredictionMask) -> PredictionMask {
    let mut img = binary.clone();
    for p in img.pixels.iter_mut() {
        *p = if *p != 0 { 255 } else { 0 };
    }
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for y in 0..img.height as isize {
                for x in 0..img.width as isize {
                    if !img.on(x, y) {
                        continue;
                    }
                    let n: [bool; 8] = std::array::from_fn(|k| img.on(x + RING[k].0, y + RING[k].1));
                    let b = n.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                    let ok = if pass == 0 {
                        !(p2 && p4 && p6) && !(p4 && p6 && p8)
                    } else {
                        !(p2 && p4 && p8) && !(p2 && p6 && p8)
                    };
                    if ok {
                        doomed.push((x as usize, y as usize));
                    }
                }
            }
            for &(x, y) in &doomed {
                img.set(x, y, 0);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            return img;
        }
    }
}

/// One 8-connected component of a skeleton, pixels in raster order of
/// discovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelChain {
    pub pixels: Vec<(u32, u32)>,
}

impl PixelChain {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// 8-connected components with at least `min_pixels` pixels.
pub fn extract_contours(skeleton: &PredictionMask, min_pixels: usize) -> Vec<PixelChain> {
    let (w, h) = (skeleton.width, skeleton.height);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if seen[y * w + x] || skeleton.get(x, y) == 0 {
                continue;
            }
            seen[y * w + x] = true;
            queue.push_back((x, y));
            let mut pixels = Vec::new();
            while let Some((cx, cy)) = queue.pop_front() {
                pixels.push((cx as u32, cy as u32));
                for (dx, dy) in RING {
                    let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                    if skeleton.on(nx, ny) {
                        let idx = ny as usize * w + nx as usize;
                        if !seen[idx] {
                            seen[idx] = true;
                            queue.push_back((nx as usize, ny as usize));
                        }
                    }
                }
            }
            if pixels.len() >= min_pixels {
                out.push(PixelChain { pixels });
            }
        }
    }
    out
}

/// A ring to draw: center and radius in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub u: f64,
    pub v: f64,
    pub radius: f64,
}

/// Draws annuli `|dist - radius| <= thickness / 2` at `intensity` on a black
/// background. Overlapping rings are unioned.
pub fn render_rim_mask(width: usize, height: usize, rings: &[Ring], thickness: f64, intensity: u8) -> Result<PredictionMask, MaskError> {
    let mut m = PredictionMask::new(width, height)?;
    if !(thickness > 0.0) {
        return Err(MaskError::InvalidRing(format!("thickness {thickness} must be positive")));
    }
    let half = thickness / 2.0;
    for r in rings {
        if !(r.u >= 0.0 && r.u < width as f64 && r.v >= 0.0 && r.v < height as f64) {
            return Err(MaskError::OutOfBounds(r.u, r.v, width, height));
        }
        if !(r.radius > 0.0) {
            return Err(MaskError::InvalidRing(format!("radius {} must be positive", r.radius)));
        }
        let reach = r.radius + half + 1.0;
        let x0 = (r.u - reach).floor().max(0.0) as usize;
        let x1 = ((r.u + reach).ceil() as usize).min(width - 1);
        let y0 = (r.v - reach).floor().max(0.0) as usize;
        let y1 = ((r.v + reach).ceil() as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - r.u).powi(2) + (y as f64 - r.v).powi(2)).sqrt();
                if (d - r.radius).abs() <= half {
                    let p = &mut m.pixels[y * width + x];
                    *p = (*p).max(intensity);
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Midpoint-circle raster: 8-connected, one pixel wide.
    pub(crate) fn midpoint_ring(w: usize, h: usize, cx: i64, cy: i64, r: i64) -> PredictionMask {
        let mut m = PredictionMask::new(w, h).unwrap();
        let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
        while x >= y {
            for (dx, dy) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
                m.set((cx + dx) as usize, (cy + dy) as usize, 255);
            }
            y += 1;
            if err < 0 {
                err += 2 * y + 1;
            } else {
                x -= 1;
                err += 2 * (y - x) + 1;
            }
        }
        m
    }

    #[test]
    fn threshold_boundaries() {
        let m = PredictionMask::from_pixels(4, 1, vec![0, 229, 230, 255]).unwrap();
        let t = threshold_mask(&m, 0.90);
        assert_eq!(t.pixels(), &[0, 0, 255, 255]);
        assert_eq!(threshold_mask(&t, 0.90), t);
        let z = PredictionMask::new(3, 3).unwrap();
        assert_eq!(threshold_mask(&z, 0.9), z);
    }

    #[test]
    fn thin_ring_unchanged() {
        let m = midpoint_ring(64, 64, 32, 32, 15);
        assert_eq!(erode_to_rims(&m), m);
    }

    #[test]
    fn blank_stays_blank() {
        let m = PredictionMask::new(16, 16).unwrap();
        assert_eq!(erode_to_rims(&m), m);
        assert!(extract_contours(&m, 3).is_empty());
    }

    #[test]
    fn thick_ring_thins_with_same_topology() {
        let rings = [Ring { u: 40.0, v: 40.0, radius: 20.0 }, Ring { u: 100.0, v: 60.0, radius: 12.0 }];
        let m = render_rim_mask(140, 100, &rings, 3.0, 255).unwrap();
        let before = extract_contours(&m, 1).len();
        let s = erode_to_rims(&m);
        assert_eq!(extract_contours(&s, 1).len(), before);
        assert_eq!(before, 2);
        // 1-px wide: no pixel has a full 2x2 block of set pixels
        for y in 0..s.height() - 1 {
            for x in 0..s.width() - 1 {
                let block = [s.get(x, y), s.get(x + 1, y), s.get(x, y + 1), s.get(x + 1, y + 1)];
                assert!(block.contains(&0), "2x2 block at ({x},{y})");
            }
        }
        // each thinned ring is a closed curve: every pixel has exactly two neighbours
        for y in 0..s.height() as isize {
            for x in 0..s.width() as isize {
                if s.on(x, y) {
                    let n = RING.iter().filter(|(dx, dy)| s.on(x + dx, y + dy)).count();
                    assert!(n >= 2, "endpoint at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn contour_size_rule() {
        let mut m = PredictionMask::new(10, 10).unwrap();
        m.set(1, 1, 255);
        m.set(7, 7, 255);
        assert!(extract_contours(&m, 3).is_empty());
        // two pixels connected is still below three
        m.set(2, 2, 255);
        assert!(extract_contours(&m, 3).is_empty());
        m.set(3, 3, 255);
        assert_eq!(extract_contours(&m, 3).len(), 1);
    }

    #[test]
    fn ring_chain_length() {
        // Generator oracle: count the pixels drawn by the midpoint raster.
        let m = midpoint_ring(64, 64, 30, 30, 7);
        let drawn = m.count_nonzero();
        assert_eq!(drawn, 40);
        let c = extract_contours(&m, 3);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 40);
    }

    #[test]
    fn render_area_close_to_annulus() {
        for (r, t) in [(10.0, 3.0), (25.0, 2.0), (40.0, 3.0)] {
            let m = render_rim_mask(128, 128, &[Ring { u: 64.3, v: 63.8, radius: r }], t, 255).unwrap();
            let area = 2.0 * std::f64::consts::PI * r * t;
            let n = m.count_nonzero() as f64;
            assert!((n - area).abs() / area < 0.2, "r={r} t={t}: {n} vs {area}");
        }
        assert_eq!(render_rim_mask(8, 8, &[], 2.0, 255).unwrap().count_nonzero(), 0);
        assert!(matches!(render_rim_mask(8, 8, &[Ring { u: 9.0, v: 1.0, radius: 2.0 }], 2.0, 255), Err(MaskError::OutOfBounds(..))));
    }

    #[test]
    fn overlapping_rings_union() {
        let a = Ring { u: 30.0, v: 30.0, radius: 10.0 };
        let b = Ring { u: 38.0, v: 30.0, radius: 10.0 };
        let ma = render_rim_mask(64, 64, &[a], 2.0, 255).unwrap();
        let mb = render_rim_mask(64, 64, &[b], 2.0, 255).unwrap();
        let both = render_rim_mask(64, 64, &[a, b], 2.0, 255).unwrap();
        let union = ma.pixels().iter().zip(mb.pixels()).filter(|(x, y)| **x != 0 || **y != 0).count();
        assert_eq!(both.count_nonzero(), union);
    }
}
