//! Normal Captures: user-painted target normals stored as an equirectangular
//! RGB image, `n = 2·rgb/255 − 1`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Vec3;

/// Decoded vectors shorter than this cannot be renormalized reliably.
pub const MIN_DECODED_NORM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalCaptureImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl NormalCaptureImage {
    /// Row-major RGB8 data, row 0 at the north pole (+y).
    pub fn from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Decode("image is empty".into()));
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::Decode(format!(
                "{} bytes do not form a {width}x{height} RGB image",
                rgb.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: rgb.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        decode_normcap(&image::open(path)?.to_rgb8())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let img = image::RgbImage::from_raw(
            self.width as u32,
            self.height as u32,
            self.pixels.iter().flatten().copied().collect(),
        )
        .expect("pixel buffer matches dimensions");
        img.save(path)?;
        Ok(())
    }

    /// An image encoding some field `f(d)` sampled at pixel centers.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                pixels.push(encode_normal(&f(&pixel_direction(i, j, width, height))));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// The analytic sphere: every direction maps to itself.
    pub fn identity(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |d| *d)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    /// Overwrites the `w × h` rectangle at `(x, y)` with row-major RGB data.
    pub fn paint(&mut self, x: usize, y: usize, w: usize, h: usize, rgb: &[u8]) -> Result<()> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::Decode(format!(
                "patch {w}x{h} at ({x}, {y}) exceeds the {}x{} canvas",
                self.width, self.height
            )));
        }
        if rgb.len() != w * h * 3 {
            return Err(Error::Decode(format!(
                "patch needs {} bytes, got {}",
                w * h * 3,
                rgb.len()
            )));
        }
        for r in 0..h {
            for c in 0..w {
                let k = (r * w + c) * 3;
                self.pixels[(y + r) * self.width + x + c] = [rgb[k], rgb[k + 1], rgb[k + 2]];
            }
        }
        Ok(())
    }

    fn decoded(&self, x: usize, y: usize) -> Vec3 {
        let [r, g, b] = self.pixel(x, y);
        Vec3::new(r as f64, g as f64, b as f64) * (2.0 / 255.0) - Vec3::repeat(1.0)
    }

    /// Bilinear lookup at the equirectangular position of `d`
    /// (longitude `atan2(d_z, d_x)`, latitude `asin(d_y)`), renormalized.
    pub fn lookup(&self, d: &Vec3) -> Result<Vec3> {
        let lon = d.z.atan2(d.x);
        let lat = d.y.clamp(-1.0, 1.0).asin();
        let u = (lon + PI) / TAU * self.width as f64 - 0.5;
        let v = (FRAC_PI_2 - lat) / PI * self.height as f64 - 0.5;
        let x0 = u.floor();
        let fx = u - x0;
        let y0 = v.floor();
        let fy = v - y0;
        let wrap = |x: f64| (x as i64).rem_euclid(self.width as i64) as usize;
        let clamp = |y: f64| (y.max(0.0) as usize).min(self.height - 1);
        let (xa, xb) = (wrap(x0), wrap(x0 + 1.0));
        let (ya, yb) = (clamp(y0), clamp(y0 + 1.0));
        let n = self.decoded(xa, ya) * ((1.0 - fx) * (1.0 - fy))
            + self.decoded(xb, ya) * (fx * (1.0 - fy))
            + self.decoded(xa, yb) * ((1.0 - fx) * fy)
            + self.decoded(xb, yb) * (fx * fy);
        let len = n.norm();
        if len < MIN_DECODED_NORM {
            return Err(Error::Decode(format!(
                "direction ({:.3}, {:.3}, {:.3}) decodes to a near-zero normal (|n| = {len:.4})",
                d.x, d.y, d.z
            )));
        }
        Ok(n / len)
    }
}

/// Wraps a decoded RGB image as a normal capture.
pub fn decode_normcap(image: &image::RgbImage) -> Result<NormalCaptureImage> {
    NormalCaptureImage::from_rgb(image.width() as usize, image.height() as usize, image.as_raw())
}

pub fn lookup_normcap(img: &NormalCaptureImage, d: &Vec3) -> Result<Vec3> {
    img.lookup(d)
}

/// Inverse of the decode: `rgb = round((n + 1)/2 · 255)`.
pub fn encode_normal(n: &Vec3) -> [u8; 3] {
    let q = |c: f64| ((c.clamp(-1.0, 1.0) + 1.0) * 0.5 * 255.0).round() as u8;
    [q(n.x), q(n.y), q(n.z)]
}

/// Direction through the center of pixel `(i, j)`.
pub fn pixel_direction(i: usize, j: usize, width: usize, height: usize) -> Vec3 {
    let lon = (i as f64 + 0.5) / width as f64 * TAU - PI;
    let lat = FRAC_PI_2 - (j as f64 + 0.5) / height as f64 * PI;
    Vec3::new(lat.cos() * lon.cos(), lat.sin(), lat.cos() * lon.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image() {
        let img = NormalCaptureImage::from_rgb(4, 2, &[255, 128, 128].repeat(8)).unwrap();
        for d in [Vec3::x(), -Vec3::y(), Vec3::new(0.3, 0.4, -0.866).normalize()] {
            let n = img.lookup(&d).unwrap();
            assert!((n - Vec3::x()).norm() < 1e-2, "{n:?}");
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mid_gray_is_decode_error() {
        let img = NormalCaptureImage::from_rgb(2, 2, &[128; 12]).unwrap();
        assert!(matches!(img.lookup(&Vec3::z()), Err(Error::Decode(_))));
    }

    #[test]
    fn empty_image_rejected() {
        assert!(NormalCaptureImage::from_rgb(0, 3, &[]).is_err());
        assert!(NormalCaptureImage::from_rgb(2, 2, &[0; 5]).is_err());
    }

    #[test]
    fn identity_round_trip_away_from_poles() {
        let img = NormalCaptureImage::identity(256, 128);
        let mut worst: f64 = 0.0;
        for k in 0..4000 {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / 4000.0;
            let r = (1.0 - z * z).sqrt();
            let t = k as f64 * 2.399_963_229_728_653;
            // y is the pole axis of the capture
            let d = Vec3::new(r * t.cos(), z, r * t.sin());
            if d.y.abs() > 0.95 {
                continue;
            }
            let n = img.lookup(&d).unwrap();
            worst = worst.max(n.dot(&d).clamp(-1.0, 1.0).acos().to_degrees());
        }
        assert!(worst < 2.0, "worst error {worst}°");
    }

    #[test]
    fn longitude_wraps() {
        let img = NormalCaptureImage::identity(64, 32);
        let n = img.lookup(&Vec3::new(-1.0, 0.0, 1e-9).normalize()).unwrap();
        assert!(n.dot(&-Vec3::x()) > 0.99);
    }

    #[test]
    fn paint_patch() {
        let mut img = NormalCaptureImage::identity(8, 4);
        img.paint(2, 1, 2, 2, &[255, 128, 128].repeat(4)).unwrap();
        assert_eq!(img.pixel(3, 2), [255, 128, 128]);
        assert!(img.paint(7, 0, 2, 1, &[0; 6]).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cap.png");
        let img = NormalCaptureImage::identity(16, 8);
        img.save_png(&path).unwrap();
        assert_eq!(NormalCaptureImage::load_png(&path).unwrap(), img);
    }
}
