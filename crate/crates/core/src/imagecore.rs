//! Raster decoding, bilinear resizing and Sobel gradient fields.

use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Maximum gray level of the 8-bit intensity domain.
pub const MAX_GRAY: u8 = 255;

/// An `M×N×B` intensity image with one 8-bit plane per band.
///
/// `B` is 1 (gray) or 3 (R, G, B in that order).
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    bands: Vec<Plane<u8>>,
}

impl RasterImage {
    pub fn new(bands: Vec<Plane<u8>>) -> Result<Self> {
        if bands.len() != 1 && bands.len() != 3 {
            return Err(Error::InvalidImage(format!(
                "band count must be 1 or 3, got {}",
                bands.len()
            )));
        }
        let first = &bands[0];
        if first.is_empty() {
            return Err(Error::InvalidImage("zero-sized image".into()));
        }
        if bands.iter().any(|b| !b.same_dims(first)) {
            return Err(Error::InvalidImage("bands differ in size".into()));
        }
        Ok(RasterImage { bands })
    }

    /// Builds an image by evaluating `f(x, y, band)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        band_count: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let bands = (0..band_count)
            .map(|b| Plane::from_fn(width, height, |x, y| f(x, y, b)))
            .collect();
        RasterImage::new(bands)
    }

    pub fn width(&self) -> usize {
        self.bands[0].width()
    }

    pub fn height(&self) -> usize {
        self.bands[0].height()
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn band(&self, b: usize) -> &Plane<u8> {
        &self.bands[b]
    }

    pub fn bands(&self) -> &[Plane<u8>] {
        &self.bands
    }

    pub fn gray_levels(&self) -> u8 {
        MAX_GRAY
    }

    /// Returns a copy with `delta` added to every sample, saturating at `[0, L]`.
    pub fn shifted(&self, delta: i16) -> RasterImage {
        let bands = self
            .bands
            .iter()
            .map(|p| p.map(|v| (v as i16 + delta).clamp(0, MAX_GRAY as i16) as u8))
            .collect();
        RasterImage { bands }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width() as u32, self.height() as u32);
        if self.band_count() == 1 {
            let buf = GrayImage::from_raw(w, h, self.bands[0].as_slice().to_vec())
                .expect("plane length matches dimensions");
            DynamicImage::ImageLuma8(buf)
        } else {
            let mut raw = Vec::with_capacity(self.width() * self.height() * 3);
            for i in 0..self.width() * self.height() {
                raw.extend(self.bands.iter().map(|b| b.as_slice()[i]));
            }
            DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, raw).expect("3 samples per pixel"))
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_dynamic()
            .save(path)
            .map_err(|source| Error::ImageRead {
                path: path.to_path_buf(),
                source,
            })
    }
}

/// Decodes a PNG, JPEG or BMP file.
///
/// Single-channel sources (with or without alpha) give one band, everything
/// else is converted to R, G, B. Alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let read_err = |source| Error::ImageRead {
        path: path.to_path_buf(),
        source,
    };
    let decoded = ImageReader::open(path)
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .with_guessed_format()
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .decode()
        .map_err(read_err)?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(Error::EmptyImage(path.to_path_buf()));
    }
    from_dynamic(&decoded)
}

pub fn from_dynamic(img: &DynamicImage) -> Result<RasterImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img.color() {
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16 => {
            let gray = img.to_luma8();
            RasterImage::new(vec![Plane::from_vec(w, h, gray.into_raw())])
        }
        _ => {
            let rgb = img.to_rgb8();
            let raw = rgb.as_raw();
            let bands = (0..3)
                .map(|c| Plane::from_vec(w, h, raw.iter().skip(c).step_by(3).copied().collect()))
                .collect();
            RasterImage::new(bands)
        }
    }
}

/// Source coordinate sampled for output index `dst` (pixel-center aligned).
#[inline]
pub(crate) fn resize_source_coord(dst: usize, src_len: usize, dst_len: usize) -> f64 {
    let s = (dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5;
    s.clamp(0.0, (src_len - 1) as f64)
}

/// Bilinear resampling to `width`×`height`, band by band.
///
/// Output sample `(x, y)` reads the source at
/// `((x + 0.5)·M/w − 0.5, (y + 0.5)·N/h − 0.5)`, clamped to the source
/// extent, and is rounded half away from zero.
pub fn resize_bilinear(img: &RasterImage, width: usize, height: usize) -> Result<RasterImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be at least 1x1, got {width}x{height}"
        )));
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let (sw, sh) = (img.width(), img.height());
    let xs: Vec<(usize, usize, f64)> = (0..width)
        .map(|x| {
            let s = resize_source_coord(x, sw, width);
            let x0 = s.floor() as usize;
            (x0, (x0 + 1).min(sw - 1), s - x0 as f64)
        })
        .collect();
    let bands = img
        .bands()
        .iter()
        .map(|band| {
            let mut out = Vec::with_capacity(width * height);
            for y in 0..height {
                let s = resize_source_coord(y, sh, height);
                let y0 = s.floor() as usize;
                let y1 = (y0 + 1).min(sh - 1);
                let fy = s - y0 as f64;
                for &(x0, x1, fx) in &xs {
                    let v00 = band.get(x0, y0) as f64;
                    let v01 = band.get(x1, y0) as f64;
                    let v10 = band.get(x0, y1) as f64;
                    let v11 = band.get(x1, y1) as f64;
                    let top = v00 + fx * (v01 - v00);
                    let bottom = v10 + fx * (v11 - v10);
                    let v = top + fy * (bottom - top);
                    out.push(v.round().clamp(0.0, MAX_GRAY as f64) as u8);
                }
            }
            Plane::from_vec(width, height, out)
        })
        .collect();
    RasterImage::new(bands)
}

/// Horizontal Sobel kernel (responds to left-to-right increase).
pub const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
/// Vertical Sobel kernel (responds to bottom-to-top increase).
pub const SOBEL_Y: [[i32; 3]; 3] = [[1, 2, 1], [0, 0, 0], [-1, -2, -1]];

/// Sobel responses of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBand {
    pub gx: Plane<i32>,
    pub gy: Plane<i32>,
    /// `sqrt(gx² + gy²)`, never negative.
    pub magnitude: Plane<f64>,
    /// `atan2(gy, gx)` in degrees, in `(-180, 180]`; 0 where both responses vanish.
    pub angle_deg: Plane<f64>,
}

/// Per-band gradient planes, same dimensions as the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub bands: Vec<GradientBand>,
}

impl GradientField {
    pub fn band(&self, b: usize) -> &GradientBand {
        &self.bands[b]
    }
}

pub fn sobel_field(img: &RasterImage) -> GradientField {
    GradientField {
        bands: img.bands().iter().map(sobel_band).collect(),
    }
}

/// Applies both kernels as 3×3 correlations with replicate padding.
pub fn sobel_band(band: &Plane<u8>) -> GradientBand {
    let (w, h) = (band.width(), band.height());
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut sx, mut sy) = (0i32, 0i32);
            for (ky, (row_x, row_y)) in SOBEL_X.iter().zip(SOBEL_Y.iter()).enumerate() {
                for kx in 0..3 {
                    let v = band.get_clamped(x + kx as isize - 1, y + ky as isize - 1) as i32;
                    sx += row_x[kx] * v;
                    sy += row_y[kx] * v;
                }
            }
            gx.push(sx);
            gy.push(sy);
        }
    }
    let magnitude = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| ((a as f64).powi(2) + (b as f64).powi(2)).sqrt())
        .collect();
    let angle_deg = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| gradient_angle_deg(a as f64, b as f64))
        .collect();
    GradientBand {
        gx: Plane::from_vec(w, h, gx),
        gy: Plane::from_vec(w, h, gy),
        magnitude: Plane::from_vec(w, h, magnitude),
        angle_deg: Plane::from_vec(w, h, angle_deg),
    }
}

/// Full-quadrant gradient direction in degrees, mapped into `(-180, 180]`.
pub fn gradient_angle_deg(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let a = gy.atan2(gx).to_degrees();
    if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}
