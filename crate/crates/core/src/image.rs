//! Grayscale rasters and scale pyramids.

use crate::error::{Error, Result};

/// Row-major 8-bit intensity image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single intensity.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Intensity at column `x`, row `y`. Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Bilinear sample with edge clamping.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) as f64 * (1.0 - fx) + self.get(x1, y0) as f64 * fx;
        let bottom = self.get(x0, y1) as f64 * (1.0 - fx) + self.get(x1, y1) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Resample to the given size by bilinear interpolation at pixel centres.
    pub fn resize(&self, width: usize, height: usize) -> GrayImage {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        GrayImage::from_fn(width, height, |x, y| {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            self.sample_bilinear(src_x, src_y).round().clamp(0.0, 255.0) as u8
        })
    }
}

/// Smallest side length a pyramid level may have.
pub const MIN_LEVEL_SIZE: usize = 32;

/// Dimensions of pyramid level `level`: `floor(original / scale_factor^level)`.
pub fn level_dimensions(width: usize, height: usize, scale_factor: f64, level: usize) -> (usize, usize) {
    let scale = scale_factor.powi(level as i32);
    (
        (width as f64 / scale).floor() as usize,
        (height as f64 / scale).floor() as usize,
    )
}

/// Image pyramid, level 0 is the original image.
#[derive(Clone, Debug)]
pub struct Pyramid {
    levels: Vec<GrayImage>,
    scale_factor: f64,
}

impl Pyramid {
    /// Builds up to `max_levels` levels, stopping early once a level would be
    /// smaller than 32x32.
    pub fn build(image: &GrayImage, max_levels: usize, scale_factor: f64) -> Result<Self> {
        if !(scale_factor > 1.0) || !scale_factor.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "scale factor must exceed 1, got {scale_factor}"
            )));
        }
        let mut levels = vec![image.clone()];
        for level in 1..max_levels {
            let (w, h) = level_dimensions(image.width(), image.height(), scale_factor, level);
            if w < MIN_LEVEL_SIZE || h < MIN_LEVEL_SIZE {
                break;
            }
            levels.push(image.resize(w, h));
        }
        Ok(Pyramid {
            levels,
            scale_factor,
        })
    }

    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> &GrayImage {
        &self.levels[index]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    /// Multiplier mapping level coordinates to level-0 coordinates.
    pub fn scale(&self, level: usize) -> f64 {
        self.scale_factor.powi(level as i32)
    }
}
