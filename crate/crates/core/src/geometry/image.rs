use crate::error::{ensure_dim, Error, Result};

/// Threshold separating foreground from background.
pub const BINARIZE_AT: f64 = 0.5;

/// Single-channel image with row-major pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl BinaryImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value));
        BinaryImage { width, height, pixels: vec![value; width * height] }
    }

    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        ensure_dim(width * height, pixels.len())?;
        if let Some((i, &v)) = pixels.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("pixels", format!("value {v} at index {i} outside [0, 1]")));
        }
        Ok(BinaryImage { width, height, pixels })
    }

    /// Square image from a flat pixel slice; values are clamped into `[0, 1]`.
    pub fn from_clamped(side: usize, values: &[f64]) -> Self {
        assert_eq!(side * side, values.len());
        BinaryImage {
            width: side,
            height: side,
            pixels: values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        self.pixels[y * self.width + x] = value;
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.get(x, y) >= BINARIZE_AT
    }

    /// Thresholded copy with pixels in `{0, 1}`.
    pub fn binarized(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .iter()
                .map(|&p| if p >= BINARIZE_AT { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Index of the first pixel that is neither 0 nor 1.
    pub fn first_non_binary(&self) -> Option<(usize, f64)> {
        self.pixels
            .iter()
            .enumerate()
            .find(|(_, &p)| p != 0.0 && p != 1.0)
            .map(|(i, &p)| (i, p))
    }

    pub fn same_shape(&self, other: &BinaryImage) -> Result<()> {
        ensure_dim(self.width, other.width)?;
        ensure_dim(self.height, other.height)
    }

    pub fn squared_distance(&self, other: &BinaryImage) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn distance(&self, other: &BinaryImage) -> Result<f64> {
        self.squared_distance(other).map(f64::sqrt)
    }

    /// Pixel-by-pixel combination of two same-shaped images.
    pub(crate) fn zip_map(&self, other: &BinaryImage, f: impl Fn(f64, f64) -> f64) -> Result<BinaryImage> {
        self.same_shape(other)?;
        Ok(BinaryImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().zip(&other.pixels).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}
