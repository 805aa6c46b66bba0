//! Dense grid types shared by every module.
//!
//! Layout is row-major and channel-last everywhere: the element at
//! (row, col, ch) of an H×W×C grid lives at `(row * W + col) * C + ch`.
//! All training math is f64; disk payloads are f32 (see [`crate::io`]).

use crate::error::{Error, Result};

/// H×W×C grid of intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Builds an image, rejecting wrong lengths and out-of-range or
    /// non-finite values.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "image data length {} != {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "image value {v} outside [0,1]"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image, clamping every finite value into [0, 1].
    /// Non-finite values are rejected.
    pub fn new_clamped(
        height: usize,
        width: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data".into()));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self::new(height, width, channels, data)
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.shape() == other.shape()
    }
}

/// H×W grid of hard {0, 1} labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "mask data length {} != {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| **v > 1) {
            return Err(Error::InvalidArgument(format!(
                "mask value {v} not in {{0,1}}"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] == 1
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|v| **v == 1).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / (self.height * self.width) as f64
    }
}

/// H×W grid of fractional labels or predicted probabilities in [0, 1].
///
/// Only the classical-mixing baseline and predicted probability maps use
/// this; supervision targets for paired mixing stay hard.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SoftMask {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "soft mask data length {} != {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "soft mask value {v} outside [0,1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Thresholds into a hard mask; probability exactly at `threshold`
    /// maps to foreground.
    pub fn threshold(&self, threshold: f64) -> BinaryMask {
        let data = self
            .data
            .iter()
            .map(|p| u8::from(*p >= threshold))
            .collect();
        BinaryMask {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// Unconstrained H×W×C grid of reals; carries gradients and other
/// intermediate fields that may leave [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl RawTensor {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn at(&mut self, row: usize, col: usize, ch: usize) -> &mut f64 {
        &mut self.data[(row * self.width + col) * self.channels + ch]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_length() {
        assert!(ImageTensor::new(2, 2, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn image_rejects_out_of_range() {
        assert!(ImageTensor::new(1, 1, 1, vec![1.5]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn clamped_constructor_clamps() {
        let t = ImageTensor::new_clamped(1, 1, 2, vec![-0.25, 1.75]).unwrap();
        assert_eq!(t.data(), &[0.0, 1.0]);
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(BinaryMask::new(1, 2, vec![0, 2]).is_err());
        assert!(BinaryMask::new(1, 2, vec![0, 1]).is_ok());
    }

    #[test]
    fn threshold_tie_goes_foreground() {
        let m = SoftMask::new(1, 2, vec![0.5, 0.49]).unwrap().threshold(0.5);
        assert_eq!(m.data(), &[1, 0]);
    }

    #[test]
    fn indexing_is_row_major_channel_last() {
        let t = ImageTensor::new(2, 2, 2, (0..8).map(|i| i as f64 / 8.0).collect()).unwrap();
        assert_eq!(t.get(0, 1, 0), 2.0 / 8.0);
        assert_eq!(t.get(1, 0, 1), 5.0 / 8.0);
    }
}
