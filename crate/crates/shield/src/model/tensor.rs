//! Dense row-major tensor of `f64` values.
//!
//! Gradient math runs in double precision throughout; only stored images
//! are single precision.

use crate::error::{Error, Result};
use crate::image::ImageF32;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if data.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "tensor data length {} != shape {:?}",
                data.len(),
                shape
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite tensor value".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    /// Image in `[0, 1]` to a `[C, H, W]` tensor.
    pub fn from_image(img: &ImageF32) -> Self {
        let (h, w, c) = (img.height(), img.width(), img.channels());
        let mut data = vec![0.0f64; c * h * w];
        for ch in 0..c {
            for r in 0..h {
                for col in 0..w {
                    data[(ch * h + r) * w + col] = img.get(r, col, ch) as f64;
                }
            }
        }
        Self {
            shape: vec![c, h, w],
            data,
        }
    }

    /// `[C, H, W]` tensor back to an image, clamped to `[0, 1]`.
    pub fn to_image(&self) -> Result<ImageF32> {
        if self.shape.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "expected [C, H, W], got {:?}",
                self.shape
            )));
        }
        let (c, h, w) = (self.shape[0], self.shape[1], self.shape[2]);
        let mut data = vec![0.0f32; h * w * c];
        for ch in 0..c {
            for r in 0..h {
                for col in 0..w {
                    data[(r * w + col) * c + ch] =
                        (self.data[(ch * h + r) * w + col]).clamp(0.0, 1.0) as f32;
                }
            }
        }
        ImageF32::new(h, w, c, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    /// In-place `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}
