//! Pixel containers, color-space conversion, block decomposition, and
//! distance metrics shared by every other module.
//!
//! Images live in two precisions: [`ImageU8`] is the stored form (8-bit,
//! row-major, interleaved channels) and [`ImageF32`] is the working form
//! with samples in `[0, 1]`. All transforms clamp back into `[0, 1]`.

mod blocks;
mod color;
mod ppm;
mod sample;

pub use blocks::{merge_blocks, split_blocks, BlockGrid, BLOCK_SIZE};
pub use color::{rgb_to_ycbcr, ycbcr_to_rgb};
pub use ppm::{read_ppm, write_ppm};
pub use sample::{subsample_chroma, upsample_chroma};

use crate::error::{Error, Result};

/// 8-bit stored image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

/// Floating-point working image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF32 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

/// Single-channel plane of `f32` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl ImageU8 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_shape(height, width, channels, data.len())?;
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn to_f32(&self) -> ImageF32 {
        ImageF32 {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }
}

impl ImageF32 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_shape(height, width, channels, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite sample".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data: data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    /// Constant-color image.
    pub fn splat(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value.clamp(0.0, 1.0); height * width * channels],
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn same_shape(&self, other: &ImageF32) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Round to the 8-bit grid.
    pub fn to_u8(&self) -> ImageU8 {
        ImageU8 {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }

    /// Deinterleave into per-channel planes.
    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels)
            .map(|c| Plane {
                height: self.height,
                width: self.width,
                data: self.data.iter().skip(c).step_by(self.channels).copied().collect(),
            })
            .collect()
    }

    /// Interleave planes of identical shape back into an image.
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes.first().ok_or(Error::EmptyPlane)?;
        let (h, w) = (first.height, first.width);
        if planes.iter().any(|p| p.height != h || p.width != w) {
            return Err(Error::ShapeMismatch("plane shapes differ".into()));
        }
        let channels = planes.len();
        let mut data = vec![0.0f32; h * w * channels];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data.iter().enumerate() {
                data[i * channels + c] = v.clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            height: h,
            width: w,
            channels,
            data,
        })
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyPlane);
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "plane data length {} != {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }
}

fn check_shape(height: usize, width: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::UnsupportedChannels(channels));
    }
    if height == 0 || width == 0 {
        return Err(Error::EmptyPlane);
    }
    if len != height * width * channels {
        return Err(Error::ShapeMismatch(format!(
            "data length {len} != {height}x{width}x{channels}"
        )));
    }
    Ok(())
}

/// Per-sample RMS distance: `||a - b||_2 / sqrt(H*W*C)`.
///
/// Scale-comparable across image sizes; 0 for identical images, and equal
/// to `eps` when every sample differs by exactly `eps`.
pub fn normalized_l2(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.height, a.width, a.channels, b.height, b.width, b.channels
        )));
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok((sum / a.data.len() as f64).sqrt())
}

/// Largest absolute per-sample difference.
pub fn linf_distance(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("linf on mismatched shapes".into()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .fold(0.0, f64::max))
}

/// Peak signal-to-noise ratio in dB over `[0, 1]` samples.
pub fn psnr(reference: &ImageF32, candidate: &ImageF32) -> Result<f64> {
    let rms = normalized_l2(reference, candidate)?;
    if rms == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * rms.log10())
}
