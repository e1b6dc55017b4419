//! Full-range JFIF/BT.601 color conversion on `[0, 1]` samples.

use super::ImageF32;
use crate::error::{Error, Result};

/// RGB to YCbCr. Chroma planes are centered on 0.5, so a pure gray pixel
/// `(v, v, v)` maps to `(v, 0.5, 0.5)`.
pub fn rgb_to_ycbcr(img: &ImageF32) -> Result<ImageF32> {
    convert(img, |r, g, b| {
        let y = 0.299 * r + 0.587 * g + 0.114 * b;
        let cb = 0.5 - 0.168_735_89 * r - 0.331_264_11 * g + 0.5 * b;
        let cr = 0.5 + 0.5 * r - 0.418_687_59 * g - 0.081_312_41 * b;
        (y, cb, cr)
    })
}

/// YCbCr back to RGB, clamped to `[0, 1]`.
pub fn ycbcr_to_rgb(img: &ImageF32) -> Result<ImageF32> {
    convert(img, |y, cb, cr| {
        let cb = cb - 0.5;
        let cr = cr - 0.5;
        let r = y + 1.402 * cr;
        let g = y - 0.344_136_29 * cb - 0.714_136_29 * cr;
        let b = y + 1.772 * cb;
        (r, g, b)
    })
}

fn convert(img: &ImageF32, f: impl Fn(f64, f64, f64) -> (f64, f64, f64)) -> Result<ImageF32> {
    if img.channels() != 3 {
        return Err(Error::UnsupportedChannels(img.channels()));
    }
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let (a, b, c) = f(px[0] as f64, px[1] as f64, px[2] as f64);
        px[0] = a.clamp(0.0, 1.0) as f32;
        px[1] = b.clamp(0.0, 1.0) as f32;
        px[2] = c.clamp(0.0, 1.0) as f32;
    }
    Ok(out)
}
