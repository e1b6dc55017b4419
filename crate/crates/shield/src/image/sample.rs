//! 4:2:0 chroma subsampling and its decoder-side inverse.

use super::{ImageF32, Plane};
use crate::error::{Error, Result};

/// Split a YCbCr image into a full-resolution luma plane and 2x2
/// box-averaged chroma planes. Odd dimensions replicate the last row or
/// column before averaging, so the output is `ceil(H/2) x ceil(W/2)`.
pub fn subsample_chroma(img: &ImageF32) -> Result<(Plane, Plane, Plane)> {
    if img.channels() != 3 {
        return Err(Error::UnsupportedChannels(img.channels()));
    }
    let planes = img.planes();
    let y = planes[0].clone();
    let cb = box_downsample(&planes[1]);
    let cr = box_downsample(&planes[2]);
    Ok((y, cb, cr))
}

/// Rebuild a full-resolution YCbCr image from a luma plane and half-res
/// chroma planes by nearest-neighbor 2x replication, cropped to the luma
/// shape.
pub fn upsample_chroma(y: &Plane, cb: &Plane, cr: &Plane) -> Result<ImageF32> {
    let want_h = y.height.div_ceil(2);
    let want_w = y.width.div_ceil(2);
    for p in [cb, cr] {
        if p.height != want_h || p.width != want_w {
            return Err(Error::ShapeMismatch(format!(
                "chroma plane {}x{} does not match expected {}x{}",
                p.height, p.width, want_h, want_w
            )));
        }
    }
    let cb_full = replicate_upsample(cb, y.height, y.width);
    let cr_full = replicate_upsample(cr, y.height, y.width);
    ImageF32::from_planes(&[y.clone(), cb_full, cr_full])
}

fn box_downsample(plane: &Plane) -> Plane {
    let out_h = plane.height.div_ceil(2);
    let out_w = plane.width.div_ceil(2);
    let mut data = Vec::with_capacity(out_h * out_w);
    for by in 0..out_h {
        for bx in 0..out_w {
            let mut acc = 0.0f64;
            for dy in 0..2 {
                for dx in 0..2 {
                    let r = (2 * by + dy).min(plane.height - 1);
                    let c = (2 * bx + dx).min(plane.width - 1);
                    acc += plane.get(r, c) as f64;
                }
            }
            data.push((acc / 4.0) as f32);
        }
    }
    Plane {
        height: out_h,
        width: out_w,
        data,
    }
}

fn replicate_upsample(plane: &Plane, out_h: usize, out_w: usize) -> Plane {
    let mut data = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        for c in 0..out_w {
            data.push(plane.get((r / 2).min(plane.height - 1), (c / 2).min(plane.width - 1)));
        }
    }
    Plane {
        height: out_h,
        width: out_w,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageF32;

    fn ycbcr(h: usize, w: usize, cb: &[f32]) -> ImageF32 {
        let mut data = Vec::new();
        for i in 0..h * w {
            data.push(0.5);
            data.push(cb[i]);
            data.push(0.25);
        }
        ImageF32::new(h, w, 3, data).unwrap()
    }

    #[test]
    fn constant_chroma_stays_constant() {
        let img = ycbcr(6, 4, &[0.7; 24]);
        let (_, cb, cr) = subsample_chroma(&img).unwrap();
        assert_eq!(cb.height, 3);
        assert_eq!(cb.width, 2);
        assert!(cb.data.iter().all(|&v| (v - 0.7).abs() < 1e-7));
        assert!(cr.data.iter().all(|&v| (v - 0.25).abs() < 1e-7));
    }

    #[test]
    fn two_by_two_block_box_averages() {
        let img = ycbcr(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let (_, cb, _) = subsample_chroma(&img).unwrap();
        assert_eq!(cb.data, vec![0.5]);
    }

    #[test]
    fn odd_plane_replicates_edges() {
        // 3x3 chroma a..i; replicated to 4x4 before 2x2 averaging:
        //   avg(a,b,d,e), avg(c,c,f,f), avg(g,h,g,h), avg(i,i,i,i)
        let v: Vec<f32> = (1..=9).map(|i| i as f32 / 10.0).collect();
        let img = ycbcr(3, 3, &v);
        let (_, cb, _) = subsample_chroma(&img).unwrap();
        let want = [
            (0.1 + 0.2 + 0.4 + 0.5) / 4.0,
            (0.3 + 0.6) / 2.0,
            (0.7 + 0.8) / 2.0,
            0.9,
        ];
        assert_eq!(cb.height, 2);
        assert_eq!(cb.width, 2);
        for (got, want) in cb.data.iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_roundtrip_is_exact() {
        let img = ycbcr(5, 7, &[0.625; 35]);
        let (y, cb, cr) = subsample_chroma(&img).unwrap();
        let back = upsample_chroma(&y, &cb, &cr).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn upsample_replicates_2x2_pattern() {
        let y = Plane::new(4, 4, vec![0.5; 16]).unwrap();
        let cb = Plane::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let cr = Plane::new(2, 2, vec![0.9; 4]).unwrap();
        let img = upsample_chroma(&y, &cb, &cr).unwrap();
        let want = [
            [0.1, 0.1, 0.2, 0.2],
            [0.1, 0.1, 0.2, 0.2],
            [0.3, 0.3, 0.4, 0.4],
            [0.3, 0.3, 0.4, 0.4],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(img.get(r, c, 1), want[r][c]);
            }
        }
    }

    #[test]
    fn odd_dimension_crops_back_to_original_shape() {
        // 3x5 image: chroma subsampled to 2x3, upsample must crop to 3x5
        let v: Vec<f32> = (0..15).map(|i| i as f32 / 15.0).collect();
        let img = ycbcr(3, 5, &v);
        let (y, cb, cr) = subsample_chroma(&img).unwrap();
        let back = upsample_chroma(&y, &cb, &cr).unwrap();
        assert_eq!(back.height(), 3);
        assert_eq!(back.width(), 5);
        // hand-computed: pixel (2,2) reads chroma block (1,1), which averaged
        // v[12], v[13] and the replicated bottom row; (2,4) reads block (1,2)
        assert!((back.get(2, 2, 1) - (v[12] + v[13]) / 2.0).abs() < 1e-6);
        assert!((back.get(2, 4, 1) - v[14]).abs() < 1e-6);
    }

    #[test]
    fn chroma_shape_mismatch_is_an_error() {
        let y = Plane::new(4, 4, vec![0.5; 16]).unwrap();
        let cb = Plane::new(3, 2, vec![0.1; 6]).unwrap();
        let cr = Plane::new(2, 2, vec![0.9; 4]).unwrap();
        assert!(upsample_chroma(&y, &cb, &cr).is_err());
    }
}
