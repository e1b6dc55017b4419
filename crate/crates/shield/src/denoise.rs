//! Baseline preprocessing defenses: median filtering and total variation
//! denoising.

use crate::error::{Error, Result};
use crate::image::ImageF32;

/// Sliding-window median filter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MedianConfig {
    /// Window side length; odd, at least 3.
    pub window: usize,
}

impl MedianConfig {
    pub fn new(window: usize) -> Result<Self> {
        if window < 3 || window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "mf.window must be odd and >= 3, got {window}"
            )));
        }
        Ok(Self { window })
    }
}

/// Total variation denoising configuration.
///
/// `weight` trades data fidelity against smoothing: the objective is
/// `||u - x||^2 / 2 + TV(u) / weight`, so a larger weight smooths less.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TvdConfig {
    pub weight: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl TvdConfig {
    pub fn new(weight: f64, max_iters: usize, tol: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tvd.weight must be positive, got {weight}"
            )));
        }
        if max_iters == 0 {
            return Err(Error::InvalidConfig("tvd.max_iters must be >= 1".into()));
        }
        Ok(Self {
            weight,
            max_iters,
            tol,
        })
    }

    pub fn with_weight(weight: f64) -> Result<Self> {
        Self::new(weight, 100, 1e-4)
    }
}

/// Replace each sample with the median of its window, per channel, with
/// reflected edges.
pub fn median_filter(img: &ImageF32, cfg: &MedianConfig) -> Result<ImageF32> {
    MedianConfig::new(cfg.window)?;
    let (h, w, channels) = (img.height(), img.width(), img.channels());
    let half = cfg.window / 2;
    let mut out = img.clone();
    let mut window = Vec::with_capacity(cfg.window * cfg.window);
    for ch in 0..channels {
        for r in 0..h {
            for c in 0..w {
                window.clear();
                for dr in -(half as isize)..=half as isize {
                    let rr = reflect(r as isize + dr, h);
                    for dc in -(half as isize)..=half as isize {
                        let cc = reflect(c as isize + dc, w);
                        window.push(img.get(rr, cc, ch));
                    }
                }
                let mid = window.len() / 2;
                let (_, median, _) = window.select_nth_unstable_by(mid, f32::total_cmp);
                out.data_mut()[(r * w + c) * channels + ch] = *median;
            }
        }
    }
    Ok(out)
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let i = if i < 0 { -i - 1 } else { i };
    let i = if i >= n { 2 * n - 1 - i } else { i };
    i.clamp(0, n - 1) as usize
}

/// Anisotropic total variation: the sum over both axes of absolute
/// differences between adjacent samples, summed across channels.
pub fn total_variation(img: &ImageF32) -> f64 {
    let (h, w, channels) = (img.height(), img.width(), img.channels());
    let mut acc = 0.0f64;
    for ch in 0..channels {
        for r in 0..h {
            for c in 0..w {
                let v = img.get(r, c, ch) as f64;
                if r + 1 < h {
                    acc += (img.get(r + 1, c, ch) as f64 - v).abs();
                }
                if c + 1 < w {
                    acc += (img.get(r, c + 1, ch) as f64 - v).abs();
                }
            }
        }
    }
    acc
}

/// The objective `tv_denoise` minimizes: `||u - x||^2 / 2 + TV_iso(u) / weight`
/// where `TV_iso` is the isotropic (Euclidean-gradient-norm) variation.
pub fn rof_objective(u: &ImageF32, x: &ImageF32, weight: f64) -> Result<f64> {
    if !u.same_shape(x) {
        return Err(Error::ShapeMismatch("rof_objective shapes differ".into()));
    }
    let data: f64 = u
        .data()
        .iter()
        .zip(x.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(data / 2.0 + isotropic_tv(u) / weight)
}

fn isotropic_tv(img: &ImageF32) -> f64 {
    let (h, w, channels) = (img.height(), img.width(), img.channels());
    let mut acc = 0.0f64;
    for ch in 0..channels {
        for r in 0..h {
            for c in 0..w {
                let v = img.get(r, c, ch) as f64;
                let dy = if r + 1 < h { img.get(r + 1, c, ch) as f64 - v } else { 0.0 };
                let dx = if c + 1 < w { img.get(r, c + 1, ch) as f64 - v } else { 0.0 };
                acc += (dx * dx + dy * dy).sqrt();
            }
        }
    }
    acc
}

/// Rudin-Osher-Fatemi denoising by Chambolle's dual projection, run per
/// channel. Stops after `max_iters` iterations or once the RMS change
/// between consecutive iterates falls below `tol`.
pub fn tv_denoise(img: &ImageF32, cfg: &TvdConfig) -> Result<ImageF32> {
    TvdConfig::new(cfg.weight, cfg.max_iters, cfg.tol)?;
    let (h, w) = (img.height(), img.width());
    let alpha = 1.0 / cfg.weight;
    let tau = 0.25;

    let planes = img.planes();
    let mut out_planes = Vec::with_capacity(img.channels());
    for plane in &planes {
        let x: Vec<f64> = plane.data.iter().map(|&v| v as f64).collect();
        let n = h * w;
        let mut p1 = vec![0.0f64; n];
        let mut p2 = vec![0.0f64; n];
        let mut div = vec![0.0f64; n];
        let mut u = x.clone();
        let mut u_prev = vec![0.0f64; n];

        for iter in 0..cfg.max_iters {
            // div p with Neumann boundaries
            for r in 0..h {
                for c in 0..w {
                    let i = r * w + c;
                    let mut d = p1[i] + p2[i];
                    if r > 0 {
                        d -= p1[i - w];
                    }
                    if c > 0 {
                        d -= p2[i - 1];
                    }
                    div[i] = d;
                }
            }
            std::mem::swap(&mut u, &mut u_prev);
            for i in 0..n {
                u[i] = x[i] - alpha * div[i];
            }
            if iter > 0 {
                let change: f64 =
                    u.iter().zip(&u_prev).map(|(&a, &b)| (a - b) * (a - b)).sum::<f64>();
                if (change / n as f64).sqrt() < cfg.tol {
                    break;
                }
            }
            // gradient step on the dual variable: g = grad(div p - x / alpha)
            for r in 0..h {
                for c in 0..w {
                    let i = r * w + c;
                    let here = div[i] - x[i] / alpha;
                    let gy = if r + 1 < h { (div[i + w] - x[i + w] / alpha) - here } else { 0.0 };
                    let gx = if c + 1 < w { (div[i + 1] - x[i + 1] / alpha) - here } else { 0.0 };
                    let norm = (gx * gx + gy * gy).sqrt();
                    let denom = 1.0 + tau * norm;
                    p1[i] = (p1[i] + tau * gy) / denom;
                    p2[i] = (p2[i] + tau * gx) / denom;
                }
            }
        }
        out_planes.push(crate::image::Plane {
            height: h,
            width: w,
            data: u.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect(),
        });
    }
    ImageF32::from_planes(&out_planes)
}
