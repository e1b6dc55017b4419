//! Stochastic Local Quantization: every disjoint 8x8 block of the image is
//! compressed with a quality drawn at random from a fixed set, so the
//! compression level does not stay uniform across the image.
//!
//! Draws are keyed by `(seed, block row, block col)` rather than taken
//! from a sequential stream: the quality of a block never depends on how
//! many blocks were processed before it, which makes block independence
//! directly testable and lets blocks be processed in parallel.
//!
//! Chroma is kept at full resolution here. Cutting the image into 8x8
//! blocks and compressing each one independently is only well defined when
//! every channel shares the luma block geometry; 4:2:0 subsampling would
//! couple each chroma sample to four luma blocks.

use crate::error::{Error, Result};
use crate::image::{rgb_to_ycbcr, ycbcr_to_rgb, ImageF32};
use crate::jpeg::{quant_table_for_quality, roundtrip_plane_indexed, QualityFactor, QuantTable};
use crate::rng::keyed_u64;

/// Quality set and seed for the per-block draws.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SlqConfig {
    pub qualities: Vec<QualityFactor>,
    pub seed: u64,
}

impl SlqConfig {
    pub fn new(qualities: Vec<QualityFactor>, seed: u64) -> Result<Self> {
        if qualities.is_empty() {
            return Err(Error::InvalidConfig("slq.qualities must be non-empty".into()));
        }
        Ok(Self { qualities, seed })
    }

    /// The default quality set {20, 40, 60, 80}, spanning the range from
    /// heavy to light compression.
    pub fn with_seed(seed: u64) -> Self {
        let qualities = [20, 40, 60, 80]
            .into_iter()
            .map(|q| QualityFactor::new(q).expect("static quality"))
            .collect();
        Self { qualities, seed }
    }

    fn draw(&self, row: usize, col: usize) -> usize {
        (keyed_u64(self.seed, row as u64, col as u64) % self.qualities.len() as u64) as usize
    }
}

impl Default for SlqConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// The per-block qualities used for an image of a given shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityMap {
    pub rows: usize,
    pub cols: usize,
    pub qualities: Vec<QualityFactor>,
}

impl QualityMap {
    pub fn get(&self, row: usize, col: usize) -> QualityFactor {
        self.qualities[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, q: QualityFactor) {
        self.qualities[row * self.cols + col] = q;
    }
}

/// The exact quality map `slq_transform` applies for `(shape, cfg)`.
/// Regeneration is stable: the same inputs always give the same map.
pub fn block_quality_map(height: usize, width: usize, cfg: &SlqConfig) -> Result<QualityMap> {
    if cfg.qualities.is_empty() {
        return Err(Error::InvalidConfig("slq.qualities must be non-empty".into()));
    }
    if height == 0 || width == 0 {
        return Err(Error::EmptyPlane);
    }
    let rows = height.div_ceil(8);
    let cols = width.div_ceil(8);
    let mut qualities = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            qualities.push(cfg.qualities[cfg.draw(r, c)]);
        }
    }
    Ok(QualityMap {
        rows,
        cols,
        qualities,
    })
}

/// Compress each 8x8 block with its drawn quality. Deterministic given the
/// seed; the same drawn quality applies to the co-located blocks of every
/// channel.
pub fn slq_transform(img: &ImageF32, cfg: &SlqConfig) -> Result<ImageF32> {
    let map = block_quality_map(img.height(), img.width(), cfg)?;
    slq_transform_with_map(img, &map)
}

/// Apply an explicit per-block quality map (normally the one from
/// [`block_quality_map`]).
pub fn slq_transform_with_map(img: &ImageF32, map: &QualityMap) -> Result<ImageF32> {
    if map.rows != img.height().div_ceil(8) || map.cols != img.width().div_ceil(8) {
        return Err(Error::ShapeMismatch(format!(
            "quality map {}x{} does not cover a {}x{} image",
            map.rows,
            map.cols,
            img.height(),
            img.width()
        )));
    }
    let tables: Vec<&'static QuantTable> =
        map.qualities.iter().map(|&q| quant_table_for_quality(q)).collect();
    let pick = |r: usize, c: usize| r * map.cols + c;

    match img.channels() {
        1 => {
            let out = roundtrip_plane_indexed(&img.planes()[0], &tables, false, pick)?;
            ImageF32::new(out.height, out.width, 1, out.data)
        }
        3 => {
            let ycbcr = rgb_to_ycbcr(img)?;
            let planes = ycbcr.planes();
            let y = roundtrip_plane_indexed(&planes[0], &tables, false, pick)?;
            let cb = roundtrip_plane_indexed(&planes[1], &tables, true, pick)?;
            let cr = roundtrip_plane_indexed(&planes[2], &tables, true, pick)?;
            ycbcr_to_rgb(&ImageF32::from_planes(&[y, cb, cr])?)
        }
        c => Err(Error::UnsupportedChannels(c)),
    }
}
