//! Quality-factor-driven quantization round-trip: the lossy core of JPEG
//! without entropy coding.
//!
//! Entropy coding (Huffman/RLE) is lossless and cannot change a defended
//! pixel, so the full pixel-level effect of compressing and decompressing
//! an image is captured by: color conversion, optional 4:2:0 subsampling,
//! 8x8 DCT, quantization against a quality-scaled table, and the inverse
//! of each step.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image::{
    merge_blocks, rgb_to_ycbcr, split_blocks, subsample_chroma, upsample_chroma, ycbcr_to_rgb,
    ImageF32, Plane,
};

/// JPEG quality, 1 (coarsest) to 100 (finest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualityFactor(u8);

impl QualityFactor {
    pub fn new(q: u32) -> Result<Self> {
        if (1..=100).contains(&q) {
            Ok(Self(q as u8))
        } else {
            Err(Error::QualityOutOfRange(q))
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }
}

impl std::fmt::Display for QualityFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl serde::Serialize for QualityFactor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> serde::Deserialize<'de> for QualityFactor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let q = u32::deserialize(d)?;
        QualityFactor::new(q).map_err(serde::de::Error::custom)
    }
}

/// Base luminance divisors (Annex K of the JPEG standard), raster order.
pub const BASE_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Base chrominance divisors (Annex K), raster order.
pub const BASE_CHROMA: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Raster-order index of each coefficient in zigzag scan order.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, //
    17, 24, 32, 25, 18, 11, 4, 5, //
    12, 19, 26, 33, 40, 48, 41, 34, //
    27, 20, 13, 6, 7, 14, 21, 28, //
    35, 42, 49, 56, 57, 50, 43, 36, //
    29, 22, 15, 23, 30, 37, 44, 51, //
    58, 59, 52, 45, 38, 31, 39, 46, //
    53, 60, 61, 54, 47, 55, 62, 63,
];

/// Quality-scaled quantization divisors, raster order, entries in `1..=255`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTable {
    pub luma: [u16; 64],
    pub chroma: [u16; 64],
}

/// IJG scaling of the base tables: `scale = 5000/q` below 50, `200 - 2q`
/// at or above, each entry `clamp((base*scale + 50) / 100, 1, 255)` in
/// integer arithmetic.
pub fn quant_table_for_quality(q: QualityFactor) -> &'static QuantTable {
    static TABLES: OnceLock<Vec<QuantTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (1..=100u32)
            .map(|q| {
                let scale = if q < 50 { 5000 / q } else { 200 - 2 * q } as u64;
                let scale_entry = |base: u16| -> u16 {
                    ((base as u64 * scale + 50) / 100).clamp(1, 255) as u16
                };
                QuantTable {
                    luma: BASE_LUMA.map(scale_entry),
                    chroma: BASE_CHROMA.map(scale_entry),
                }
            })
            .collect()
    });
    &tables[(q.get() - 1) as usize]
}

fn dct_matrix() -> &'static [[f64; 8]; 8] {
    static M: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let alpha = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

/// Orthonormal 2D type-II DCT of a level-shifted 8x8 block. A constant
/// block of value `c` produces a DC coefficient of `8c` and zero AC.
pub fn fdct8x8(block: &[f64; 64]) -> [f64; 64] {
    let m = dct_matrix();
    // rows: tmp[u][y] = sum_x m[u][x] * block[x][y]
    let mut tmp = [0.0f64; 64];
    for u in 0..8 {
        for y in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += m[u][x] * block[x * 8 + y];
            }
            tmp[u * 8 + y] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += m[v][y] * tmp[u * 8 + y];
            }
            out[u * 8 + v] = acc;
        }
    }
    out
}

/// Inverse of [`fdct8x8`].
pub fn idct8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let m = dct_matrix();
    // tmp[x][v] = sum_u m[u][x] * coeffs[u][v]
    let mut tmp = [0.0f64; 64];
    for x in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += m[u][x] * coeffs[u * 8 + v];
            }
            tmp[x * 8 + v] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for x in 0..8 {
        for y in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += m[v][y] * tmp[x * 8 + v];
            }
            out[x * 8 + y] = acc;
        }
    }
    out
}

/// Divide each coefficient by its table entry and round to the nearest
/// integer.
pub fn quantize(coeffs: &[f64; 64], table: &[u16; 64]) -> [i32; 64] {
    let mut out = [0i32; 64];
    for i in 0..64 {
        out[i] = (coeffs[i] / table[i] as f64).round() as i32;
    }
    out
}

/// Multiply quantized coefficients back by their table entries.
pub fn dequantize(qcoeffs: &[i32; 64], table: &[u16; 64]) -> [f64; 64] {
    let mut out = [0.0f64; 64];
    for i in 0..64 {
        out[i] = qcoeffs[i] as f64 * table[i] as f64;
    }
    out
}

/// Lossy round-trip of one block: level shift, DCT, quantize, and invert.
fn roundtrip_block(tile: &mut [f32; 64], table: &[u16; 64]) {
    let mut shifted = [0.0f64; 64];
    for i in 0..64 {
        shifted[i] = tile[i] as f64 * 255.0 - 128.0;
    }
    let coeffs = fdct8x8(&shifted);
    let q = quantize(&coeffs, table);
    let back = idct8x8(&dequantize(&q, table));
    for i in 0..64 {
        tile[i] = ((back[i] + 128.0) / 255.0) as f32;
    }
}

/// Round-trip a plane with a per-block choice of quantization table.
/// `pick(row, col)` indexes into `tables`; uniform JPEG passes a single
/// table, stochastic local quantization picks per block. Sharing this path
/// is what makes the singleton-set equivalence bit-exact.
pub(crate) fn roundtrip_plane_indexed<F>(
    plane: &Plane,
    tables: &[&'static QuantTable],
    chroma: bool,
    pick: F,
) -> Result<Plane>
where
    F: Fn(usize, usize) -> usize,
{
    let mut grid = split_blocks(plane)?;
    for br in 0..grid.rows {
        for bc in 0..grid.cols {
            let t = tables[pick(br, bc)];
            let table = if chroma { &t.chroma } else { &t.luma };
            roundtrip_block(grid.block_mut(br, bc), table);
        }
    }
    let mut out = merge_blocks(&grid);
    for v in &mut out.data {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

fn roundtrip_plane(plane: &Plane, table: &'static QuantTable, chroma: bool) -> Result<Plane> {
    roundtrip_plane_indexed(plane, &[table], chroma, |_, _| 0)
}

/// Compress-and-decompress an image at quality `q`. `subsample` enables
/// 4:2:0 chroma subsampling on 3-channel images. Deterministic: identical
/// inputs give bit-identical outputs.
pub fn jpeg_roundtrip(img: &ImageF32, q: QualityFactor, subsample: bool) -> Result<ImageF32> {
    let table = quant_table_for_quality(q);
    match img.channels() {
        1 => {
            let plane = &img.planes()[0];
            let out = roundtrip_plane(plane, table, false)?;
            ImageF32::new(out.height, out.width, 1, out.data)
        }
        3 => {
            let ycbcr = rgb_to_ycbcr(img)?;
            let recombined = if subsample {
                let (y, cb, cr) = subsample_chroma(&ycbcr)?;
                let y = roundtrip_plane(&y, table, false)?;
                let cb = roundtrip_plane(&cb, table, true)?;
                let cr = roundtrip_plane(&cr, table, true)?;
                upsample_chroma(&y, &cb, &cr)?
            } else {
                let planes = ycbcr.planes();
                let y = roundtrip_plane(&planes[0], table, false)?;
                let cb = roundtrip_plane(&planes[1], table, true)?;
                let cr = roundtrip_plane(&planes[2], table, true)?;
                ImageF32::from_planes(&[y, cb, cr])?
            };
            ycbcr_to_rgb(&recombined)
        }
        c => Err(Error::UnsupportedChannels(c)),
    }
}
