//! Decomposition of a plane into disjoint 8x8 tiles.
//!
//! Planes whose dimensions are not multiples of 8 are padded by edge
//! replication; merging crops the padding, so `merge(split(p)) == p`
//! bit-exactly on the unpadded region.

use super::Plane;
use crate::error::{Error, Result};

pub const BLOCK_SIZE: usize = 8;

/// A plane cut into row-major 8x8 tiles.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    /// Unpadded plane height.
    pub height: usize,
    /// Unpadded plane width.
    pub width: usize,
    /// Number of block rows (`ceil(height / 8)`).
    pub rows: usize,
    /// Number of block columns (`ceil(width / 8)`).
    pub cols: usize,
    /// Tiles in row-major order, each tile row-major.
    pub blocks: Vec<[f32; 64]>,
}

impl BlockGrid {
    pub fn block(&self, row: usize, col: usize) -> &[f32; 64] {
        &self.blocks[row * self.cols + col]
    }

    pub fn block_mut(&mut self, row: usize, col: usize) -> &mut [f32; 64] {
        &mut self.blocks[row * self.cols + col]
    }
}

/// Cut a plane into 8x8 tiles, replicating the last row/column into any
/// padding.
pub fn split_blocks(plane: &Plane) -> Result<BlockGrid> {
    if plane.height == 0 || plane.width == 0 {
        return Err(Error::EmptyPlane);
    }
    let rows = plane.height.div_ceil(BLOCK_SIZE);
    let cols = plane.width.div_ceil(BLOCK_SIZE);
    let mut blocks = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let mut tile = [0.0f32; 64];
            for dy in 0..BLOCK_SIZE {
                let r = (br * BLOCK_SIZE + dy).min(plane.height - 1);
                for dx in 0..BLOCK_SIZE {
                    let c = (bc * BLOCK_SIZE + dx).min(plane.width - 1);
                    tile[dy * BLOCK_SIZE + dx] = plane.get(r, c);
                }
            }
            blocks.push(tile);
        }
    }
    Ok(BlockGrid {
        height: plane.height,
        width: plane.width,
        rows,
        cols,
        blocks,
    })
}

/// Reassemble a plane, cropping any padding.
pub fn merge_blocks(grid: &BlockGrid) -> Plane {
    let mut data = vec![0.0f32; grid.height * grid.width];
    for br in 0..grid.rows {
        for bc in 0..grid.cols {
            let tile = grid.block(br, bc);
            for dy in 0..BLOCK_SIZE {
                let r = br * BLOCK_SIZE + dy;
                if r >= grid.height {
                    break;
                }
                for dx in 0..BLOCK_SIZE {
                    let c = bc * BLOCK_SIZE + dx;
                    if c >= grid.width {
                        break;
                    }
                    data[r * grid.width + c] = tile[dy * BLOCK_SIZE + dx];
                }
            }
        }
    }
    Plane {
        height: grid.height,
        width: grid.width,
        data,
    }
}
