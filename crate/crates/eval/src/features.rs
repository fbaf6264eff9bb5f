//! Handcrafted motion-energy features: grayscale frame differences on a
//! coarse spatiotemporal grid.

use std::path::Path;

use reenact_core::render::{video, RgbImage};

use crate::error::{EvalError, Result};

pub const NUM_SAMPLES: usize = 16;
pub const GRID: usize = 16;
pub const POOL: usize = 4;
pub const CELLS: usize = (GRID / POOL) * (GRID / POOL);
pub const FEATURE_DIM: usize = (NUM_SAMPLES - 1) * CELLS;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `count` endpoint-inclusive indices into `0..n`: `round(k (n-1) / (count-1))`.
pub fn sample_indices(n: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|k| ((k * (n - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// For each of `dst` output cells, the `(source index, weight)` overlaps of
/// an area-average from `src` samples. Weights of a cell sum to one.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let step = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * step, (o + 1) as f64 * step);
            let mut out = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src {
                let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                if overlap > 0.0 {
                    out.push((s, overlap / step));
                }
                s += 1;
            }
            out
        })
        .collect()
}

/// Luma of `image`, area-averaged onto a `GRID x GRID` grid (row-major).
pub fn grayscale_grid(image: &RgbImage) -> Vec<f64> {
    let (w, h) = (image.width as usize, image.height as usize);
    let wx = area_weights(w, GRID);
    let wy = area_weights(h, GRID);
    let luma: Vec<f64> = image
        .pixels
        .iter()
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect();
    // Columns first, then rows.
    let mut rows = vec![0.0; h * GRID];
    for y in 0..h {
        for (ox, cell) in wx.iter().enumerate() {
            rows[y * GRID + ox] = cell.iter().map(|&(x, wgt)| luma[y * w + x] * wgt).sum();
        }
    }
    let mut grid = vec![0.0; GRID * GRID];
    for (oy, cell) in wy.iter().enumerate() {
        for ox in 0..GRID {
            grid[oy * GRID + ox] = cell.iter().map(|&(y, wgt)| rows[y * GRID + ox] * wgt).sum();
        }
    }
    grid
}

fn pooled_difference(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    let side = GRID / POOL;
    for cy in 0..side {
        for cx in 0..side {
            let mut acc = 0.0;
            for y in cy * POOL..(cy + 1) * POOL {
                for x in cx * POOL..(cx + 1) * POOL {
                    acc += (b[y * GRID + x] - a[y * GRID + x]).abs();
                }
            }
            out.push(acc / (POOL * POOL) as f64);
        }
    }
}

fn features_from_grids(grids: &[Vec<f64>]) -> FeatureVector {
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for pair in grids.windows(2) {
        pooled_difference(&pair[0], &pair[1], &mut values);
    }
    FeatureVector { values }
}

/// Features of an in-memory clip of at least two frames.
pub fn extract_features(frames: &[RgbImage]) -> Result<FeatureVector> {
    if frames.len() < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "feature extraction needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let grids: Vec<Vec<f64>> = sample_indices(frames.len(), NUM_SAMPLES)
        .into_iter()
        .map(|i| grayscale_grid(&frames[i]))
        .collect();
    Ok(features_from_grids(&grids))
}

/// Features of a video directory; only the sampled frames are decoded.
pub fn extract_features_from_dir(dir: &Path) -> Result<FeatureVector> {
    let meta = video::read_meta(dir)?;
    if meta.num_frames < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "{}: feature extraction needs at least 2 frames, got {}",
            dir.display(),
            meta.num_frames
        )));
    }
    let grids = sample_indices(meta.num_frames, NUM_SAMPLES)
        .into_iter()
        .map(|i| Ok(grayscale_grid(&video::read_rgb_frame(dir, i)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(features_from_grids(&grids))
}
