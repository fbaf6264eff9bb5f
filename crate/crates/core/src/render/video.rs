//! Video directories: `frame_%06d.png` (8-bit RGBA) plus `meta.json`.

use std::path::{Path, PathBuf};

use image::ImageReader;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::framebuffer::{Framebuffer, RgbImage};
use crate::error::{self, Error, Result};

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoMeta {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub num_frames: usize,
}

pub fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("frame_{index:06}.png"))
}

/// Writes white-background renders with their coverage alpha.
pub fn write_framebuffers(dir: &Path, frames: &[Framebuffer], fps: f64) -> Result<VideoMeta> {
    let (width, height) = dimensions(frames.iter().map(|f| (f.width, f.height)))?;
    write_frames(dir, width, height, fps, frames.len(), |i| frames[i].to_rgba8())
}

/// Writes opaque frames (alpha 255).
pub fn write_rgb_frames(dir: &Path, frames: &[RgbImage], fps: f64) -> Result<VideoMeta> {
    let (width, height) = dimensions(frames.iter().map(|f| (f.width, f.height)))?;
    write_frames(dir, width, height, fps, frames.len(), |i| frames[i].to_rgba8())
}

fn dimensions(mut sizes: impl Iterator<Item = (u32, u32)>) -> Result<(u32, u32)> {
    let first = sizes
        .next()
        .ok_or_else(|| Error::InvalidArgument("cannot write a video without frames".into()))?;
    if sizes.any(|s| s != first) {
        return Err(Error::Mismatch("frames of one video differ in size".into()));
    }
    Ok(first)
}

fn write_frames<F>(dir: &Path, width: u32, height: u32, fps: f64, count: usize, encode: F) -> Result<VideoMeta>
where
    F: Fn(usize) -> Vec<u8> + Sync,
{
    error::create_dir_all(dir)?;
    clear_frames(dir)?;
    (0..count).into_par_iter().try_for_each(|i| {
        let path = frame_path(dir, i);
        image::save_buffer(&path, &encode(i), width, height, image::ExtendedColorType::Rgba8).map_err(|e| {
            Error::Write {
                path: path.clone(),
                source: std::io::Error::other(e.to_string()),
            }
        })
    })?;
    let meta = VideoMeta {
        fps,
        width,
        height,
        num_frames: count,
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta always serializes");
    error::write_string(&dir.join(META_FILE), &json)?;
    Ok(meta)
}

/// Removes frames left by an earlier, possibly longer, write.
fn clear_frames(dir: &Path) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries.flatten() {
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("frame_") && name.ends_with(".png") {
            std::fs::remove_file(entry.path()).map_err(|source| Error::Write {
                path: entry.path(),
                source,
            })?;
        }
    }
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<VideoMeta> {
    let path = dir.join(META_FILE);
    let text = error::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn read_png_rgba(path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let img = ImageReader::open(path)
        .map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_rgba8();
    Ok((img.width(), img.height(), img.into_raw()))
}

/// Loads any PNG as opaque RGB, discarding alpha.
pub fn load_png_rgb(path: &Path) -> Result<RgbImage> {
    let img = ImageReader::open(path)
        .map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_rgb8();
    let (w, h) = (img.width(), img.height());
    Ok(RgbImage::from_rgb8(w, h, img.as_raw()))
}

pub fn save_png_rgb(path: &Path, image: &RgbImage) -> Result<()> {
    let data: Vec<u8> = image
        .pixels
        .iter()
        .flat_map(|p| p.map(super::framebuffer::quantize))
        .collect();
    image::save_buffer(path, &data, image.width, image.height, image::ExtendedColorType::Rgb8).map_err(|e| {
        Error::Write {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        }
    })
}

/// One frame's RGB channels (the visible image for both white-background and
/// composited videos).
pub fn read_rgb_frame(dir: &Path, index: usize) -> Result<RgbImage> {
    load_png_rgb(&frame_path(dir, index))
}

/// White-background frames decoded back to premultiplied foreground.
pub fn read_framebuffers(dir: &Path, background: [f64; 3]) -> Result<Vec<Framebuffer>> {
    let meta = read_meta(dir)?;
    (0..meta.num_frames)
        .into_par_iter()
        .map(|i| {
            let (w, h, data) = read_png_rgba(&frame_path(dir, i))?;
            if (w, h) != (meta.width, meta.height) {
                return Err(Error::Mismatch(format!(
                    "frame {i} is {w}x{h}, meta says {}x{}",
                    meta.width, meta.height
                )));
            }
            Ok(Framebuffer::from_rgba8(w, h, &data, background))
        })
        .collect()
}
