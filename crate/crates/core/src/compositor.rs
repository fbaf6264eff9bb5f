//! Placing white-background renders over background images.
//!
//! The subject is scaled once per video so its sequence-wide bounding box
//! spans `subject_height_frac` of the background height, and the bottom
//! centre of that box is pinned to the ground line. Motion inside the source
//! frame (including root drift) carries over at the same scale.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::video::{self, VideoMeta};
use crate::render::{Framebuffer, RgbImage};

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundImage {
    pub id: String,
    pub image: RgbImage,
}

impl BackgroundImage {
    pub fn new(id: impl Into<String>, image: RgbImage) -> Result<Self> {
        if image.width < 1 || image.height < 1 {
            return Err(Error::invalid("background", "background must be at least 1x1"));
        }
        Ok(Self { id: id.into(), image })
    }

    /// Loads a PNG; the id is the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
        Self::new(id, video::load_png_rgb(path)?)
    }

    pub fn width(&self) -> u32 {
        self.image.width
    }

    pub fn height(&self) -> u32 {
        self.image.height
    }
}

fn default_ground_line() -> f64 {
    0.85
}

fn default_subject_height() -> f64 {
    0.6
}

fn default_anchor() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementPolicy {
    /// Fraction of the background height where the feet rest.
    #[serde(default = "default_ground_line")]
    pub ground_line: f64,
    /// Fraction of the background height occupied by the subject's bounding box.
    #[serde(default = "default_subject_height")]
    pub subject_height_frac: f64,
    /// Fraction of the background width where the bounding box is centred.
    #[serde(default = "default_anchor")]
    pub horizontal_anchor: f64,
}

impl Default for PlacementPolicy {
    fn default() -> Self {
        Self {
            ground_line: default_ground_line(),
            subject_height_frac: default_subject_height(),
            horizontal_anchor: default_anchor(),
        }
    }
}

impl PlacementPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ground_line", self.ground_line),
            ("subject_height_frac", self.subject_height_frac),
            ("horizontal_anchor", self.horizontal_anchor),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("placement.{name}"), format!("{v} is not in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Maps foreground pixel coordinates to background ones: `bg = scale * fg + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

/// One placement per frame, all sharing a single scale.
pub fn plan_placement(frames: &[Framebuffer], bg: &BackgroundImage, policy: &PlacementPolicy) -> Result<Vec<Placement>> {
    policy.validate()?;
    let Some(first) = frames.first() else {
        return Err(Error::NoForeground);
    };
    if frames.iter().any(|f| (f.width, f.height) != (first.width, first.height)) {
        return Err(Error::Mismatch("frames of one video differ in size".into()));
    }
    let bbox = frames
        .iter()
        .filter_map(Framebuffer::alpha_bbox)
        .reduce(|a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)))
        .ok_or(Error::NoForeground)?;

    // Pixel-edge coordinates of the box.
    let (left, top, right, bottom) = (bbox.0 as f64, bbox.1 as f64, bbox.2 as f64 + 1.0, bbox.3 as f64 + 1.0);
    let scale = policy.subject_height_frac * bg.height() as f64 / (bottom - top);
    let anchor_x = policy.horizontal_anchor * bg.width() as f64;
    let anchor_y = policy.ground_line * bg.height() as f64;
    let placement = Placement {
        scale,
        tx: anchor_x - scale * 0.5 * (left + right),
        ty: anchor_y - scale * bottom,
    };
    Ok(vec![placement; frames.len()])
}

/// Source-over of a bilinearly resampled premultiplied foreground onto `bg`.
pub fn composite_frame(fg: &Framebuffer, bg: &BackgroundImage, xform: &Placement) -> Result<RgbImage> {
    if !(xform.scale.is_finite() && xform.scale > 0.0) {
        return Err(Error::InvalidArgument(format!("placement scale {} must be positive", xform.scale)));
    }
    let mut out = bg.image.clone();
    let (bw, bh) = (bg.width() as usize, bg.height() as usize);

    // Background pixels whose centres map inside the foreground's support.
    let span = |offset: f64, size: u32, limit: usize| {
        let lo = (offset - xform.scale).floor().max(0.0) as usize;
        let hi = ((offset + xform.scale * (size as f64 + 1.0)).ceil().max(0.0) as usize).min(limit);
        lo..hi
    };
    let xs = span(xform.tx, fg.width, bw);
    let ys = span(xform.ty, fg.height, bh);
    if xs.is_empty() || ys.is_empty() {
        return Ok(out);
    }

    out.pixels
        .par_chunks_mut(bw)
        .enumerate()
        .filter(|(y, _)| ys.contains(y))
        .for_each(|(y, row)| {
            let v = (y as f64 + 0.5 - xform.ty) / xform.scale - 0.5;
            for x in xs.clone() {
                let u = (x as f64 + 0.5 - xform.tx) / xform.scale - 0.5;
                let src = sample_bilinear(fg, u, v);
                if src[3] == 0.0 {
                    continue;
                }
                let px = &mut row[x];
                for c in 0..3 {
                    px[c] = (src[c] + (1.0 - src[3]) * px[c]).clamp(0.0, 1.0);
                }
            }
        });
    Ok(out)
}

/// Bilinear sample at continuous pixel-index coordinates; texels outside the
/// image are transparent.
fn sample_bilinear(fg: &Framebuffer, u: f64, v: f64) -> [f64; 4] {
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let mut acc = [0.0; 4];
    for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
            let w = wx * wy;
            if w == 0.0 {
                continue;
            }
            let (xi, yi) = (x0 as i64 + dx, y0 as i64 + dy);
            if xi < 0 || yi < 0 || xi >= fg.width as i64 || yi >= fg.height as i64 {
                continue;
            }
            let p = fg.pixel(xi as u32, yi as u32);
            for c in 0..4 {
                acc[c] += w * p[c];
            }
        }
    }
    acc
}

/// Plans once, then composites every frame.
pub fn composite_sequence(frames: &[Framebuffer], bg: &BackgroundImage, policy: &PlacementPolicy) -> Result<Vec<RgbImage>> {
    let placements = plan_placement(frames, bg, policy)?;
    frames
        .par_iter()
        .zip(&placements)
        .map(|(f, p)| composite_frame(f, bg, p))
        .collect()
}

/// [`composite_sequence`] written as a video directory.
pub fn composite_to_dir(frames: &[Framebuffer], bg: &BackgroundImage, policy: &PlacementPolicy, fps: f64, dir: &Path) -> Result<VideoMeta> {
    let out = composite_sequence(frames, bg, policy)?;
    video::write_rgb_frames(dir, &out, fps)
}
