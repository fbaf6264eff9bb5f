use rayon::prelude::*;

use super::camera::Camera;
use super::framebuffer::Framebuffer;
use super::project::Splat2D;

/// Per-splat alpha cap.
pub const MAX_ALPHA: f64 = 0.99;
/// Contributions with smaller alpha are skipped.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;
/// Blending stops once transmittance drops below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

/// Splats sorted front to back; equal depths keep input order.
pub struct DepthOrder<'a> {
    sorted: Vec<&'a Splat2D>,
}

impl<'a> DepthOrder<'a> {
    pub fn new(splats: &'a [Splat2D]) -> Self {
        let mut sorted: Vec<&Splat2D> = splats.iter().collect();
        // Stable sort, so ties fall back to input index.
        sorted.sort_by(|a, b| a.depth.total_cmp(&b.depth));
        Self { sorted }
    }

    /// Splats whose extent covers the centre line of pixel row `y`, in depth order.
    pub fn row(&self, y: u32) -> Vec<&'a Splat2D> {
        let py = y as f64 + 0.5;
        self.sorted
            .iter()
            .copied()
            .filter(|s| (s.center.y - py).abs() <= s.extent)
            .collect()
    }
}

/// Front-to-back blend at pixel centre `(px, py)`.
///
/// Calls `visit(splat, weight)` for every contributing splat, where `weight`
/// is `alpha * T` (the factor applied to its color), and returns the final
/// transmittance.
pub fn visit_pixel_contributions<F>(row: &[&Splat2D], px: f64, py: f64, mut visit: F) -> f64
where
    F: FnMut(&Splat2D, f64),
{
    let mut transmittance = 1.0;
    for splat in row {
        if (splat.center.x - px).abs() > splat.extent {
            continue;
        }
        let alpha = splat.falloff(px, py).clamp(0.0, MAX_ALPHA);
        if alpha < MIN_ALPHA {
            continue;
        }
        visit(splat, alpha * transmittance);
        transmittance *= 1.0 - alpha;
        if transmittance < MIN_TRANSMITTANCE {
            break;
        }
    }
    transmittance
}

/// Rasterizes `splats` into a premultiplied framebuffer rendered over `background`.
pub fn rasterize(splats: &[Splat2D], cam: &Camera, background: [f64; 3]) -> Framebuffer {
    let mut fb = Framebuffer::transparent(cam.width, cam.height, background);
    let order = DepthOrder::new(splats);
    let width = cam.width as usize;
    fb.pixels
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row_pixels)| {
            let row = order.row(y as u32);
            if row.is_empty() {
                return;
            }
            let py = y as f64 + 0.5;
            for (x, out) in row_pixels.iter_mut().enumerate() {
                let mut rgb = [0.0; 3];
                let t = visit_pixel_contributions(&row, x as f64 + 0.5, py, |s, w| {
                    for c in 0..3 {
                        rgb[c] += s.color[c] * w;
                    }
                });
                let a = 1.0 - t;
                // Rounding can push a channel marginally past the coverage.
                *out = [rgb[0].min(a), rgb[1].min(a), rgb[2].min(a), a];
            }
        });
    fb
}
