/// Premultiplied RGBA raster plus the uniform color it was rendered over.
///
/// `pixels` hold the foreground only (`a >= max(r, g, b)`); the visible
/// white-background frame is [`Framebuffer::flattened`].
#[derive(Debug, Clone, PartialEq)]
pub struct Framebuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f64; 4]>,
    pub background: [f64; 3],
}

impl Framebuffer {
    pub fn transparent(width: u32, height: u32, background: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0.0; 4]; width as usize * height as usize],
            background,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 4] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Foreground composited over the render background.
    pub fn flattened(&self, x: u32, y: u32) -> [f64; 3] {
        flatten(self.pixel(x, y), self.background)
    }

    pub fn flattened_image(&self) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| flatten(p, self.background)).collect(),
        }
    }

    /// 8-bit RGBA with the flattened color and the coverage alpha.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 4);
        for &p in &self.pixels {
            let rgb = flatten(p, self.background);
            out.extend(rgb.iter().map(|&v| quantize(v)));
            out.push(quantize(p[3]));
        }
        out
    }

    /// Inverse of [`Framebuffer::to_rgba8`] for a known render background.
    pub fn from_rgba8(width: u32, height: u32, data: &[u8], background: [f64; 3]) -> Self {
        let pixels = data
            .chunks_exact(4)
            .map(|px| {
                let a = px[3] as f64 / 255.0;
                let mut out = [0.0, 0.0, 0.0, a];
                for c in 0..3 {
                    let flat = px[c] as f64 / 255.0;
                    out[c] = (flat - background[c] * (1.0 - a)).clamp(0.0, a);
                }
                out
            })
            .collect();
        Self {
            width,
            height,
            pixels,
            background,
        }
    }

    /// Bounding box `(min_x, min_y, max_x, max_y)` of pixels with nonzero alpha.
    pub fn alpha_bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bbox: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.pixel(x, y)[3] > 0.0 {
                    bbox = Some(match bbox {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bbox
    }
}

fn flatten(p: [f64; 4], bg: [f64; 3]) -> [f64; 3] {
    let t = 1.0 - p[3];
    [p[0] + bg[0] * t, p[1] + bg[1] * t, p[2] + bg[2] * t]
}

/// `round(v * 255)` after clamping to `[0, 1]`.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Opaque RGB raster with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, color: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn from_rgb8(width: u32, height: u32, data: &[u8]) -> Self {
        Self {
            width,
            height,
            pixels: data
                .chunks_exact(3)
                .map(|p| [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0])
                .collect(),
        }
    }

    /// 8-bit RGBA with an opaque alpha channel.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 4);
        for p in &self.pixels {
            out.extend(p.iter().map(|&v| quantize(v)));
            out.push(255);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgba8_round_trip_keeps_premultiplication() {
        let mut fb = Framebuffer::transparent(2, 1, [1.0; 3]);
        fb.pixels[0] = [0.3, 0.1, 0.0, 0.6];
        let back = Framebuffer::from_rgba8(2, 1, &fb.to_rgba8(), [1.0; 3]);
        for c in 0..4 {
            assert!((back.pixels[0][c] - fb.pixels[0][c]).abs() <= 1.0 / 255.0);
        }
        assert_eq!(back.pixels[1], [0.0; 4]);
        assert!(back.pixels[0][..3].iter().all(|&v| v <= back.pixels[0][3]));
    }

    #[test]
    fn bbox_of_empty_frame_is_none() {
        let mut fb = Framebuffer::transparent(4, 4, [1.0; 3]);
        assert_eq!(fb.alpha_bbox(), None);
        fb.pixels[1 * 4 + 2][3] = 0.5;
        fb.pixels[3 * 4 + 1][3] = 0.5;
        assert_eq!(fb.alpha_bbox(), Some((1, 1, 2, 3)));
    }
}
