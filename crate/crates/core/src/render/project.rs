use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2};

use super::camera::Camera;
use super::raster::MIN_ALPHA;
use crate::model::PosedSplat;

/// Splats closer than this (camera-space depth, meters) are culled.
pub const NEAR_PLANE: f64 = 0.01;
/// Isotropic screen-space dilation added to every projected covariance, pixels².
pub const COVARIANCE_DILATION: f64 = 0.3;

/// A splat projected to the image plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    /// Pixel coordinates of the projected mean.
    pub center: Vector2<f64>,
    pub cov: Matrix2<f64>,
    /// Inverse of `cov`.
    pub conic: Matrix2<f64>,
    /// Camera-space depth, meters.
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    /// Radius (pixels) outside which the splat's alpha is below [`MIN_ALPHA`].
    pub extent: f64,
    /// Index of the source splat.
    pub source: usize,
}

impl Splat2D {
    /// Unclamped `opacity * exp(-d^T cov^-1 d / 2)` at pixel position `(px, py)`.
    pub fn falloff(&self, px: f64, py: f64) -> f64 {
        let d = Vector2::new(px - self.center.x, py - self.center.y);
        let q = d.dot(&(self.conic * d));
        self.opacity * (-0.5 * q).exp()
    }
}

/// Projects one posed splat; `None` when it is culled.
///
/// `cov2d = J W Σ Wᵀ Jᵀ + 0.3 I` with `Σ = R diag(scale)² Rᵀ`, `W` the
/// world-to-camera rotation and `J` the pinhole Jacobian at the mean.
pub fn project_splat(splat: &PosedSplat, cam: &Camera, source: usize) -> Option<Splat2D> {
    // Contributions below MIN_ALPHA are skipped by the rasterizer anyway.
    if splat.opacity < MIN_ALPHA {
        return None;
    }
    let projected = project_unculled(splat, cam, source)?;
    let (cx, cy, extent) = (projected.center.x, projected.center.y, projected.extent);
    let (w_px, h_px) = (cam.width as f64, cam.height as f64);
    if cx + extent < 0.0 || cx - extent > w_px || cy + extent < 0.0 || cy - extent > h_px {
        return None;
    }
    Some(projected)
}

/// Projection without viewport culling; `None` only in front of the near plane.
pub(crate) fn project_unculled(splat: &PosedSplat, cam: &Camera, source: usize) -> Option<Splat2D> {
    let p = cam.to_camera(&splat.mu);
    if p.z <= NEAR_PLANE {
        return None;
    }
    let r = splat.rot.to_rotation_matrix().into_inner();
    let s2 = Matrix3::from_diagonal(&splat.scale.component_mul(&splat.scale));
    let sigma = r * s2 * r.transpose();
    let w = cam.orientation.inverse().to_rotation_matrix().into_inner();
    let (f, z) = (cam.focal, p.z);
    let j = Matrix2x3::new(
        f / z, 0.0, -f * p.x / (z * z),
        0.0, f / z, -f * p.y / (z * z),
    );
    let t = j * w;
    let mut cov = t * sigma * t.transpose() + Matrix2::identity() * COVARIANCE_DILATION;
    // Symmetrize away rounding.
    let off = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    cov[(0, 1)] = off;
    cov[(1, 0)] = off;
    let conic = cov.try_inverse()?;
    let [cx, cy] = cam.project(&p);

    // alpha >= MIN_ALPHA requires d^T cov^-1 d <= 2 ln(opacity / MIN_ALPHA).
    let reach = (2.0 * (splat.opacity / MIN_ALPHA).ln()).max(0.0);
    let extent = (reach * largest_eigenvalue(&cov)).sqrt();

    Some(Splat2D {
        center: Vector2::new(cx, cy),
        cov,
        conic,
        depth: z,
        color: splat.color,
        opacity: splat.opacity,
        extent,
        source,
    })
}

pub fn project_splats(splats: &[PosedSplat], cam: &Camera) -> Vec<Splat2D> {
    splats
        .iter()
        .enumerate()
        .filter_map(|(i, s)| project_splat(s, cam, i))
        .collect()
}

fn largest_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mid = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mid + radius
}
