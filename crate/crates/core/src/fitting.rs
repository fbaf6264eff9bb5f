//! Appearance fitting: recover splat colors and opacities from target renders
//! with geometry held fixed.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::model::{skin_avatar, Avatar, Pose};
use crate::pose::PoseSequence;
use crate::render::video;
use crate::render::{
    project_splats, rasterize, visit_pixel_contributions, Camera, DepthOrder, Framebuffer, WHITE,
};

/// Tikhonov weight pulling colors toward their initial values.
pub const COLOR_RIDGE: f64 = 1e-6;
/// Central-difference step in logit-opacity space.
pub const FD_STEP: f64 = 1e-3;
pub const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
/// Logits are kept in this range so opacities stay strictly inside (0, 1).
const MAX_LOGIT: f64 = 20.0;

/// Posed target frames with the camera that produced them.
#[derive(Debug, Clone)]
pub struct FitTarget {
    pub frames: Vec<(Pose, Framebuffer)>,
    pub camera: Camera,
}

impl FitTarget {
    pub fn new(frames: Vec<(Pose, Framebuffer)>, camera: Camera) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("frames", "fit target needs at least one frame"));
        }
        for (i, (_, fb)) in frames.iter().enumerate() {
            if (fb.width, fb.height) != (camera.width, camera.height) {
                return Err(Error::Mismatch(format!(
                    "target frame {i} is {}x{}, camera is {}x{}",
                    fb.width, fb.height, camera.width, camera.height
                )));
            }
        }
        Ok(Self { frames, camera })
    }

    /// Reads `pose.json`, `camera.json` and the frame PNGs of a target directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let poses = PoseSequence::load(&dir.join("pose.json"))?;
        let camera = Camera::load(&dir.join("camera.json"))?;
        let images = video::read_framebuffers(dir, WHITE)?;
        if images.len() != poses.len() {
            return Err(Error::Mismatch(format!(
                "{} target frames but {} poses",
                images.len(),
                poses.len()
            )));
        }
        Self::new(poses.frames.into_iter().zip(images).collect(), camera)
    }

    /// Writes the directory layout read by [`FitTarget::load`].
    pub fn save(&self, dir: &Path) -> Result<()> {
        error::create_dir_all(dir)?;
        let poses = PoseSequence::new(
            1.0,
            self.frames.iter().map(|(p, _)| p.clone()).collect(),
            "fit-target",
        )?;
        poses.save(&dir.join("pose.json"))?;
        self.camera.save(&dir.join("camera.json"))?;
        let images: Vec<Framebuffer> = self.frames.iter().map(|(_, f)| f.clone()).collect();
        video::write_framebuffers(dir, &images, 1.0)?;
        Ok(())
    }

    fn pixel_count(&self) -> usize {
        self.frames.len() * self.camera.width as usize * self.camera.height as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss before the first and after every accepted iteration.
    pub loss_history: Vec<f64>,
}

/// Mean squared RGB error between white-background renders and targets.
pub fn photometric_loss(avatar: &Avatar, target: &FitTarget) -> Result<f64> {
    let sums = target
        .frames
        .par_iter()
        .map(|(pose, wanted)| {
            let posed = skin_avatar(avatar, pose)?;
            let fb = rasterize(&project_splats(&posed, &target.camera), &target.camera, WHITE);
            let mut sum = 0.0;
            for y in 0..fb.height {
                for x in 0..fb.width {
                    let (a, b) = (fb.flattened(x, y), wanted.flattened(x, y));
                    sum += (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sums.iter().sum::<f64>() / (3 * target.pixel_count()) as f64)
}

/// Normal equations of the per-channel color least-squares problem.
///
/// With geometry and opacity fixed each rendered pixel is
/// `sum_i w_i c_i + T * white`, so colors solve `(AᵀA + λI) c = Aᵀ(y - T) + λ c0`.
#[derive(Debug, Clone)]
pub struct ColorSystem {
    /// `AᵀA`, splats × splats.
    pub normal: DMatrix<f64>,
    /// `Aᵀ(y - T·white)` per channel.
    pub rhs: [DVector<f64>; 3],
    /// Total blend weight of each splat divided by the number of target pixels.
    pub coverage: Vec<f64>,
    pub initial: Vec<[f64; 3]>,
}

impl ColorSystem {
    pub fn build(avatar: &Avatar, target: &FitTarget) -> Result<Self> {
        let n = avatar.splats().len();
        let cam = &target.camera;
        let partials = target
            .frames
            .par_iter()
            .map(|(pose, wanted)| {
                let posed = skin_avatar(avatar, pose)?;
                let projected = project_splats(&posed, cam);
                let order = DepthOrder::new(&projected);
                let mut normal = DMatrix::<f64>::zeros(n, n);
                let mut rhs = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
                let mut weight_sum = vec![0.0; n];
                let mut contributions: Vec<(usize, f64)> = Vec::new();
                for y in 0..cam.height {
                    let row = order.row(y);
                    let py = y as f64 + 0.5;
                    for x in 0..cam.width {
                        contributions.clear();
                        let t = visit_pixel_contributions(&row, x as f64 + 0.5, py, |s, w| {
                            contributions.push((s.source, w))
                        });
                        let observed = wanted.flattened(x, y);
                        for &(a, wa) in &contributions {
                            weight_sum[a] += wa;
                            for &(b, wb) in &contributions {
                                normal[(a, b)] += wa * wb;
                            }
                            for c in 0..3 {
                                rhs[c][a] += wa * (observed[c] - t * WHITE[c]);
                            }
                        }
                    }
                }
                Ok((normal, rhs, weight_sum))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut normal = DMatrix::<f64>::zeros(n, n);
        let mut rhs = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
        let mut coverage = vec![0.0; n];
        for (nm, r, w) in partials {
            normal += nm;
            for c in 0..3 {
                rhs[c] += &r[c];
            }
            for (acc, v) in coverage.iter_mut().zip(w) {
                *acc += v;
            }
        }
        let pixels = target.pixel_count() as f64;
        coverage.iter_mut().for_each(|v| *v /= pixels);
        Ok(Self {
            normal,
            rhs,
            coverage,
            initial: avatar.splats().iter().map(|s| s.color).collect(),
        })
    }

    /// Unclamped ridge solution.
    pub fn solve(&self) -> Result<Vec<[f64; 3]>> {
        let n = self.initial.len();
        let regularized = &self.normal + DMatrix::<f64>::identity(n, n) * COLOR_RIDGE;
        let chol = regularized
            .cholesky()
            .ok_or_else(|| Error::Internal("ridge-regularized color system is not positive definite".into()))?;
        let mut colors = vec![[0.0; 3]; n];
        for c in 0..3 {
            let prior = DVector::from_iterator(n, self.initial.iter().map(|col| col[c]));
            let solution = chol.solve(&(&self.rhs[c] + prior * COLOR_RIDGE));
            for (i, v) in solution.iter().enumerate() {
                colors[i][c] = *v;
            }
        }
        Ok(colors)
    }

    /// Norm of `(AᵀA + λI) c - (rhs + λ c0)` over all channels.
    pub fn residual_norm(&self, colors: &[[f64; 3]]) -> f64 {
        let n = self.initial.len();
        let regularized = &self.normal + DMatrix::<f64>::identity(n, n) * COLOR_RIDGE;
        (0..3)
            .map(|c| {
                let x = DVector::from_iterator(n, colors.iter().map(|col| col[c]));
                let prior = DVector::from_iterator(n, self.initial.iter().map(|col| col[c]));
                (&regularized * x - (&self.rhs[c] + prior * COLOR_RIDGE)).norm_squared()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn rhs_norm(&self) -> f64 {
        self.rhs.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt()
    }
}

/// Solves for colors in closed form; only colors change (clamped to `[0, 1]`).
pub fn fit_colors(avatar: &Avatar, target: &FitTarget) -> Result<(Avatar, FitReport)> {
    let initial_loss = photometric_loss(avatar, target)?;
    let system = ColorSystem::build(avatar, target)?;
    let fitted = avatar.with_colors(&system.solve()?)?;
    let fitted_loss = photometric_loss(&fitted, target)?;
    // Clamping can in principle lose to the starting point; never regress.
    let (result, final_loss) = if fitted_loss <= initial_loss {
        (fitted, fitted_loss)
    } else {
        (avatar.clone(), initial_loss)
    };
    Ok((
        result,
        FitReport {
            initial_loss,
            final_loss,
            iterations: 1,
            converged: true,
            loss_history: vec![initial_loss, final_loss],
        },
    ))
}

fn logit(o: f64) -> f64 {
    let o = o.clamp(1e-6, 1.0 - 1e-6);
    (o / (1.0 - o)).ln()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn loss_at_logits(avatar: &Avatar, target: &FitTarget, logits: &[f64]) -> Result<f64> {
    let opacities: Vec<f64> = logits.iter().map(|&t| sigmoid(t)).collect();
    photometric_loss(&avatar.with_opacities(&opacities)?, target)
}

/// Central finite-difference gradient of the loss in logit-opacity space.
pub fn opacity_gradient(avatar: &Avatar, target: &FitTarget, logits: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..logits.len())
        .map(|i| {
            let mut plus = logits.to_vec();
            let mut minus = logits.to_vec();
            plus[i] += h;
            minus[i] -= h;
            Ok((loss_at_logits(avatar, target, &plus)? - loss_at_logits(avatar, target, &minus)?) / (2.0 * h))
        })
        .collect()
}

pub fn opacity_logits(avatar: &Avatar) -> Vec<f64> {
    avatar.splats().iter().map(|s| logit(s.opacity)).collect()
}

/// Steepest descent on logit-opacities with Armijo backtracking.
///
/// Each step moves along the unit gradient direction, starting at length 1
/// (in logit units) and halving until the Armijo condition holds; a failed
/// line search ends the run with `converged = false`.
pub fn fit_opacities(avatar: &Avatar, target: &FitTarget, steps: usize) -> Result<(Avatar, FitReport)> {
    if steps == 0 {
        return Err(Error::InvalidArgument("opacity fitting needs at least one step".into()));
    }
    let mut logits: Vec<f64> = opacity_logits(avatar).iter().map(|t| t.clamp(-MAX_LOGIT, MAX_LOGIT)).collect();
    let initial_loss = loss_at_logits(avatar, target, &logits)?;
    let mut loss = initial_loss;
    let mut loss_history = vec![initial_loss];
    let mut converged = true;
    let mut iterations = 0;

    for _ in 0..steps {
        iterations += 1;
        let grad = opacity_gradient(avatar, target, &logits, FD_STEP)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm == 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = logits
                .iter()
                .zip(&grad)
                .map(|(t, g)| (t - step * g / grad_norm).clamp(-MAX_LOGIT, MAX_LOGIT))
                .collect();
            let candidate_loss = loss_at_logits(avatar, target, &candidate)?;
            if candidate_loss <= loss - ARMIJO_C * step * grad_norm {
                accepted = Some((candidate, candidate_loss));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((next, next_loss)) => {
                logits = next;
                loss = next_loss;
                loss_history.push(loss);
            }
            None => {
                converged = false;
                break;
            }
        }
    }

    let opacities: Vec<f64> = logits.iter().map(|&t| sigmoid(t)).collect();
    Ok((
        avatar.with_opacities(&opacities)?,
        FitReport {
            initial_loss,
            final_loss: loss,
            iterations,
            converged,
            loss_history,
        },
    ))
}
