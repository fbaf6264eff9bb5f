use std::path::Path;

use serde::{Deserialize, Serialize};

use super::skeleton::{Joint, Skeleton};
use crate::error::{self, Error, Result};
use crate::math::{finite3, quat_from_wxyz, quat_to_wxyz, vec3_array, Quat, Vec3};

pub const MAX_INFLUENCES: usize = 4;
const MIN_SCALE: f64 = 1e-5;
const MAX_SCALE: f64 = 10.0;
/// Weight sums this close to one are renormalized on load.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-3;

/// A canonical-space anisotropic Gaussian bound to up to four joints.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSplat {
    pub mu: Vec3,
    /// Per-axis standard deviations, meters.
    pub scale: Vec3,
    pub rot: Quat,
    pub color: [f64; 3],
    pub opacity: f64,
    /// `(joint, weight)` pairs; weights are non-negative and sum to one.
    pub weights: Vec<(usize, f64)>,
}

impl GaussianSplat {
    /// Joint with the largest weight; the first one wins ties.
    pub fn dominant_joint(&self) -> usize {
        let mut best = self.weights[0];
        for &w in &self.weights[1..] {
            if w.1 > best.1 {
                best = w;
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Avatar {
    pub id: String,
    skeleton: Skeleton,
    splats: Vec<GaussianSplat>,
}

impl Avatar {
    /// Validates every splat against the skeleton and normalizes weights.
    pub fn new(id: impl Into<String>, skeleton: Skeleton, splats: Vec<GaussianSplat>) -> Result<Self> {
        if splats.is_empty() {
            return Err(Error::invalid("splats", "avatar needs at least one splat"));
        }
        let splats = splats
            .into_iter()
            .enumerate()
            .map(|(i, s)| validate_splat(s, skeleton.len(), &format!("splats[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id: id.into(),
            skeleton,
            splats,
        })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn splats(&self) -> &[GaussianSplat] {
        &self.splats
    }

    /// Replaces splat colors, keeping everything else. Colors are clamped to `[0, 1]`.
    pub fn with_colors(&self, colors: &[[f64; 3]]) -> Result<Self> {
        if colors.len() != self.splats.len() {
            return Err(Error::Mismatch(format!(
                "{} colors for {} splats",
                colors.len(),
                self.splats.len()
            )));
        }
        let mut out = self.clone();
        for (splat, c) in out.splats.iter_mut().zip(colors) {
            splat.color = c.map(|v| v.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    /// Replaces splat opacities, keeping everything else. Opacities are clamped to `[0, 1]`.
    pub fn with_opacities(&self, opacities: &[f64]) -> Result<Self> {
        if opacities.len() != self.splats.len() {
            return Err(Error::Mismatch(format!(
                "{} opacities for {} splats",
                opacities.len(),
                self.splats.len()
            )));
        }
        let mut out = self.clone();
        for (splat, &o) in out.splats.iter_mut().zip(opacities) {
            splat.opacity = o.clamp(0.0, 1.0);
        }
        Ok(out)
    }

    /// Parses and validates an avatar document.
    pub fn from_document(text: &str) -> Result<Self> {
        let doc: AvatarDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        doc.into_avatar()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        Self::from_document(&text).map_err(|e| e.within(&path.display().to_string()))
    }

    pub fn to_document(&self) -> String {
        let doc = AvatarDoc::from_avatar(self);
        serde_json::to_string_pretty(&doc).expect("avatar documents always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        error::write_string(path, &self.to_document())
    }
}

fn validate_splat(mut s: GaussianSplat, joints: usize, path: &str) -> Result<GaussianSplat> {
    if !s.mu.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid(format!("{path}.mu"), "non-finite mean"));
    }
    if !s.scale.iter().all(|c| (MIN_SCALE..=MAX_SCALE).contains(c)) {
        return Err(Error::invalid(
            format!("{path}.scale"),
            format!("scale out of range [{MIN_SCALE}, {MAX_SCALE}]"),
        ));
    }
    if !s.color.iter().all(|c| (0.0..=1.0).contains(c)) {
        return Err(Error::invalid(format!("{path}.color"), "color out of range"));
    }
    if !(0.0..=1.0).contains(&s.opacity) {
        return Err(Error::invalid(format!("{path}.opacity"), "opacity out of range"));
    }
    if s.weights.is_empty() || s.weights.len() > MAX_INFLUENCES {
        return Err(Error::invalid(
            format!("{path}.weights"),
            format!("need 1 to {MAX_INFLUENCES} weights, got {}", s.weights.len()),
        ));
    }
    for (k, &(joint, w)) in s.weights.iter().enumerate() {
        if joint >= joints {
            return Err(Error::invalid(
                format!("{path}.weights[{k}]"),
                format!("joint index {joint} out of range for {joints} joints"),
            ));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::invalid(format!("{path}.weights[{k}]"), "negative weight"));
        }
        if s.weights[..k].iter().any(|&(other, _)| other == joint) {
            return Err(Error::invalid(
                format!("{path}.weights[{k}]"),
                format!("joint {joint} listed twice"),
            ));
        }
    }
    let sum: f64 = s.weights.iter().map(|w| w.1).sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::invalid(
            format!("{path}.weights"),
            format!("weights sum to {sum}, expected 1"),
        ));
    }
    // Already-normalized inputs are left untouched so save/load is lossless.
    if (sum - 1.0).abs() > 1e-12 {
        for w in &mut s.weights {
            w.1 /= sum;
        }
    }
    Ok(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AvatarDoc {
    version: u32,
    id: String,
    skeleton: SkeletonDoc,
    splats: Vec<SplatDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonDoc {
    joints: Vec<JointDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    parent: Option<usize>,
    offset: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplatDoc {
    mu: [f64; 3],
    scale: [f64; 3],
    rot: [f64; 4],
    color: [f64; 3],
    opacity: f64,
    weights: Vec<(usize, f64)>,
}

impl AvatarDoc {
    fn into_avatar(self) -> Result<Avatar> {
        if self.version != 1 {
            return Err(Error::invalid("version", format!("unsupported version {}", self.version)));
        }
        let joints = self
            .skeleton
            .joints
            .into_iter()
            .enumerate()
            .map(|(i, j)| {
                Ok(Joint {
                    name: j.name,
                    parent: j.parent,
                    offset: finite3(j.offset, &format!("skeleton.joints[{i}].offset"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let skeleton = Skeleton::new(joints)?;
        let splats = self
            .splats
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let path = format!("splats[{i}]");
                Ok(GaussianSplat {
                    mu: finite3(s.mu, &format!("{path}.mu"))?,
                    scale: finite3(s.scale, &format!("{path}.scale"))?,
                    rot: quat_from_wxyz(s.rot, &format!("{path}.rot"))?,
                    color: s.color,
                    opacity: s.opacity,
                    weights: s.weights,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Avatar::new(self.id, skeleton, splats)
    }

    fn from_avatar(avatar: &Avatar) -> Self {
        Self {
            version: 1,
            id: avatar.id.clone(),
            skeleton: SkeletonDoc {
                joints: avatar
                    .skeleton
                    .joints()
                    .iter()
                    .map(|j| JointDoc {
                        name: j.name.clone(),
                        parent: j.parent,
                        offset: vec3_array(&j.offset),
                    })
                    .collect(),
            },
            splats: avatar
                .splats
                .iter()
                .map(|s| SplatDoc {
                    mu: vec3_array(&s.mu),
                    scale: vec3_array(&s.scale),
                    rot: quat_to_wxyz(&s.rot),
                    color: s.color,
                    opacity: s.opacity,
                    weights: s.weights.clone(),
                })
                .collect(),
        }
    }
}
