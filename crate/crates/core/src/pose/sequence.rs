use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::math::{finite3, quat_from_wxyz, quat_to_wxyz, vec3_array, Vec3};
use crate::model::Pose;

/// Skeletal motion sampled at a constant frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub fps: f64,
    pub frames: Vec<Pose>,
    pub skeleton_ref: String,
}

impl PoseSequence {
    pub fn new(fps: f64, frames: Vec<Pose>, skeleton_ref: impl Into<String>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid("fps", format!("fps must be positive, got {fps}")));
        }
        let Some(first) = frames.first() else {
            return Err(Error::invalid("frames", "sequence has no frames"));
        };
        let joints = first.joint_count();
        if let Some(bad) = frames.iter().position(|f| f.joint_count() != joints) {
            return Err(Error::invalid(
                format!("frames[{bad}].rots"),
                format!(
                    "frame {bad} has {} rotations, expected {joints}",
                    frames[bad].joint_count()
                ),
            ));
        }
        Ok(Self {
            fps,
            frames,
            skeleton_ref: skeleton_ref.into(),
        })
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].joint_count()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Time of the last frame, seconds.
    pub fn duration(&self) -> f64 {
        (self.frames.len() - 1) as f64 / self.fps
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: PoseDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        if doc.version != 1 {
            return Err(Error::invalid("version", format!("unsupported version {}", doc.version)));
        }
        let frames = doc
            .frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let rots = f
                    .rots
                    .into_iter()
                    .enumerate()
                    .map(|(j, q)| quat_from_wxyz(q, &format!("frames[{i}].rots[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Pose {
                    root_t: finite3(f.root_t, &format!("frames[{i}].root_t"))?,
                    rots,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.fps, frames, doc.skeleton_ref)
    }

    pub fn to_document(&self) -> String {
        let doc = PoseDoc {
            version: 1,
            fps: self.fps,
            skeleton_ref: self.skeleton_ref.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| FrameDoc {
                    root_t: vec3_array(&f.root_t),
                    rots: f.rots.iter().map(quat_to_wxyz).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("pose documents always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        Self::from_document(&text).map_err(|e| e.within(&path.display().to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        error::write_string(path, &self.to_document())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    version: u32,
    fps: f64,
    skeleton_ref: String,
    frames: Vec<FrameDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    root_t: [f64; 3],
    rots: Vec<[f64; 4]>,
}

/// World-space joint positions per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSequence {
    pub fps: f64,
    pub frames: Vec<Vec<Vec3>>,
}

impl KeypointSequence {
    pub fn new(fps: f64, frames: Vec<Vec<Vec3>>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid("fps", format!("fps must be positive, got {fps}")));
        }
        let Some(first) = frames.first() else {
            return Err(Error::invalid("frames", "sequence has no frames"));
        };
        let joints = first.len();
        if let Some(bad) = frames.iter().position(|f| f.len() != joints) {
            return Err(Error::invalid(
                format!("frames[{bad}]"),
                format!("frame {bad} has {} keypoints, expected {joints}", frames[bad].len()),
            ));
        }
        Ok(Self { fps, frames })
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].len()
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: KeypointDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        if doc.version != 1 {
            return Err(Error::invalid("version", format!("unsupported version {}", doc.version)));
        }
        let frames = doc
            .frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                f.into_iter()
                    .enumerate()
                    .map(|(j, p)| finite3(p, &format!("frames[{i}][{j}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.fps, frames)
    }

    pub fn to_document(&self) -> String {
        let doc = KeypointDoc {
            version: 1,
            fps: self.fps,
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(vec3_array).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("keypoint documents always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        Self::from_document(&text).map_err(|e| e.within(&path.display().to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeypointDoc {
    version: u32,
    fps: f64,
    frames: Vec<Vec<[f64; 3]>>,
}

/// Target clip length and frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationPolicy {
    pub target_seconds: f64,
    pub target_fps: f64,
}

impl NormalizationPolicy {
    /// Identity capture streams: 18 s at 18 FPS.
    pub const IDENTITY: Self = Self {
        target_seconds: 18.0,
        target_fps: 18.0,
    };

    /// Reference action streams: 20 s at 25 FPS.
    pub const REFERENCE: Self = Self {
        target_seconds: 20.0,
        target_fps: 25.0,
    };

    pub fn new(target_seconds: f64, target_fps: f64) -> Result<Self> {
        let policy = Self {
            target_seconds,
            target_fps,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_seconds.is_finite() && self.target_seconds > 0.0) {
            return Err(Error::invalid("target_seconds", "must be positive"));
        }
        if !(self.target_fps.is_finite() && self.target_fps > 0.0) {
            return Err(Error::invalid("target_fps", "must be positive"));
        }
        if self.frame_count() < 2 {
            return Err(Error::invalid(
                "target_seconds",
                "target_seconds * target_fps must round to at least 2 frames",
            ));
        }
        Ok(())
    }

    /// `round(target_seconds * target_fps)`.
    pub fn frame_count(&self) -> usize {
        (self.target_seconds * self.target_fps).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_FRAMES: &str = r#"{"version":1,"fps":10,"skeleton_ref":"humanoid24","frames":[
        {"root_t":[0,0,0],"rots":[[1,0,0,0],[1,0,0,0],[1,0,0,0]]},
        {"root_t":[0,0,0],"rots":[[1,0,0,0],[1,0,0,0],[1,0,0,0]]}]}"#;

    #[test]
    fn loads_identity_document() {
        let seq = PoseSequence::from_document(TWO_FRAMES).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.joint_count(), 3);
        assert_eq!(seq.fps, 10.0);
    }

    #[test]
    fn wrong_joint_count_names_the_frame() {
        let doc = TWO_FRAMES.replacen("[[1,0,0,0],[1,0,0,0],[1,0,0,0]]}]", "[[1,0,0,0]]}]", 1);
        let err = PoseSequence::from_document(&doc).unwrap_err().to_string();
        assert!(err.contains("frame 1"), "{err}");
    }

    #[test]
    fn rejects_bad_quaternions_and_fps() {
        let doc = TWO_FRAMES.replacen("[1,0,0,0]", "[2,0,0,0]", 1);
        assert!(PoseSequence::from_document(&doc).unwrap_err().to_string().contains("frames[0].rots[0]"));
        let doc = TWO_FRAMES.replace("\"fps\":10", "\"fps\":0");
        assert!(PoseSequence::from_document(&doc).is_err());
        let doc = TWO_FRAMES.replace("\"fps\":10", "\"fps\":10,\"extra\":1");
        assert!(matches!(PoseSequence::from_document(&doc), Err(Error::Malformed(_))));
    }

    #[test]
    fn default_policies() {
        assert_eq!(NormalizationPolicy::IDENTITY.frame_count(), 324);
        assert_eq!(NormalizationPolicy::REFERENCE.frame_count(), 500);
        assert!(NormalizationPolicy::new(0.1, 10.0).is_err());
        assert!(NormalizationPolicy::new(0.2, 10.0).is_ok());
    }

    #[test]
    fn keypoint_document() {
        let doc = r#"{"version":1,"fps":30,"frames":[[[0,0,0],[0,1,0]],[[0,0,0],[0,1,0]]]}"#;
        let kp = KeypointSequence::from_document(doc).unwrap();
        assert_eq!(kp.joint_count(), 2);
        assert_eq!(KeypointSequence::from_document(&kp.to_document()).unwrap(), kp);
        let ragged = r#"{"version":1,"fps":30,"frames":[[[0,0,0],[0,1,0]],[[0,0,0]]]}"#;
        assert!(KeypointSequence::from_document(ragged).is_err());
    }
}
