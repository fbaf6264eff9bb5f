use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::math::{quat_from_wxyz, quat_to_wxyz, vec3, vec3_array, Quat, Rigid, Vec3};

/// Pinhole camera. `orientation` maps camera axes to world axes; the camera
/// looks along its `+z` with `+x` right and `+y` down in the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub orientation: Quat,
    /// Focal length, pixels.
    pub focal: f64,
    /// Principal point, pixels.
    pub principal: [f64; 2],
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(position: Vec3, orientation: Quat, focal: f64, principal: [f64; 2], width: u32, height: u32) -> Result<Self> {
        let cam = Self {
            position,
            orientation,
            focal,
            principal,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(Error::invalid("camera.focal", "focal length must be positive"));
        }
        if self.width < 1 || self.height < 1 {
            return Err(Error::invalid("camera.width", "image size must be at least 1x1"));
        }
        if !self.principal.iter().chain(self.position.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("camera", "non-finite position or principal point"));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, principal point at the image centre.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, focal: f64, width: u32, height: u32) -> Self {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[right, down, forward]));
        Self {
            position: eye,
            orientation: UnitQuaternion::from_rotation_matrix(&rot),
            focal,
            principal: [width as f64 / 2.0, height as f64 / 2.0],
            width,
            height,
        }
    }

    /// Rigid transform from world to camera coordinates.
    pub fn world_to_camera(&self) -> Rigid {
        let cam_to_world = Rigid::from_parts(self.position.into(), self.orientation);
        cam_to_world.inverse()
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(p - self.position))
    }

    /// Pixel coordinates of a camera-space point with positive depth.
    pub fn project(&self, p_cam: &Vec3) -> [f64; 2] {
        [
            self.focal * p_cam.x / p_cam.z + self.principal[0],
            self.focal * p_cam.y / p_cam.z + self.principal[1],
        ]
    }

    /// The same camera after a world-space rigid motion `g`.
    pub fn transformed(&self, g: &Rigid) -> Self {
        Self {
            position: g.transform_point(&Point3::from(self.position)).coords,
            orientation: g.rotation * self.orientation,
            ..self.clone()
        }
    }

    /// Resizes the image, scaling focal length and principal point with the width.
    pub fn with_resolution(&self, width: u32, height: u32) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            focal: self.focal * sx.min(sy),
            principal: [self.principal[0] * sx, self.principal[1] * sy],
            width,
            height,
            ..self.clone()
        }
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: CameraDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        doc.try_into()
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(&CameraDoc::from(self.clone())).expect("cameras always serialize")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        Self::from_document(&text).map_err(|e| e.within(&path.display().to_string()))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        error::write_string(path, &self.to_document())
    }
}

/// Serialized camera: `{"position", "orientation":[w,x,y,z], "focal", "principal", "width", "height"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDoc {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
    pub focal: f64,
    pub principal: [f64; 2],
    pub width: u32,
    pub height: u32,
}

impl TryFrom<CameraDoc> for Camera {
    type Error = Error;

    fn try_from(doc: CameraDoc) -> Result<Self> {
        Camera::new(
            vec3(doc.position),
            quat_from_wxyz(doc.orientation, "camera.orientation")?,
            doc.focal,
            doc.principal,
            doc.width,
            doc.height,
        )
    }
}

impl From<Camera> for CameraDoc {
    fn from(cam: Camera) -> Self {
        Self {
            position: vec3_array(&cam.position),
            orientation: quat_to_wxyz(&cam.orientation),
            focal: cam.focal,
            principal: cam.principal,
            width: cam.width,
            height: cam.height,
        }
    }
}

impl Serialize for Camera {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CameraDoc::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Camera {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = CameraDoc::deserialize(deserializer)?;
        Camera::try_from(doc).map_err(serde::de::Error::custom)
    }
}
