use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::Unit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::mix_seed;
use crate::compositor::PlacementPolicy;
use crate::error::{self, Error, Result};
use crate::math::{Quat, Vec3};
use crate::pose::NormalizationPolicy;
use crate::render::Camera;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEntry {
    pub id: String,
    pub class_label: String,
    pub pose: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityEntry {
    pub id: String,
    pub avatar: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundEntry {
    pub id: String,
    pub path: PathBuf,
}

impl BackgroundEntry {
    /// Every `*.png` in `dir`, id = file stem, sorted by id.
    pub fn scan_dir(dir: &Path) -> Result<Vec<Self>> {
        let read = std::fs::read_dir(dir).map_err(|source| Error::Read {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut out: Vec<Self> = read
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .filter_map(|p| {
                let id = p.file_stem()?.to_string_lossy().into_owned();
                Some(Self { id, path: p })
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}

/// Seeded per-video perturbation of the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJitter {
    /// Focal length is scaled by `1 + u`, `u` uniform in `[-focal_frac, focal_frac]`.
    pub focal_frac: f64,
    /// Orientation is perturbed by up to this many degrees about a random axis.
    pub rotation_deg: f64,
}

const JITTER_STREAM: u64 = 0x6a09_e667_f3bc_c908;

/// Everything needed to generate one dataset. Reference, identity and
/// background lists are kept sorted by id; job indices refer to those orders.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub classes: Vec<String>,
    pub references: Vec<ReferenceEntry>,
    pub identities: Vec<IdentityEntry>,
    pub backgrounds: Vec<BackgroundEntry>,
    pub g: usize,
    pub seed: u64,
    pub normalization: NormalizationPolicy,
    pub camera: Camera,
    pub camera_jitter: Option<CameraJitter>,
    pub placement: PlacementPolicy,
    pub output_root: PathBuf,
    pub video_prefix: String,
}

fn default_prefix() -> String {
    "s".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    version: u32,
    seed: u64,
    g: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<String>>,
    references: Vec<ReferenceEntry>,
    identities: Vec<IdentityEntry>,
    backgrounds: Vec<BackgroundEntry>,
    normalization: NormalizationPolicy,
    camera: Camera,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    camera_jitter: Option<CameraJitter>,
    #[serde(default)]
    placement: PlacementPolicy,
    output_root: PathBuf,
    #[serde(default = "default_prefix")]
    video_prefix: String,
}

impl DatasetSpec {
    /// Sorts and validates the inputs. `classes` defaults to the sorted set of
    /// reference labels.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        classes: Option<Vec<String>>,
        mut references: Vec<ReferenceEntry>,
        mut identities: Vec<IdentityEntry>,
        mut backgrounds: Vec<BackgroundEntry>,
        g: usize,
        seed: u64,
        normalization: NormalizationPolicy,
        camera: Camera,
        output_root: PathBuf,
    ) -> Result<Self> {
        references.sort_by(|a, b| a.id.cmp(&b.id));
        identities.sort_by(|a, b| a.id.cmp(&b.id));
        backgrounds.sort_by(|a, b| a.id.cmp(&b.id));
        let classes = classes.unwrap_or_else(|| {
            references
                .iter()
                .map(|r| r.class_label.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        });
        let spec = Self {
            classes,
            references,
            identities,
            backgrounds,
            g,
            seed,
            normalization,
            camera,
            camera_jitter: None,
            placement: PlacementPolicy::default(),
            output_root,
            video_prefix: default_prefix(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        unique("references", self.references.iter().map(|r| r.id.as_str()))?;
        unique("identities", self.identities.iter().map(|r| r.id.as_str()))?;
        unique("backgrounds", self.backgrounds.iter().map(|r| r.id.as_str()))?;
        unique("classes", self.classes.iter().map(String::as_str))?;
        for (k, r) in self.references.iter().enumerate() {
            if !self.classes.contains(&r.class_label) {
                return Err(Error::invalid(
                    format!("references[{k}].class_label"),
                    format!("class `{}` is not in the class list", r.class_label),
                ));
            }
        }
        if !self.references.is_empty() {
            for class in &self.classes {
                if !self.references.iter().any(|r| &r.class_label == class) {
                    return Err(Error::invalid("classes", format!("class `{class}` has no reference")));
                }
            }
        }
        if self.g > self.backgrounds.len() {
            return Err(Error::invalid(
                "g",
                format!("g = {} exceeds the background pool of {}", self.g, self.backgrounds.len()),
            ));
        }
        self.normalization.validate()?;
        self.camera.validate()?;
        self.placement.validate()?;
        if let Some(j) = &self.camera_jitter {
            if !(j.focal_frac >= 0.0 && j.focal_frac < 1.0 && j.rotation_deg >= 0.0) {
                return Err(Error::invalid("camera_jitter", "focal_frac must be in [0, 1), rotation_deg >= 0"));
            }
        }
        Ok(())
    }

    pub fn n_references(&self) -> usize {
        self.references.len()
    }

    pub fn n_identities(&self) -> usize {
        self.identities.len()
    }

    /// Camera for job `(i, j)`: the base camera, jittered when configured.
    pub fn camera_for(&self, reference: usize, identity: usize) -> Camera {
        let Some(jitter) = self.camera_jitter else {
            return self.camera.clone();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed ^ JITTER_STREAM, reference, identity));
        let focal_scale = 1.0 + rng.gen_range(-1.0..=1.0) * jitter.focal_frac;
        let axis = loop {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break Unit::new_normalize(v);
            }
        };
        let angle = rng.gen_range(-1.0..=1.0) * jitter.rotation_deg.to_radians();
        let mut cam = self.camera.clone();
        cam.focal *= focal_scale;
        cam.orientation *= Quat::from_axis_angle(&axis, angle);
        cam
    }

    pub fn from_document(text: &str, base_dir: &Path) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        if doc.version != 1 {
            return Err(Error::invalid("version", format!("unsupported version {}", doc.version)));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let mut spec = Self::new(
            doc.classes,
            doc.references
                .into_iter()
                .map(|r| ReferenceEntry { pose: resolve(r.pose), ..r })
                .collect(),
            doc.identities
                .into_iter()
                .map(|r| IdentityEntry { avatar: resolve(r.avatar), ..r })
                .collect(),
            doc.backgrounds
                .into_iter()
                .map(|r| BackgroundEntry { path: resolve(r.path), ..r })
                .collect(),
            doc.g,
            doc.seed,
            doc.normalization,
            doc.camera,
            resolve(doc.output_root),
        )?;
        spec.camera_jitter = doc.camera_jitter;
        spec.placement = doc.placement;
        spec.video_prefix = doc.video_prefix;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_document(&text, base).map_err(|e| e.within(&path.display().to_string()))
    }

    pub fn to_document(&self) -> String {
        let doc = SpecDoc {
            version: 1,
            seed: self.seed,
            g: self.g,
            classes: Some(self.classes.clone()),
            references: self.references.clone(),
            identities: self.identities.clone(),
            backgrounds: self.backgrounds.clone(),
            normalization: self.normalization,
            camera: self.camera.clone(),
            camera_jitter: self.camera_jitter,
            placement: self.placement,
            output_root: self.output_root.clone(),
            video_prefix: self.video_prefix.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("dataset specs always serialize")
    }
}

fn unique<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invalid(what, format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}
