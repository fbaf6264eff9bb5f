use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use reenact_core::dataset::{Manifest, ManifestEntry};

use crate::error::{EvalError, Result};
use crate::features::{extract_features_from_dir, FeatureVector};

#[derive(Debug, Clone, PartialEq)]
pub struct PooledVideo {
    pub entry: ManifestEntry,
    pub frames_dir: PathBuf,
}

/// Composited videos gathered from one or more manifests, sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoPool {
    videos: Vec<PooledVideo>,
}

impl VideoPool {
    pub fn new(mut videos: Vec<PooledVideo>) -> Result<Self> {
        videos.sort_by(|a, b| a.entry.video_id.cmp(&b.entry.video_id));
        if let Some(dup) = videos.windows(2).find(|w| w[0].entry.video_id == w[1].entry.video_id) {
            return Err(EvalError::InvalidArgument(format!("video `{}` appears twice in one pool", dup[0].entry.video_id)));
        }
        Ok(Self { videos })
    }

    pub fn from_manifests(paths: &[PathBuf]) -> Result<Self> {
        let mut videos = Vec::new();
        for path in paths {
            let manifest = Manifest::read(path)?;
            videos.extend(manifest.composited().map(|e| PooledVideo {
                frames_dir: Manifest::frames_path(path, e),
                entry: e.clone(),
            }));
        }
        Self::new(videos)
    }

    pub fn from_manifest(path: &Path) -> Result<Self> {
        Self::from_manifests(&[path.to_path_buf()])
    }

    pub fn videos(&self) -> &[PooledVideo] {
        &self.videos
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }
}

/// Features of every video in a set of pools, keyed by video id.
#[derive(Debug, Clone, Default)]
pub struct FeatureStore {
    features: HashMap<String, FeatureVector>,
}

impl FeatureStore {
    pub fn extract(pools: &[&VideoPool]) -> Result<Self> {
        let mut seen = HashSet::new();
        let todo: Vec<&PooledVideo> = pools
            .iter()
            .flat_map(|p| p.videos())
            .filter(|v| seen.insert(v.entry.video_id.clone()))
            .collect();
        let features = todo
            .par_iter()
            .map(|v| Ok((v.entry.video_id.clone(), extract_features_from_dir(&v.frames_dir)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { features })
    }

    pub fn insert(&mut self, video_id: impl Into<String>, features: FeatureVector) {
        self.features.insert(video_id.into(), features);
    }

    pub fn get(&self, video_id: &str) -> Result<&FeatureVector> {
        self.features
            .get(video_id)
            .ok_or_else(|| EvalError::InvalidArgument(format!("no features for video `{video_id}`")))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}
