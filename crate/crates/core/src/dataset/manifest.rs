use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VideoKind {
    White,
    Composited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub video_id: String,
    pub kind: VideoKind,
    pub class_label: String,
    pub reference_id: String,
    pub identity_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_id: Option<String>,
    /// Relative to the directory holding the manifest.
    pub frames_dir: String,
    pub fps: f64,
    pub num_frames: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobError {
    pub video_id: String,
    pub error: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Entry(ManifestEntry),
    Error(JobError),
}

/// JSON-lines index of a generated dataset, sorted by `video_id`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub errors: Vec<JobError>,
}

impl Manifest {
    pub fn new(mut entries: Vec<ManifestEntry>, mut errors: Vec<JobError>) -> Result<Self> {
        entries.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        errors.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        let mut seen = HashSet::new();
        for id in entries.iter().map(|e| &e.video_id).chain(errors.iter().map(|e| &e.video_id)) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid("video_id", format!("duplicate video id `{id}`")));
            }
        }
        for e in &entries {
            let has_bg = e.background_id.is_some();
            if has_bg != (e.kind == VideoKind::Composited) {
                return Err(Error::invalid(
                    e.video_id.clone(),
                    "background_id must be present exactly for composited videos",
                ));
            }
        }
        Ok(Self { entries, errors })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut errors = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(line) {
                Ok(Line::Entry(e)) => entries.push(e),
                Ok(Line::Error(e)) => errors.push(e),
                Err(e) => return Err(Error::invalid(format!("line {}", n + 1), e.to_string())),
            }
        }
        Self::new(entries, errors)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&error::read_to_string(path)?).map_err(|e| e.within(&path.display().to_string()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries always serialize"));
            out.push('\n');
        }
        for e in &self.errors {
            out.push_str(&serde_json::to_string(e).expect("manifest errors always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        error::write_string(path, &self.to_jsonl())
    }

    /// Absolute frame directory of `entry` for a manifest stored at `manifest_path`.
    pub fn frames_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        manifest_path.parent().unwrap_or(Path::new(".")).join(&entry.frames_dir)
    }

    pub fn composited(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.kind == VideoKind::Composited)
    }

    pub fn white(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.kind == VideoKind::White)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, bg: Option<&str>) -> ManifestEntry {
        ManifestEntry {
            video_id: id.into(),
            kind: if bg.is_some() { VideoKind::Composited } else { VideoKind::White },
            class_label: "wave".into(),
            reference_id: "wave/a".into(),
            identity_id: "alice".into(),
            background_id: bg.map(Into::into),
            frames_dir: id.into(),
            fps: 25.0,
            num_frames: 500,
            seed: 3,
        }
    }

    #[test]
    fn round_trip_sorted() {
        let m = Manifest::new(
            vec![entry("s00001_00000", None), entry("s00000_00000_000", Some("beach")), entry("s00000_00000", None)],
            vec![JobError { video_id: "s00002_00000".into(), error: "boom".into() }],
        )
        .unwrap();
        assert_eq!(m.entries[0].video_id, "s00000_00000");
        let text = m.to_jsonl();
        assert_eq!(Manifest::parse(&text).unwrap(), m);
        assert_eq!(m.composited().count(), 1);
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(Manifest::new(vec![entry("a", None), entry("a", None)], vec![]).is_err());
    }

    #[test]
    fn bad_line_is_located() {
        let text = format!("{}\n{{\"video_id\":3}}\n", serde_json::to_string(&entry("a", None)).unwrap());
        let err = Manifest::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn background_must_match_kind() {
        let mut e = entry("a", None);
        e.kind = VideoKind::Composited;
        assert!(Manifest::new(vec![e], vec![]).is_err());
    }
}
