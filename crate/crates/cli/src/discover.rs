use std::path::Path;

use anyhow::Result;
use reenact_core::dataset::{BackgroundEntry, IdentityEntry, ReferenceEntry};

use crate::InputError;

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let read = std::fs::read_dir(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<_> = read.flatten().map(|e| e.path()).collect();
    out.sort();
    Ok(out)
}

fn is_json(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|x| x == "json")
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `poses/<class>/<name>.json`, id `class/name`.
pub fn references(dir: &Path) -> Result<Vec<ReferenceEntry>> {
    let mut out = Vec::new();
    for class_dir in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let class = stem(&class_dir);
        for file in sorted_entries(&class_dir)?.into_iter().filter(|p| is_json(p)) {
            out.push(ReferenceEntry {
                id: format!("{class}/{}", stem(&file)),
                class_label: class.clone(),
                pose: file,
            });
        }
    }
    Ok(out)
}

/// `avatars/<id>.json`.
pub fn identities(dir: &Path) -> Result<Vec<IdentityEntry>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| is_json(p))
        .map(|p| IdentityEntry { id: stem(&p), avatar: p })
        .collect())
}

pub fn backgrounds(dir: &Path) -> Result<Vec<BackgroundEntry>> {
    Ok(BackgroundEntry::scan_dir(dir)?)
}
