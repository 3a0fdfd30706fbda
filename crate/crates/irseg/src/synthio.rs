//! Writes synthetic scenes as an on-disk dataset.

use std::path::{Path, PathBuf};

use irseg_core::dataset::ManifestEntry;
use irseg_core::synth::{SceneConfig, SyntheticScene};
use irseg_core::SiteParams;
use serde::{Deserialize, Serialize};

use crate::atomic::write_json;
use crate::error::Result;
use crate::manifest::write_manifest;
use crate::pgm::{write_frame, write_mask};
use crate::SCHEMA_VERSION;

pub const MANIFEST: &str = "manifest.csv";
pub const CLEAR_SKY_DIR: &str = "clear_sky";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub schema_version: u32,
    pub site: SiteParams,
    pub scene: SceneConfig,
}

/// Layout: `frames/`, `previous/`, `masks/`, `clear_sky/`, `manifest.csv`
/// and `scene.json`. Returns the manifest path.
pub fn write_scene(dir: &Path, scene: &SyntheticScene, cfg: &SceneConfig, site: &SiteParams) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(scene.frames.len());
    for (i, f) in scene.frames.iter().enumerate() {
        let name = format!("frame_{i:03}.pgm");
        let frame = format!("frames/{name}");
        let previous = format!("previous/{name}");
        let labels = format!("masks/{name}");
        write_frame(&dir.join(&frame), &f.frame)?;
        write_frame(&dir.join(&previous), &f.previous)?;
        write_mask(&dir.join(&labels), &f.mask)?;
        entries.push(ManifestEntry {
            frame,
            labels,
            timestamp: f.timestamp,
            split: f.split,
            previous: Some(previous),
        });
    }
    for (i, f) in scene.clear_sky.iter().enumerate() {
        write_frame(&dir.join(CLEAR_SKY_DIR).join(format!("clear_{i:03}.pgm")), f)?;
    }
    let manifest = dir.join(MANIFEST);
    write_manifest(&manifest, &entries)?;
    write_json(
        &dir.join("scene.json"),
        &SceneRecord {
            schema_version: SCHEMA_VERSION,
            site: *site,
            scene: cfg.clone(),
        },
    )?;
    Ok(manifest)
}
