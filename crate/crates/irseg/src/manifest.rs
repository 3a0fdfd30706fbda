//! CSV dataset manifests.
//!
//! Header `frame,labels,timestamp,split` with an optional trailing
//! `previous` column naming the frame acquired just before `frame`.
//! Timestamps are RFC 3339; paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use irseg_core::dataset::{DatasetManifest, ManifestEntry, Split};
use irseg_core::SiteParams;

use crate::atomic::write_atomic;
use crate::data::{Dataset, LabeledFrame};
use crate::error::{Error, Result};
use crate::pgm;

const COLUMNS: [&str; 4] = ["frame", "labels", "timestamp", "split"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    /// Directory the entry paths are relative to.
    pub base: PathBuf,
}

impl LoadedManifest {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }
}

fn manifest_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.into(),
        line,
        reason: reason.into(),
    }
}

pub fn parse_timestamp(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s.trim()).ok().map(|t| t.timestamp())
}

pub fn format_timestamp(t: i64) -> String {
    DateTime::<Utc>::from_timestamp(t, 0)
        .map(|d| d.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.to_string())
}

/// Parses manifest text; `path` labels errors and anchors relative paths.
pub fn parse_manifest(text: &str, path: &Path, site: SiteParams) -> Result<LoadedManifest> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| manifest_err(path, 1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let with_previous = match cols.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == COLUMNS => false,
        [a, b, c, d, "previous"] if [*a, *b, *c, *d] == COLUMNS => true,
        _ => {
            return Err(manifest_err(
                path,
                1,
                format!("header must be `{}[,previous]`", COLUMNS.join(",")),
            ))
        }
    };
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| manifest_err(path, line, e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let timestamp = parse_timestamp(field(2))
            .ok_or_else(|| manifest_err(path, line, format!("bad RFC 3339 timestamp `{}`", field(2))))?;
        let split = Split::parse(field(3)).map_err(|e| manifest_err(path, line, e.to_string()))?;
        let previous = if with_previous && !field(4).is_empty() {
            Some(field(4).to_string())
        } else {
            None
        };
        for rel in [field(0), field(1)] {
            if rel.is_empty() {
                return Err(manifest_err(path, line, "empty path"));
            }
        }
        entries.push(ManifestEntry {
            frame: field(0).to_string(),
            labels: field(1).to_string(),
            timestamp,
            split,
            previous,
        });
    }
    let manifest = DatasetManifest::new(entries, site)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedManifest { manifest, base })
}

/// Loads a manifest and checks that every referenced file exists.
pub fn load_manifest(path: &Path, site: SiteParams) -> Result<LoadedManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let loaded = parse_manifest(&text, path, site)?;
    for e in &loaded.manifest.entries {
        let refs = [Some(&e.frame), Some(&e.labels), e.previous.as_ref()];
        for rel in refs.into_iter().flatten() {
            let p = loaded.resolve(rel);
            if !p.is_file() {
                return Err(Error::MissingFile(p));
            }
        }
    }
    Ok(loaded)
}

pub fn manifest_text(entries: &[ManifestEntry]) -> Result<String> {
    let with_previous = entries.iter().any(|e| e.previous.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = COLUMNS.to_vec();
    if with_previous {
        header.push("previous");
    }
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(&header).map_err(io)?;
    for e in entries {
        let mut rec = vec![
            e.frame.clone(),
            e.labels.clone(),
            format_timestamp(e.timestamp),
            e.split.as_str().to_string(),
        ];
        if with_previous {
            rec.push(e.previous.clone().unwrap_or_default());
        }
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    write_atomic(path, manifest_text(entries)?.as_bytes())
}

/// Sorted `*.pgm` files of a directory.
pub fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "pgm") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads every frame and mask of a manifest, plus the clear-sky set if given.
pub fn load_dataset(path: &Path, site: SiteParams, clear_sky_dir: Option<&Path>) -> Result<Dataset> {
    let loaded = load_manifest(path, site)?;
    let mut frames = Vec::with_capacity(loaded.manifest.entries.len());
    for e in &loaded.manifest.entries {
        let frame = pgm::load_frame(&loaded.resolve(&e.frame))?;
        let mask = pgm::load_mask(&loaded.resolve(&e.labels))?;
        frame.ensure_same_shape(&mask)?;
        let previous = match &e.previous {
            Some(p) => {
                let prev = pgm::load_frame(&loaded.resolve(p))?;
                frame.ensure_same_shape(&prev)?;
                Some(prev)
            }
            None => None,
        };
        let name = Path::new(&e.frame)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| e.frame.clone());
        frames.push(LabeledFrame {
            name,
            frame,
            previous,
            mask: Some(mask),
            timestamp: e.timestamp,
            split: e.split,
        });
    }
    let clear_sky = match clear_sky_dir {
        Some(dir) => pgm_files(dir)?
            .iter()
            .map(|p| pgm::load_frame(p))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    Ok(Dataset {
        site,
        frames,
        clear_sky,
    })
}
