//! Dataset manifests: chronologically ordered frames split into train/test.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::site::SiteParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidValue(alloc::format!("unknown split tag `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame: String,
    pub labels: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub split: Split,
    /// Frame acquired just before `frame`, used for the velocity field.
    pub previous: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub site: SiteParams,
}

impl DatasetManifest {
    /// Validates ordering invariants: non-empty, chronological, and every
    /// training entry dated before every test entry.
    pub fn new(entries: Vec<ManifestEntry>, site: SiteParams) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("no entries"));
        }
        for pair in entries.windows(2) {
            if pair[1].timestamp < pair[0].timestamp {
                return Err(Error::InvalidValue(alloc::format!(
                    "entries not chronological: `{}` precedes `{}`",
                    pair[0].frame,
                    pair[1].frame
                )));
            }
            if pair[0].split == Split::Test && pair[1].split == Split::Train {
                return Err(Error::InvalidValue(alloc::format!(
                    "chronology violated: test entry `{}` dated before train entry `{}`",
                    pair[0].frame,
                    pair[1].frame
                )));
            }
        }
        site.validate()?;
        Ok(Self { entries, site })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Pixel totals `(train, test)` for frames of the given size.
    pub fn pixel_counts(&self, width: usize, height: usize) -> (usize, usize) {
        let px = width * height;
        (self.count(Split::Train) * px, self.count(Split::Test) * px)
    }
}
