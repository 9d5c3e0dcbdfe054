use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use regex::Regex;

use crate::error::{Error, Result};

/// `<finger>_<impression>.<ext>` for the supported raster extensions.
pub const DEFAULT_PATTERN: &str = r"(?i)^(\d+)_(\d+)\.(bmp|png|pgm|tif|tiff)$";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Impression {
    pub id: u32,
    pub path: PathBuf,
}

/// Impressions grouped by finger, each group sorted by impression id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceDatabase {
    pub fingers: BTreeMap<u32, Vec<Impression>>,
}

impl SourceDatabase {
    pub fn image_count(&self) -> usize {
        self.fingers.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub database: SourceDatabase,
    /// Files whose names do not follow the pattern, or that duplicate an
    /// already-seen `(finger, impression)` pair.
    pub skipped: Vec<PathBuf>,
}

/// Groups the files in `dir` by finger. `pattern` must capture the finger id
/// and the impression id, in that order.
pub fn scan_database(dir: &Path, pattern: &Regex) -> Result<ScanResult> {
    // absolute paths keep manifests replayable from any working directory
    let dir = &std::fs::canonicalize(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|entry| entry.path())
        .collect();
    names.sort();

    let mut fingers: BTreeMap<u32, Vec<Impression>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for path in names {
        let Some(ids) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| parse_ids(n, pattern))
        else {
            warn!("skipping {}: name does not match the database pattern", path.display());
            skipped.push(path);
            continue;
        };
        let group = fingers.entry(ids.0).or_default();
        if group.iter().any(|imp| imp.id == ids.1) {
            warn!("skipping {}: duplicate impression {}_{}", path.display(), ids.0, ids.1);
            skipped.push(path);
            continue;
        }
        group.push(Impression { id: ids.1, path });
    }
    if fingers.is_empty() {
        return Err(Error::EmptyDatabase(dir.to_path_buf()));
    }
    for group in fingers.values_mut() {
        group.sort_by_key(|imp| imp.id);
    }
    Ok(ScanResult {
        database: SourceDatabase { fingers },
        skipped,
    })
}

fn parse_ids(name: &str, pattern: &Regex) -> Option<(u32, u32)> {
    let caps = pattern.captures(name)?;
    let finger = caps.get(1)?.as_str().parse().ok()?;
    let impression = caps.get(2)?.as_str().parse().ok()?;
    Some((finger, impression))
}

pub fn default_pattern() -> Regex {
    Regex::new(DEFAULT_PATTERN).expect("static pattern")
}

/// The impression every other one is aligned against: the lowest id.
pub fn select_reference(group: &[Impression]) -> Option<&Impression> {
    group.iter().min_by_key(|imp| imp.id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        std::fs::write(dir.join(name), b"").unwrap();
    }

    #[test]
    fn groups_fvc_style_names() {
        let dir = tempfile::tempdir().unwrap();
        for i in (1..=8).rev() {
            touch(dir.path(), &format!("110_{i}.tif"));
        }
        let scan = scan_database(dir.path(), &default_pattern()).unwrap();
        let db = scan.database;
        assert_eq!(db.fingers.len(), 1);
        let ids: Vec<u32> = db.fingers[&110].iter().map(|i| i.id).collect();
        assert_eq!(ids, (1..=8).collect::<Vec<_>>());
        assert!(scan.skipped.is_empty());
    }

    #[test]
    fn malformed_names_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "1_1.bmp");
        touch(dir.path(), "2_3.PNG");
        touch(dir.path(), "notes.txt");
        touch(dir.path(), "1-2.bmp");
        std::fs::create_dir(dir.path().join("3_1.bmp")).unwrap();
        let scan = scan_database(dir.path(), &default_pattern()).unwrap();
        assert_eq!(scan.database.image_count(), 2);
        assert_eq!(scan.skipped.len(), 2);
    }

    #[test]
    fn duplicate_impressions_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "4_1.bmp");
        touch(dir.path(), "4_1.tif");
        let scan = scan_database(dir.path(), &default_pattern()).unwrap();
        assert_eq!(scan.database.image_count(), 1);
        assert_eq!(scan.skipped.len(), 1);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            scan_database(dir.path(), &default_pattern()),
            Err(Error::EmptyDatabase(_))
        ));
    }

    #[test]
    fn reference_is_lowest_id() {
        let group: Vec<Impression> = [3, 1, 7]
            .into_iter()
            .map(|id| Impression {
                id,
                path: PathBuf::from(format!("9_{id}.bmp")),
            })
            .collect();
        assert_eq!(select_reference(&group).unwrap().id, 1);
        assert_eq!(select_reference(&group[..1]).unwrap().id, 3);
        assert!(select_reference(&[]).is_none());
    }
}
