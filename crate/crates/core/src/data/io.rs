//! Dataset storage.
//!
//! A saved dataset is a directory holding one sub-directory per class with
//! one point-cloud file per item, plus a manifest:
//!
//! ```text
//! classes sphere cube cylinder
//! split train
//! sphere/00000.pts 0
//! cube/00000.pts 1
//! ```
//!
//! Paths are relative to the manifest. Blank lines and lines starting with
//! `#` are ignored. A directory without a manifest is read as a
//! directory-per-class tree, labels assigned in alphabetical order of the
//! class directories.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::geometry::{read_cloud, write_cloud, PointCloud};

pub const MANIFEST_FILE: &str = "manifest.txt";
const CLOUD_EXT: &str = "pts";

pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    dataset.validate()?;
    for name in &dataset.class_names {
        if name.is_empty() || name.contains(char::is_whitespace) || name.contains(['/', '\\']) {
            return Err(Error::InvalidInput(format!("class name `{name}` cannot be used as a directory")));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("classes {}\nsplit {}\n", dataset.class_names.join(" "), dataset.split);
    let mut counters = vec![0usize; dataset.classes()];
    for cloud in &dataset.items {
        let class = &dataset.class_names[cloud.label];
        let class_dir = dir.join(class);
        if counters[cloud.label] == 0 {
            fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        }
        let rel = format!("{class}/{:05}.{CLOUD_EXT}", counters[cloud.label]);
        counters[cloud.label] += 1;
        write_cloud(&dir.join(&rel), cloud)?;
        manifest.push_str(&format!("{rel} {}\n", cloud.label));
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a manifest file, a directory containing one, or a bare
/// directory-per-class tree.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.is_file() {
        return parse_manifest(path);
    }
    let manifest = path.join(MANIFEST_FILE);
    if manifest.is_file() {
        return parse_manifest(&manifest);
    }
    load_class_tree(path)
}

pub fn parse_manifest(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut class_names: Option<Vec<String>> = None;
    let mut split = Split::Source;
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().unwrap_or_default();
        match head {
            "classes" => class_names = Some(fields.map(str::to_owned).collect()),
            "split" => {
                let tag = fields.next().unwrap_or_default();
                split = tag.parse().map_err(|_| Error::parse(path, no, format!("unknown split `{tag}`")))?;
            }
            rel => {
                let label_tok = fields
                    .next()
                    .ok_or_else(|| Error::parse(path, no, "expected `<path> <label>`"))?;
                let label: usize = label_tok
                    .parse()
                    .map_err(|_| Error::parse(path, no, format!("bad label `{label_tok}`")))?;
                if fields.next().is_some() {
                    return Err(Error::parse(path, no, "expected `<path> <label>`"));
                }
                let cloud = read_cloud(&base.join(rel))?;
                if cloud.label != label {
                    return Err(Error::parse(
                        path,
                        no,
                        format!("{rel} is labelled {} but the manifest says {label}", cloud.label),
                    ));
                }
                items.push(cloud);
            }
        }
    }
    let class_names = match class_names {
        Some(names) => names,
        None => {
            // Without a `classes` line, name classes by index.
            let classes = items.iter().map(|c| c.label + 1).max().unwrap_or(0);
            (0..classes).map(|c| format!("class{c}")).collect()
        }
    };
    Dataset::new(items, class_names, split)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn load_class_tree(root: &Path) -> Result<Dataset> {
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    let mut class_names = Vec::new();
    let mut items = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        class_names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        for file in sorted_entries(dir)? {
            if file.extension().and_then(|e| e.to_str()) != Some(CLOUD_EXT) {
                continue;
            }
            let cloud = read_cloud(&file)?;
            items.push(PointCloud::new(cloud.points, label));
        }
    }
    Dataset::new(items, class_names, Split::Source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, ShapeFamily};

    #[test]
    fn save_then_load_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = generate_synthetic_dataset(&ShapeFamily::defaults(), 3, 64, 4).unwrap();
        ds.split = Split::Val;
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(&manifest).unwrap(), ds);
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn class_tree_labels_are_alphabetical() {
        let dir = tempfile::tempdir().unwrap();
        for (name, label_in_file) in [("zebra", 7), ("apple", 0), ("mango", 3)] {
            let d = dir.path().join(name);
            fs::create_dir_all(&d).unwrap();
            let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], label_in_file);
            write_cloud(&d.join("a.pts"), &cloud).unwrap();
            write_cloud(&d.join("b.pts"), &cloud).unwrap();
        }
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.class_names, vec!["apple", "mango", "zebra"]);
        assert_eq!(ds.items.iter().map(|c| c.label).collect::<Vec<_>>(), vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn header_mismatch_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("a");
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("x.pts"), "3 0\n0 0 0\n1 1 1\n").unwrap();
        fs::create_dir_all(dir.path().join("b")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{msg}");
        assert!(msg.contains("x.pts"));
    }

    #[test]
    fn manifest_label_mismatch_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        write_cloud(&dir.path().join("c.pts"), &PointCloud::new(vec![[0.0; 3]], 1)).unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "classes a b\nc.pts 0\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Parse { line: 2, .. })));
    }
}
