use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const LABEL_NORMAL: u8 = 0;
pub const LABEL_GLAUCOMA: u8 = 1;

/// How a dataset directory encodes labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestLayout {
    /// `root/glaucoma/*` and `root/normal/*`.
    ClassFolders,
    /// Flat image tree; a `_g_` marker in the file name means glaucoma.
    AcrimaFilename,
}

impl IngestLayout {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "class_folders" | "class-folders" => Ok(IngestLayout::ClassFolders),
            "acrima_filename" | "acrima-filename" => Ok(IngestLayout::AcrimaFilename),
            other => Err(Error::config(format!(
                "unknown layout '{other}'; expected class_folders or acrima_filename"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: u8,
}

/// Sorted list of (image path, binary label) pairs for one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub name: String,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (normal, glaucoma) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let glaucoma = self.entries.iter().filter(|e| e.label == LABEL_GLAUCOMA).count();
        (self.entries.len() - glaucoma, glaucoma)
    }

    /// Scans `root` for images, validates that every file decodes, and
    /// returns a path-sorted manifest. Unreadable images abort the run with a
    /// report listing every offender.
    pub fn ingest(root: &Path, layout: IngestLayout, name: &str) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::config(format!(
                "dataset root {} does not exist or is not a directory",
                root.display()
            )));
        }
        let mut entries = Vec::new();
        match layout {
            IngestLayout::ClassFolders => {
                for (class_dir, label) in [("normal", LABEL_NORMAL), ("glaucoma", LABEL_GLAUCOMA)] {
                    let dir = root.join(class_dir);
                    if !dir.is_dir() {
                        return Err(Error::config(format!(
                            "expected class folder {} under {}",
                            class_dir,
                            root.display()
                        )));
                    }
                    let files = image_files(&dir)?;
                    if files.is_empty() {
                        return Err(Error::config(format!(
                            "class folder {} contains no images",
                            dir.display()
                        )));
                    }
                    entries.extend(files.into_iter().map(|path| DatasetEntry { path, label }));
                }
            }
            IngestLayout::AcrimaFilename => {
                let mut files = Vec::new();
                collect_images_recursive(root, &mut files)?;
                if files.is_empty() {
                    return Err(Error::config(format!(
                        "no images found under {}",
                        root.display()
                    )));
                }
                for path in files {
                    let stem = path
                        .file_name()
                        .map(|n| n.to_string_lossy().to_string())
                        .unwrap_or_default();
                    let label = if stem.contains("_g_") {
                        LABEL_GLAUCOMA
                    } else {
                        LABEL_NORMAL
                    };
                    entries.push(DatasetEntry { path, label });
                }
            }
        }
        entries.sort_by(|a, b| a.path.cmp(&b.path));

        // every path must decode as an image; collect all failures at once
        let mut report = Vec::new();
        for entry in &entries {
            if let Err(e) = image::image_dimensions(&entry.path) {
                report.push(format!("{}: {e}", entry.path.display()));
            }
        }
        if !report.is_empty() {
            return Err(Error::Ingest {
                message: format!("{} unreadable image(s) under {}", report.len(), root.display()),
                report,
            });
        }

        let manifest = DatasetManifest {
            name: name.to_string(),
            entries,
        };
        let (normal, glaucoma) = manifest.class_counts();
        if normal == 0 || glaucoma == 0 {
            return Err(Error::config(format!(
                "dataset {} has an empty class (normal={normal}, glaucoma={glaucoma})",
                manifest.name
            )));
        }
        Ok(manifest)
    }

    /// Writes `path,label` rows with a header, UTF-8, LF line endings.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::from("path,label\n");
        for entry in &self.entries {
            text.push_str(&format!("{},{}\n", entry.path.display(), entry.label));
        }
        out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path, name: &str) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if lineno == 0 {
                if line.trim() != "path,label" {
                    return Err(Error::validation(format!(
                        "{}: expected header 'path,label', got '{line}'",
                        path.display()
                    )));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (p, l) = line.rsplit_once(',').ok_or_else(|| {
                Error::validation(format!("{} line {}: missing comma", path.display(), lineno + 1))
            })?;
            let label: u8 = l.trim().parse().map_err(|_| {
                Error::validation(format!("{} line {}: bad label '{l}'", path.display(), lineno + 1))
            })?;
            if label > 1 {
                return Err(Error::validation(format!(
                    "{} line {}: label must be 0 or 1",
                    path.display(),
                    lineno + 1
                )));
            }
            entries.push(DatasetEntry {
                path: PathBuf::from(p),
                label,
            });
        }
        Ok(DatasetManifest {
            name: name.to_string(),
            entries,
        })
    }
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("jpg") | Some("jpeg") | Some("png")
    )
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && is_image_file(&path) {
            out.push(path);
        }
    }
    Ok(out)
}

fn collect_images_recursive(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_images_recursive(&path, out)?;
        } else if is_image_file(&path) {
            out.push(path);
        }
    }
    Ok(())
}
