//! Dataset type classification and media-type detection.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::table::{delimiter_for, extension, member_files, read_delimited};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetType {
    Structured,
    SemiStructured,
    Unstructured,
}

impl DatasetType {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetType::Structured => "structured",
            DatasetType::SemiStructured => "semi-structured",
            DatasetType::Unstructured => "unstructured",
        }
    }
}

impl fmt::Display for DatasetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" => Ok(DatasetType::Structured),
            "semi-structured" => Ok(DatasetType::SemiStructured),
            "unstructured" => Ok(DatasetType::Unstructured),
            other => Err(Error::Validation(format!("unknown dataset type `{other}`"))),
        }
    }
}

/// How a single file's content parses, independent of the directory it
/// lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FileShape {
    Delimited,
    ObjectTree,
    Markup,
    Opaque,
}

pub(crate) fn file_shape(path: &Path, bytes: &[u8]) -> FileShape {
    if infer::get(bytes).is_some_and(|kind| kind.matcher_type() != infer::MatcherType::Text) {
        return FileShape::Opaque;
    }
    let Ok(text) = std::str::from_utf8(bytes) else {
        return FileShape::Opaque;
    };
    let trimmed = text.trim_start();
    if (trimmed.starts_with('{') || trimmed.starts_with('['))
        && serde_json::from_str::<serde_json::Value>(text).is_ok_and(|v| v.is_object() || v.is_array())
    {
        return FileShape::ObjectTree;
    }
    if trimmed.starts_with('<') && roxmltree::Document::parse(text).is_ok() {
        return FileShape::Markup;
    }
    if trimmed.is_empty() {
        return FileShape::Opaque;
    }
    let tabular_ext = matches!(extension(path).as_str(), "csv" | "tsv" | "tab");
    match read_delimited("probe", text, delimiter_for(path, text)) {
        Ok(table) if tabular_ext || table.columns.len() >= 2 => FileShape::Delimited,
        // a declared table that does not parse is a malformed table; profiling reports it
        Err(_) if tabular_ext => FileShape::Delimited,
        _ => FileShape::Opaque,
    }
}

/// Classifies a raw file or directory. A delimited table is structured, an
/// object tree or markup document is semi-structured, anything else is
/// unstructured. A directory is structured when every member is a table,
/// semi-structured when every member is a table or tree, else unstructured.
pub fn detect_dataset_type(path: &Path) -> Result<DatasetType> {
    let meta = fs::metadata(path)?;
    if meta.is_dir() {
        let files = member_files(path)?;
        if files.is_empty() {
            return Ok(DatasetType::Unstructured);
        }
        let mut shapes = Vec::with_capacity(files.len());
        for file in &files {
            shapes.push(file_shape(file, &fs::read(file)?));
        }
        return Ok(if shapes.iter().all(|s| *s == FileShape::Delimited) {
            DatasetType::Structured
        } else if shapes.iter().all(|s| *s != FileShape::Opaque) {
            DatasetType::SemiStructured
        } else {
            DatasetType::Unstructured
        });
    }
    Ok(match file_shape(path, &fs::read(path)?) {
        FileShape::Delimited => DatasetType::Structured,
        FileShape::ObjectTree | FileShape::Markup => DatasetType::SemiStructured,
        FileShape::Opaque => DatasetType::Unstructured,
    })
}

/// Media type from magic bytes, falling back to the file extension. A
/// directory reports its members' type when they all agree.
pub fn get_dataset_format(path: &Path) -> Result<String> {
    if fs::metadata(path)?.is_dir() {
        let mut formats = Vec::new();
        for file in member_files(path)? {
            formats.push(file_format(&file)?);
        }
        formats.dedup();
        return Ok(match formats.as_slice() {
            [] => "inode/directory".to_string(),
            [only] => only.clone(),
            _ => "multipart/mixed".to_string(),
        });
    }
    file_format(path)
}

fn file_format(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    if let Some(kind) = infer::get(&bytes) {
        return Ok(kind.mime_type().to_string());
    }
    Ok(mime_guess::from_path(path).first_or_octet_stream().essence_str().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const JPEG: &[u8] = &[0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, b'J', b'F', b'I', b'F', 0x00];
    const PNG: &[u8] = &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A, 0, 0, 0, 0x0D];

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn classifies_files() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(detect_dataset_type(&write(d, "data.csv", b"a,b\n1,2\n")).unwrap(), DatasetType::Structured);
        assert_eq!(detect_dataset_type(&write(d, "data.txt", b"a\tb\n1\t2\n")).unwrap(), DatasetType::Structured);
        assert_eq!(
            detect_dataset_type(&write(d, "records.json", br#"[{"a":1},{"a":2}]"#)).unwrap(),
            DatasetType::SemiStructured
        );
        assert_eq!(
            detect_dataset_type(&write(d, "doc.xml", b"<r><x a='1'/></r>")).unwrap(),
            DatasetType::SemiStructured
        );
        assert_eq!(detect_dataset_type(&write(d, "scan.jpg", JPEG)).unwrap(), DatasetType::Unstructured);
        assert_eq!(
            detect_dataset_type(&write(d, "notes.txt", b"just some prose here\n")).unwrap(),
            DatasetType::Unstructured
        );
        // a declared table stays structured so profiling can report it as malformed
        assert_eq!(detect_dataset_type(&write(d, "ragged.csv", b"a,b\n1\n")).unwrap(), DatasetType::Structured);
        assert_eq!(detect_dataset_type(&write(d, "ragged.txt", b"a,b\n1\n")).unwrap(), DatasetType::Unstructured);
        assert!(detect_dataset_type(&d.join("missing.csv")).is_err());
    }

    #[test]
    fn classifies_directories() {
        let dir = tempfile::tempdir().unwrap();
        let tables = dir.path().join("tables");
        fs::create_dir(&tables).unwrap();
        write(&tables, "a.csv", b"x,y\n1,2\n");
        write(&tables, "b.csv", b"z\n3\n");
        assert_eq!(detect_dataset_type(&tables).unwrap(), DatasetType::Structured);
        write(&tables, "c.json", br#"{"k":[{"v":1}]}"#);
        assert_eq!(detect_dataset_type(&tables).unwrap(), DatasetType::SemiStructured);
        write(&tables, "d.jpg", JPEG);
        assert_eq!(detect_dataset_type(&tables).unwrap(), DatasetType::Unstructured);
    }

    #[test]
    fn formats_from_magic_then_extension() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(get_dataset_format(&write(d, "scan.dat", JPEG)).unwrap(), "image/jpeg");
        assert_eq!(get_dataset_format(&write(d, "img.bin", PNG)).unwrap(), "image/png");
        assert_eq!(get_dataset_format(&write(d, "blob.bin", &[1, 2, 3, 4])).unwrap(), "application/octet-stream");
        assert_eq!(get_dataset_format(&write(d, "t.csv", b"a,b\n")).unwrap(), "text/csv");

        let imgs = d.join("imgs");
        fs::create_dir(&imgs).unwrap();
        write(&imgs, "1.jpeg", JPEG);
        write(&imgs, "2.jpeg", JPEG);
        assert_eq!(get_dataset_format(&imgs).unwrap(), "image/jpeg");
        write(&imgs, "3.png", PNG);
        assert_eq!(get_dataset_format(&imgs).unwrap(), "multipart/mixed");
    }
}
