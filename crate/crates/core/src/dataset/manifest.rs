//! JSON-Lines item manifest.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Split, TimeVector};
use crate::mesh::{parse_obj, parse_stl, TriangleMesh};

/// One manifest record. `mesh` is relative to the manifest's directory.
/// Items with times are reference items; the rest only have geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub mesh: String,
    pub times: Option<TimeVector>,
    pub split: Split,
}

impl ManifestItem {
    pub fn is_reference(&self) -> bool {
        self.times.is_some()
    }

    /// Loads the item's mesh; `dir` is the directory holding the manifest.
    pub fn load_mesh(&self, dir: &Path) -> Result<TriangleMesh, DatasetError> {
        read_mesh_file(&dir.join(&self.mesh), &self.id).map_err(|e| e.for_item(&self.id))
    }
}

/// Reads an OBJ or STL file, chosen by extension (`.stl` is STL, anything
/// else is parsed as OBJ).
pub fn read_mesh_file(path: &Path, id: &str) -> Result<TriangleMesh, DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let is_stl = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("stl"));
    Ok(if is_stl { parse_stl(&bytes, id)? } else { parse_obj(&bytes, id)? })
}

pub fn write_manifest(items: &[ManifestItem], path: &Path) -> Result<(), DatasetError> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("manifest records serialise");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    f.write_all(&out).map_err(|e| DatasetError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestItem>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| DatasetError::Manifest { line: i + 1, message: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_null_times() {
        let items = vec![
            ManifestItem {
                id: "a".into(),
                mesh: "meshes/a.obj".into(),
                times: Some(TimeVector::new(vec![300.0, 60.0, 0.0, 0.0, 0.0, 0.1]).unwrap()),
                split: Split::Train,
            },
            ManifestItem { id: "b".into(), mesh: "meshes/b.obj".into(), times: None, split: Split::Test },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        write_manifest(&items, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        for l in &lines {
            serde_json::from_str::<serde_json::Value>(l).unwrap();
        }
        assert!(lines[1].contains("\"times\":null"));
        assert!(lines[0].contains("\"split\":\"train\""));
        assert_eq!(read_manifest(&path).unwrap(), items);
        assert!(!items[1].is_reference());
    }

    #[test]
    fn bad_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        fs::write(&path, "{\"id\":\"a\",\"mesh\":\"x\",\"times\":null,\"split\":\"train\"}\nnot json\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(DatasetError::Manifest { line: 2, .. })));
    }
}
