//! Plain-text manifests and accuracy tables.
//!
//! A manifest lists one signature file per line:
//!
//! ```text
//! subject_id,template_id,path[,cell_label]
//! ```
//!
//! Lines are grouped by `template_id` (in first-appearance order) to build
//! templates; all lines of a template must agree on subject id and cell
//! label. Relative paths resolve against the manifest's directory.
//!
//! An accuracy table holds one `attribute_name,accuracy` row per line.
//! Blank lines are ignored in both formats; ids must not contain commas.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use facesig_core::{AttributeAccuracyTable, Gallery, Template};

use crate::error::{CliError, Result};
use crate::format::read_signature;

/// One manifest line.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub template_id: String,
    pub path: PathBuf,
    pub cell_label: Option<String>,
}

/// Parse manifest text. `base_dir` anchors relative signature paths.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(CliError::Format(format!(
                "manifest line {}: expected subject_id,template_id,path[,cell_label]",
                lineno + 1
            )));
        }
        let (subject_id, template_id, path) = (fields[0], fields[1], fields[2]);
        if subject_id.is_empty() || template_id.is_empty() || path.is_empty() {
            return Err(CliError::Format(format!(
                "manifest line {}: empty field",
                lineno + 1
            )));
        }
        let raw = PathBuf::from(path);
        let resolved = if raw.is_absolute() {
            raw
        } else {
            base_dir.join(raw)
        };
        entries.push(ManifestEntry {
            subject_id: subject_id.to_string(),
            template_id: template_id.to_string(),
            path: resolved,
            cell_label: fields.get(3).map(|s| s.to_string()),
        });
    }
    if entries.is_empty() {
        return Err(CliError::Format("manifest has no entries".to_string()));
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io_at(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Serialize entries back to manifest text. Paths are written as given.
pub fn render_manifest(entries: &[(String, String, String, Option<String>)]) -> String {
    let mut out = String::new();
    for (subject, template, path, cell) in entries {
        match cell {
            Some(c) => writeln!(out, "{subject},{template},{path},{c}").unwrap(),
            None => writeln!(out, "{subject},{template},{path}").unwrap(),
        }
    }
    out
}

/// Templates in manifest order, plus one cell label per template when any
/// entry carries one.
pub struct LoadedTemplates {
    pub templates: Vec<Template>,
    pub cells: Option<Vec<String>>,
}

/// Load every signature named by the manifest and group into templates.
pub fn load_templates(entries: &[ManifestEntry]) -> Result<LoadedTemplates> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for entry in entries {
        let group = groups.entry(&entry.template_id).or_default();
        if group.is_empty() {
            order.push(&entry.template_id);
        }
        group.push(entry);
    }

    let mut templates = Vec::with_capacity(order.len());
    let mut cells: Vec<Option<String>> = Vec::with_capacity(order.len());
    for template_id in order {
        let group = &groups[template_id];
        let subject = &group[0].subject_id;
        let cell = &group[0].cell_label;
        for entry in group {
            if &entry.subject_id != subject {
                return Err(CliError::Validation(format!(
                    "template '{template_id}' mixes subjects '{subject}' and '{}'",
                    entry.subject_id
                )));
            }
            if &entry.cell_label != cell {
                return Err(CliError::Validation(format!(
                    "template '{template_id}' has conflicting cell labels"
                )));
            }
        }
        let mut members = Vec::with_capacity(group.len());
        for entry in group {
            let signature = read_signature(&entry.path)?;
            if signature.subject_id != *subject {
                return Err(CliError::Validation(format!(
                    "{}: file subject '{}' does not match manifest subject '{subject}'",
                    entry.path.display(),
                    signature.subject_id
                )));
            }
            members.push(signature);
        }
        templates.push(Template::new(template_id, members).map_err(CliError::from)?);
        cells.push(cell.clone());
    }

    let cells = if cells.iter().any(|c| c.is_some()) {
        Some(
            cells
                .into_iter()
                .map(|c| c.unwrap_or_else(|| "unlabeled".to_string()))
                .collect(),
        )
    } else {
        None
    };
    Ok(LoadedTemplates { templates, cells })
}

/// Load a gallery: manifest -> templates -> gallery with distinct subjects.
pub fn load_gallery(path: &Path) -> Result<Gallery> {
    let entries = read_manifest(path)?;
    let loaded = load_templates(&entries)?;
    Gallery::new(loaded.templates).map_err(|e| CliError::Validation(e.to_string()))
}

/// Parse an accuracy table: one `attribute_name,accuracy` row per line.
pub fn parse_accuracy_table(text: &str) -> Result<AttributeAccuracyTable> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.rsplit_once(',').ok_or_else(|| {
            CliError::Format(format!(
                "accuracy table line {}: expected attribute_name,accuracy",
                lineno + 1
            ))
        })?;
        let accuracy: f64 = value.trim().parse().map_err(|_| {
            CliError::Format(format!(
                "accuracy table line {}: '{}' is not a number",
                lineno + 1,
                value.trim()
            ))
        })?;
        rows.push((name.trim().to_string(), accuracy));
    }
    AttributeAccuracyTable::new(rows).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn read_accuracy_table(path: &Path) -> Result<AttributeAccuracyTable> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io_at(path, e))?;
    parse_accuracy_table(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_and_resolves_paths() {
        let text = "s1,t1,sub/a.sig\n\ns1,t1,/abs/b.sig,cell-9\n";
        let entries = parse_manifest(text, Path::new("/root/data")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].path, Path::new("/root/data/sub/a.sig"));
        assert_eq!(entries[1].path, Path::new("/abs/b.sig"));
        assert_eq!(entries[1].cell_label.as_deref(), Some("cell-9"));
    }

    #[test]
    fn manifest_rejects_malformed_lines() {
        assert!(parse_manifest("just,two", Path::new(".")).is_err());
        assert!(parse_manifest(",t,p", Path::new(".")).is_err());
        assert!(parse_manifest("", Path::new(".")).is_err());
        assert!(parse_manifest("a,b,c,d,e", Path::new(".")).is_err());
    }

    #[test]
    fn accuracy_table_parses_names_with_punctuation() {
        let table = parse_accuracy_table("5 O'Clock Shadow,0.91\nYoung,0.82\n").unwrap();
        assert_eq!(table.get("5 O'Clock Shadow"), Some(0.91));
        assert_eq!(table.get("Young"), Some(0.82));
    }

    #[test]
    fn accuracy_table_rejects_bad_rows() {
        assert!(parse_accuracy_table("no-comma-here").is_err());
        assert!(parse_accuracy_table("a,not-a-number").is_err());
        assert!(parse_accuracy_table("a,1.5").is_err());
    }

    #[test]
    fn render_roundtrip() {
        let rows = vec![
            ("s1".to_string(), "t1".to_string(), "a.sig".to_string(), None),
            (
                "s2".to_string(),
                "t2".to_string(),
                "b.sig".to_string(),
                Some("yaw+30".to_string()),
            ),
        ];
        let text = render_manifest(&rows);
        let entries = parse_manifest(&text, Path::new(".")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].cell_label.as_deref(), Some("yaw+30"));
    }
}
