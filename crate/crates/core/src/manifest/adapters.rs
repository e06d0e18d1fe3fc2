//! Label-source adapters. Each turns one native label format into manifest
//! entries.
//!
//! | adapter              | raw source                                   |
//! |----------------------|----------------------------------------------|
//! | `asvspoof_protocol`  | space-delimited protocol lines               |
//! | `csv_labeled`        | delimited file with a header naming columns  |
//! | `dirtree`            | none; label comes from a parent directory    |
//! | `listing_real_only`  | one relative path per line, all bonafide     |
//! | `listing_fake_only`  | one relative path per line, all spoof        |

use std::collections::BTreeMap;
use std::path::Path;

use super::{check_relative_path, Label, ManifestEntry, ManifestError, OverrideTable};

pub const ADAPTER_IDS: &[&str] = &[
    "asvspoof_protocol",
    "csv_labeled",
    "dirtree",
    "listing_real_only",
    "listing_fake_only",
];

const AUDIO_EXTENSIONS: &[&str] = &["wav", "flac"];

pub fn is_registered_adapter(id: &str) -> bool {
    ADAPTER_IDS.contains(&id)
}

/// File name of the label source an adapter reads when the descriptor does
/// not name one. `None` for adapters that read the directory tree.
pub fn default_label_source(adapter_id: &str) -> Option<&'static str> {
    match adapter_id {
        "asvspoof_protocol" => Some("protocol.txt"),
        "csv_labeled" => Some("labels.csv"),
        "listing_real_only" | "listing_fake_only" => Some("files.txt"),
        _ => None,
    }
}

/// Where an adapter is running: which dataset, where its files live, and
/// the descriptor's adapter arguments.
#[derive(Debug, Clone, Copy)]
pub struct AdapterContext<'a> {
    pub dataset_id: &'a str,
    pub dataset_root: &'a Path,
    pub args: &'a BTreeMap<String, String>,
}

impl AdapterContext<'_> {
    fn arg<'s>(&'s self, key: &str, default: &'s str) -> &'s str {
        self.args.get(key).map(String::as_str).unwrap_or(default)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> ManifestError {
    ManifestError::AdapterParse {
        line,
        message: message.into(),
    }
}

fn strip_extension(path: &str) -> &str {
    match path.rfind('.') {
        Some(dot) if !path[dot..].contains('/') => &path[..dot],
        _ => path,
    }
}

fn join_dir(dir: &str, rest: &str) -> String {
    let dir = dir.trim_end_matches('/');
    if dir.is_empty() || dir == "." {
        rest.to_string()
    } else {
        format!("{dir}/{rest}")
    }
}

fn as_text(raw: &[u8]) -> Result<&str, ManifestError> {
    std::str::from_utf8(raw).map_err(|e| {
        let line = raw[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        parse_err(line, "label source is not valid UTF-8")
    })
}

/// Run an adapter over a raw label source, then apply label overrides.
pub fn normalize_labels(
    raw_source: &[u8],
    adapter_id: &str,
    ctx: &AdapterContext<'_>,
    overrides: Option<&OverrideTable>,
) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut entries = match adapter_id {
        "asvspoof_protocol" => asvspoof_protocol(as_text(raw_source)?, ctx)?,
        "csv_labeled" => csv_labeled(raw_source, ctx)?,
        "dirtree" => dirtree(ctx)?,
        "listing_real_only" => listing(as_text(raw_source)?, ctx, Label::Bonafide)?,
        "listing_fake_only" => listing(as_text(raw_source)?, ctx, Label::Spoof)?,
        other => return Err(ManifestError::UnknownAdapter(other.to_string())),
    };
    for e in &entries {
        e.check()?;
    }
    if let Some(table) = overrides {
        table.apply(&mut entries)?;
    }
    Ok(entries)
}

/// `SPEAKER ENTRY_ID ... ATTACK LABEL ...`: the label is the first
/// `bonafide`/`spoof` token after the entry id, and the token right before it
/// is the attack id (`-` for none). Covers the 5-column LA layout as well as
/// the longer DF/ASVspoof5 layouts.
fn asvspoof_protocol(text: &str, ctx: &AdapterContext<'_>) -> Result<Vec<ManifestEntry>, ManifestError> {
    let audio_dir = ctx.arg("audio_dir", "flac");
    let ext = ctx.arg("extension", "flac");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() || tokens[0].starts_with('#') {
            continue;
        }
        if tokens.len() < 3 {
            return Err(parse_err(
                lineno,
                format!("expected at least 3 fields, got {}", tokens.len()),
            ));
        }
        let (pos, label) = tokens
            .iter()
            .enumerate()
            .skip(2)
            .find_map(|(j, t)| match *t {
                "bonafide" => Some((j, Label::Bonafide)),
                "spoof" => Some((j, Label::Spoof)),
                _ => None,
            })
            .ok_or_else(|| parse_err(lineno, "no `bonafide`/`spoof` label field"))?;
        let entry_id = tokens[1];
        let attack = tokens[pos - 1];
        let subgroup = (pos >= 3 && attack != "-").then(|| attack.to_string());
        let path = join_dir(audio_dir, &format!("{entry_id}.{ext}"));
        check_relative_path(&path).map_err(|m| parse_err(lineno, m))?;
        out.push(ManifestEntry::new(entry_id, ctx.dataset_id, path, label).with_subgroup(subgroup));
    }
    Ok(out)
}

const PATH_COLUMNS: &[&str] = &["relative_path", "path", "file", "filename", "file_name", "audio", "wav"];
const LABEL_COLUMNS: &[&str] = &["label", "class", "target", "key"];
const ID_COLUMNS: &[&str] = &["entry_id", "id", "utt", "utt_id", "utterance"];
const SUBGROUP_COLUMNS: &[&str] = &["subgroup", "attack", "system", "method", "generator", "language"];
const DURATION_COLUMNS: &[&str] = &["duration_seconds", "duration"];

/// Delimited file whose header declares the columns. Column names are
/// matched case-insensitively against common spellings; the
/// `path_column`/`label_column` arguments pin them explicitly.
fn csv_labeled(raw: &[u8], ctx: &AdapterContext<'_>) -> Result<Vec<ManifestEntry>, ManifestError> {
    let delimiter = match ctx.arg("delimiter", ",") {
        "tab" | "\\t" => b'\t',
        d if d.len() == 1 => d.as_bytes()[0],
        d => return Err(parse_err(0, format!("delimiter `{d}` must be a single byte"))),
    };
    let audio_dir = ctx.arg("audio_dir", "");
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let find = |pinned: Option<&String>, names: &[&str]| -> Option<usize> {
        match pinned {
            Some(p) => headers.iter().position(|h| h.eq_ignore_ascii_case(p)),
            None => names.iter().find_map(|n| headers.iter().position(|h| h == n)),
        }
    };
    let path_col =
        find(ctx.args.get("path_column"), PATH_COLUMNS).ok_or_else(|| parse_err(1, "header has no path column"))?;
    let label_col =
        find(ctx.args.get("label_column"), LABEL_COLUMNS).ok_or_else(|| parse_err(1, "header has no label column"))?;
    let id_col = find(ctx.args.get("id_column"), ID_COLUMNS);
    let sub_col = find(ctx.args.get("subgroup_column"), SUBGROUP_COLUMNS);
    let dur_col = find(None, DURATION_COLUMNS);

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let lineno = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |c: usize| record.get(c).unwrap_or("");
        let file = get(path_col);
        let label = Label::from_alias(get(label_col))
            .ok_or_else(|| parse_err(lineno, format!("unrecognized label `{}`", get(label_col))))?;
        let path = join_dir(audio_dir, file);
        check_relative_path(&path).map_err(|m| parse_err(lineno, m))?;
        let entry_id = match id_col.map(get).filter(|s| !s.is_empty()) {
            Some(id) => id.to_string(),
            None => strip_extension(file).to_string(),
        };
        let duration_seconds = match dur_col.map(get).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|e| parse_err(lineno, format!("duration `{s}`: {e}")))?,
            ),
            None => None,
        };
        out.push(ManifestEntry {
            duration_seconds,
            ..ManifestEntry::new(entry_id, ctx.dataset_id, path, label)
                .with_subgroup(sub_col.map(|c| get(c).to_string()))
        });
    }
    Ok(out)
}

/// Label from the nearest ancestor directory whose name is a label word
/// (`real/`, `fake/`, `bonafide/`, ...). A directory between the label
/// directory and the file becomes the subgroup. Files under no label
/// directory are ignored.
fn dirtree(ctx: &AdapterContext<'_>) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut out = Vec::new();
    let walker = walkdir::WalkDir::new(ctx.dataset_root)
        .follow_links(true)
        .sort_by_file_name();
    for item in walker {
        let item = item.map_err(|e| ManifestError::Io {
            path: ctx.dataset_root.to_path_buf(),
            source: e.into(),
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let is_audio = item
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| AUDIO_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false);
        if !is_audio {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(ctx.dataset_root)
            .expect("walkdir yields paths under its root");
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let dirs = &parts[..parts.len() - 1];
        let Some((label_at, label)) = dirs
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, d)| Label::from_alias(d).map(|l| (i, l)))
        else {
            continue;
        };
        let subgroup = dirs.get(label_at + 1).cloned();
        let rel_path = parts.join("/");
        out.push(
            ManifestEntry::new(strip_extension(&rel_path), ctx.dataset_id, rel_path.clone(), label)
                .with_subgroup(subgroup),
        );
    }
    Ok(out)
}

fn listing(text: &str, ctx: &AdapterContext<'_>, label: Label) -> Result<Vec<ManifestEntry>, ManifestError> {
    let audio_dir = ctx.arg("audio_dir", "");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let path = join_dir(audio_dir, line);
        check_relative_path(&path).map_err(|m| parse_err(i + 1, m))?;
        out.push(ManifestEntry::new(strip_extension(line), ctx.dataset_id, path, label));
    }
    Ok(out)
}
