//! Declarative dataset fetch: copy each source artifact, verify its SHA-256,
//! unpack it into a staging directory and atomically rename the staging
//! directory into place.
//!
//! Only `file://` URLs and plain filesystem paths are supported; remote
//! archives must be mirrored locally first.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{DatasetDescriptor, FetchSource, Unpack};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("dataset `{id}` declares no fetch sources; obtain it manually. {note}")]
    NoSources { id: String, note: String },
    #[error("unsupported URL scheme in `{0}`; mirror the archive locally and use a file:// URL")]
    UnsupportedScheme(String),
    #[error("checksum mismatch for `{url}`: expected {expected}, got {actual}")]
    ChecksumMismatch {
        url: String,
        expected: String,
        actual: String,
    },
    #[error("unpacking `{url}`: {message}")]
    Unpack { url: String, message: String },
    #[error("fetch I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Fetched { root: PathBuf, sources: usize },
    AlreadyPresent { root: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FetchError + '_ {
    move |source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn local_path(url: &str) -> Result<PathBuf, FetchError> {
    if let Some(rest) = url.strip_prefix("file://") {
        return Ok(PathBuf::from(rest));
    }
    if url.contains("://") {
        return Err(FetchError::UnsupportedScheme(url.to_string()));
    }
    Ok(PathBuf::from(url))
}

fn unpack_into(source: &FetchSource, bytes: Vec<u8>, staging: &Path) -> Result<(), FetchError> {
    let unpack_err = |message: String| FetchError::Unpack {
        url: source.url.clone(),
        message,
    };
    match source.unpack {
        Unpack::None => {
            let name = Path::new(&source.url)
                .file_name()
                .ok_or_else(|| unpack_err("URL has no file name".into()))?;
            let dest = staging.join(name);
            fs::write(&dest, bytes).map_err(io_err(&dest))
        }
        Unpack::Zip => {
            let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| unpack_err(e.to_string()))?;
            archive.extract(staging).map_err(|e| unpack_err(e.to_string()))
        }
        Unpack::Tar => {
            let mut archive = tar::Archive::new(Cursor::new(bytes));
            archive.unpack(staging).map_err(|e| unpack_err(e.to_string()))
        }
    }
}

/// Fetch a dataset into `<data_root>/<id>`.
///
/// Nothing becomes visible at the destination unless every source verifies
/// and unpacks. An existing destination is left alone unless `force` is set.
pub fn fetch_dataset(
    descriptor: &DatasetDescriptor,
    data_root: &Path,
    force: bool,
) -> Result<FetchOutcome, FetchError> {
    let root = data_root.join(&descriptor.id);
    if root.exists() && !force {
        return Ok(FetchOutcome::AlreadyPresent { root });
    }
    if descriptor.fetch.sources.is_empty() {
        return Err(FetchError::NoSources {
            id: descriptor.id.clone(),
            note: descriptor.fetch.license_note.clone(),
        });
    }
    fs::create_dir_all(data_root).map_err(io_err(data_root))?;
    let staging = tempfile::Builder::new()
        .prefix(&format!(".staging-{}-", descriptor.id))
        .tempdir_in(data_root)
        .map_err(io_err(data_root))?;

    for source in &descriptor.fetch.sources {
        let path = local_path(&source.url)?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let actual = sha256_hex(&bytes);
        if !actual.eq_ignore_ascii_case(&source.checksum) {
            return Err(FetchError::ChecksumMismatch {
                url: source.url.clone(),
                expected: source.checksum.clone(),
                actual,
            });
        }
        unpack_into(source, bytes, staging.path())?;
    }

    if root.exists() {
        fs::remove_dir_all(&root).map_err(io_err(&root))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, &root).map_err(io_err(&root))?;
    Ok(FetchOutcome::Fetched {
        root,
        sources: descriptor.fetch.sources.len(),
    })
}
