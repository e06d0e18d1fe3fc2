use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::manifest::adapters::default_label_source;
use crate::manifest::{
    normalize_labels, validate_manifest, write_manifest, AdapterContext, ManifestError, OverrideTable,
    ValidationReport, MANIFEST_FILE_NAME,
};
use crate::registry::DatasetDescriptor;

/// Picked up automatically from the dataset root when present.
pub const OVERRIDES_FILE_NAME: &str = "label_overrides.csv";

#[derive(Debug, Error)]
pub enum PrepareError {
    #[error("dataset `{dataset_id}` is not present at {path}; fetch it first")]
    NotFetched { dataset_id: String, path: PathBuf },
    #[error("cannot read label source {path}: {source}")]
    LabelSource {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset `{dataset_id}`: {source}")]
    Manifest {
        dataset_id: String,
        #[source]
        source: ManifestError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub dataset_id: String,
    pub manifest_path: PathBuf,
    pub validation: ValidationReport,
}

/// Normalize one dataset's labels into `<data_root>/<id>/manifest.csv` and
/// validate the result. `overrides` takes precedence over a
/// `label_overrides.csv` in the dataset root.
pub fn prepare_dataset(
    desc: &DatasetDescriptor,
    data_root: &Path,
    overrides: Option<&OverrideTable>,
) -> Result<PreparedDataset, PrepareError> {
    let root = data_root.join(&desc.id);
    if !root.is_dir() {
        return Err(PrepareError::NotFetched {
            dataset_id: desc.id.clone(),
            path: root,
        });
    }
    let manifest_err = |source| PrepareError::Manifest {
        dataset_id: desc.id.clone(),
        source,
    };
    let raw = match desc
        .label_source
        .as_deref()
        .or_else(|| default_label_source(&desc.adapter_id))
    {
        Some(name) => {
            let path = root.join(name);
            std::fs::read(&path).map_err(|source| PrepareError::LabelSource { path, source })?
        }
        None => Vec::new(),
    };
    let local;
    let overrides = match overrides {
        Some(t) => Some(t),
        None => {
            let path = root.join(OVERRIDES_FILE_NAME);
            if path.is_file() {
                local = OverrideTable::from_path(&path).map_err(manifest_err)?;
                Some(&local)
            } else {
                None
            }
        }
    };
    let ctx = AdapterContext {
        dataset_id: &desc.id,
        dataset_root: &root,
        args: &desc.adapter_args,
    };
    let entries = normalize_labels(&raw, &desc.adapter_id, &ctx, overrides).map_err(manifest_err)?;
    let manifest_path = root.join(MANIFEST_FILE_NAME);
    write_manifest(&manifest_path, &entries).map_err(manifest_err)?;
    let validation = validate_manifest(&entries, &root);
    Ok(PreparedDataset {
        dataset_id: desc.id.clone(),
        manifest_path,
        validation,
    })
}
