//! Locating and pairing the MNIST-style train/test files on disk.

use std::fmt;
use std::path::{Path, PathBuf};

use elmboost_core::dataset::{DatasetError, RawDataset};

use crate::idx::{self, IdxError};

/// Class count of both supported datasets.
pub const CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    Fmnist,
}

impl DatasetKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Fmnist => "fmnist",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error("{images} and {labels} do not pair up: {source}")]
    Pairing {
        images: PathBuf,
        labels: PathBuf,
        #[source]
        source: DatasetError,
    },
}

/// Where `<prefix>-<stem>-ubyte` lives under `root`. Tries, in order,
/// `root/<dataset>/<file>`, the same with `.gz`, then `root/<file>` and
/// `root/<file>.gz`. When none exist the first candidate is returned so the
/// eventual error names a sensible path.
pub fn locate(root: &Path, kind: DatasetKind, split: Split, stem: &str) -> PathBuf {
    let file = format!("{}-{}-ubyte", split.prefix(), stem);
    let candidates = [
        root.join(kind.dir_name()).join(&file),
        root.join(kind.dir_name()).join(format!("{file}.gz")),
        root.join(&file),
        root.join(format!("{file}.gz")),
    ];
    candidates
        .iter()
        .find(|p| p.is_file())
        .unwrap_or(&candidates[0])
        .clone()
}

/// Loads an image file and a label file and checks that they agree.
pub fn load_pair(images_path: &Path, labels_path: &Path, classes: usize) -> Result<RawDataset, DataError> {
    let images = idx::load_idx_images(images_path)?;
    let labels = idx::load_idx_labels(labels_path)?;
    let width = images.width();
    RawDataset::new(
        images.pixels,
        width,
        labels.into_iter().map(usize::from).collect(),
        classes,
    )
    .map_err(|source| DataError::Pairing {
        images: images_path.to_path_buf(),
        labels: labels_path.to_path_buf(),
        source,
    })
}

pub fn load_split(root: &Path, kind: DatasetKind, split: Split) -> Result<RawDataset, DataError> {
    load_pair(
        &locate(root, kind, split, "images-idx3"),
        &locate(root, kind, split, "labels-idx1"),
        CLASSES,
    )
}
