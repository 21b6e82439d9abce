//! Calendar-year classification and regression datasets.

mod build;
mod container;
mod split;

pub use build::{
    build_classification, build_regression, fit_normalization, normalize_examples, pad_and_mask,
    DatasetOptions, Mode, SequenceExample,
};
pub use container::{read_dataset, write_dataset, DatasetManifest, StoredDataset};
pub use split::{split_by_year, TRAIN_FRACTION};
