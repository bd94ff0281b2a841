//! Dataset ingestion, stratified cross-validation splits, preprocessing and
//! training-time augmentation.

mod augment;
mod folds;
mod manifest;
mod preprocess;
mod synthetic;

pub use augment::{augment, augment_rng, horizontal_flip, AugmentConfig};
pub use folds::{read_fold_file, stratified_kfold, write_fold_file, FoldSplit};
pub use manifest::{
    DatasetEntry, DatasetManifest, IngestLayout, LABEL_GLAUCOMA, LABEL_NORMAL,
};
pub use preprocess::{
    load_unit_image, normalize, preprocess, preprocess_file, resize_bilinear, resized_unit_file,
    NormalizationMode, PreprocessConfig, TARGET_HEIGHT, TARGET_WIDTH,
};
pub use synthetic::generate_disc_dataset;
