//! Targets, categorical encoders, dimensionality reduction and splits.

pub mod encoders;
pub mod matrix;
pub mod pipeline;
pub mod split;
pub mod svd;
pub mod target;

pub use encoders::{
    default_feature_columns, fit_label, fit_label_encoder, fit_one_hot, fnv1a64, hash_bucket, hashing_encode,
    label_transform, one_hot_transform, EncoderKind, EncoderModel, FeatureColumn, Vocabulary,
};
pub use matrix::{CsrMatrix, EncodedMatrix, FeatureName, MatrixData};
pub use pipeline::{build_dataset, labels_for, Dataset, DatasetConfig, EncoderChoice, FeaturePipeline};
pub use split::{largest_remainder, part_indices, stratified_split};
pub use svd::{truncated_svd, truncated_svd_with, SvdModel, SvdOptions};
pub use target::{
    days_to_months, duration_days, target_binary, target_multiclass, PendencyClass2, PendencyClass5, TargetKind,
};
