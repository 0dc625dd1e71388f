//! Datasets: text matrices, splits, per-dimension standardization,
//! binarization and 8x8 image patches.

mod dataset;
mod io;
mod patches;
mod pgm;
mod split;
mod standardize;

pub use dataset::{binarize, DataKind, Dataset};
pub use io::{format_matrix, load_matrix, parse_matrix, save_matrix, write_atomic};
pub use patches::{prepare_patches, PatchSampling};
pub use pgm::{parse_pgm, read_pgm, write_pgm, GrayImage};
pub use split::split;
pub use standardize::{apply_stats, destandardize, standardize, Stats};
