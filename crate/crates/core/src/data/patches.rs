use ndarray::Array2;

use super::dataset::{DataKind, Dataset};
use super::pgm::GrayImage;
use crate::error::DataError;
use crate::numerics::Rng;

/// Where patches are taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSampling {
    /// Every top-left corner on a grid with this step, image by image.
    Grid { stride: usize },
    /// `count` patches: image uniform, then corner uniform within it.
    Random { count: usize, seed: u64 },
}

/// Square `patch x patch` patches with the patch mean subtracted from every
/// pixel and the bottom-right pixel dropped, giving `patch^2 - 1` columns.
pub fn prepare_patches(images: &[GrayImage], patch: usize, sampling: PatchSampling) -> Result<Dataset, DataError> {
    if patch < 2 {
        return Err(DataError::Split(format!("patch size {patch} is too small")));
    }
    if images.is_empty() {
        return Err(DataError::Empty);
    }
    for (index, img) in images.iter().enumerate() {
        if img.width < patch || img.height < patch {
            return Err(DataError::ImageTooSmall {
                index,
                width: img.width,
                height: img.height,
                patch,
            });
        }
    }
    let corners: Vec<(usize, usize, usize)> = match sampling {
        PatchSampling::Grid { stride } => {
            let stride = stride.max(1);
            images
                .iter()
                .enumerate()
                .flat_map(|(k, img)| {
                    (0..=img.height - patch)
                        .step_by(stride)
                        .flat_map(move |r| (0..=img.width - patch).step_by(stride).map(move |c| (k, r, c)))
                })
                .collect()
        }
        PatchSampling::Random { count, seed } => {
            let mut rng = Rng::new(seed);
            (0..count)
                .map(|_| {
                    let k = rng.below(images.len());
                    let img = &images[k];
                    let r = rng.below(img.height - patch + 1);
                    let c = rng.below(img.width - patch + 1);
                    (k, r, c)
                })
                .collect()
        }
    };
    if corners.is_empty() {
        return Err(DataError::Empty);
    }
    let dim = patch * patch - 1;
    let mut out = Array2::zeros((corners.len(), dim));
    let mut buf = vec![0.0; patch * patch];
    for (row, &(k, r, c)) in corners.iter().enumerate() {
        let img = &images[k];
        for i in 0..patch {
            for j in 0..patch {
                buf[i * patch + j] = img.at(r + i, c + j);
            }
        }
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        for (dst, &v) in out.row_mut(row).iter_mut().zip(&buf[..dim]) {
            *dst = v - mean;
        }
    }
    let how = match sampling {
        PatchSampling::Grid { stride } => format!("grid stride {stride}"),
        PatchSampling::Random { count, seed } => format!("{count} random, seed {seed}"),
    };
    Dataset::new(out, DataKind::Real, format!("{patch}x{patch} patches from {} images, {how}", images.len()))
}
