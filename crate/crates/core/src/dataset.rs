//! Raw image data, feature normalization, one-hot targets and pixel dropout.

use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::projection::SplitMix64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("{pixels} pixel bytes do not split into {labels} images of width {width}")]
    CountMismatch {
        pixels: usize,
        labels: usize,
        width: usize,
    },
    #[error("label {label} at index {index} is out of range for {classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("image width must be at least 1")]
    EmptyImages,
    #[error("noise fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
}

/// Unnormalized 8-bit images with their class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    pixels: Vec<u8>,
    width: usize,
    labels: Vec<usize>,
    classes: usize,
}

impl RawDataset {
    /// `pixels` holds `labels.len()` images of `width` bytes each, row-major.
    pub fn new(
        pixels: Vec<u8>,
        width: usize,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self, DatasetError> {
        if width == 0 {
            return Err(DatasetError::EmptyImages);
        }
        if labels.len().checked_mul(width) != Some(pixels.len()) {
            return Err(DatasetError::CountMismatch {
                pixels: pixels.len(),
                labels: labels.len(),
                width,
            });
        }
        check_labels(&labels, classes)?;
        Ok(Self {
            pixels,
            width,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pixels per image (M).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.pixels[i * self.width..(i + 1) * self.width]
    }

    /// The first `n` samples (all of them if `n` exceeds the count).
    pub fn head(&self, n: usize) -> RawDataset {
        let n = n.min(self.len());
        RawDataset {
            pixels: self.pixels[..n * self.width].to_vec(),
            width: self.width,
            labels: self.labels[..n].to_vec(),
            classes: self.classes,
        }
    }
}

fn check_labels(labels: &[usize], classes: usize) -> Result<(), DatasetError> {
    match labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        Some((index, &label)) => Err(DatasetError::LabelOutOfRange {
            index,
            label,
            classes,
        }),
        None => Ok(()),
    }
}

/// Normalized samples (one per row of `x`) with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    /// Rows that were constant images and were left as zero vectors.
    pub degenerate_rows: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Normalizes one image into `out`: square root of each intensity, then
/// subtract the row mean, then divide by the row's Euclidean norm.
///
/// A constant image has nothing left after centering; it becomes the zero
/// vector and `false` is returned.
pub fn normalize_row(image: &[u8], out: &mut [f64]) -> bool {
    debug_assert_eq!(image.len(), out.len());
    if image.iter().all(|&p| p == image[0]) {
        out.fill(0.0);
        return false;
    }
    for (o, &p) in out.iter_mut().zip(image) {
        *o = libm::sqrt(p as f64);
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    for o in out.iter_mut() {
        *o -= mean;
    }
    let norm = libm::sqrt(out.iter().map(|v| v * v).sum());
    for o in out.iter_mut() {
        *o /= norm;
    }
    true
}

pub fn normalize(raw: &RawDataset) -> Dataset {
    let mut x = Matrix::zeros(raw.len(), raw.width);
    let mut degenerate_rows = 0;
    for i in 0..raw.len() {
        if !normalize_row(raw.image(i), x.row_mut(i)) {
            degenerate_rows += 1;
        }
    }
    Dataset {
        x,
        labels: raw.labels.clone(),
        classes: raw.classes,
        degenerate_rows,
    }
}

/// An N×K matrix with a single 1 per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix(Matrix);

impl TargetMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

pub fn one_hot_encode(labels: &[usize], classes: usize) -> Result<TargetMatrix, DatasetError> {
    check_labels(labels, classes)?;
    let mut y = Matrix::zeros(labels.len(), classes);
    for (n, &label) in labels.iter().enumerate() {
        y[(n, label)] = 1.0;
    }
    Ok(TargetMatrix(y))
}

/// Sets exactly `round(fraction · M)` distinct, uniformly chosen pixels of
/// every image to zero. Operates on raw intensities; the same seed always
/// zeroes the same positions.
pub fn zero_pixel_noise(
    raw: &RawDataset,
    fraction: f64,
    seed: u64,
) -> Result<RawDataset, DatasetError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DatasetError::InvalidFraction(fraction));
    }
    let width = raw.width;
    let count = (libm::round(fraction * width as f64) as usize).min(width);
    let mut out = raw.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut rng = SplitMix64::new(seed);
    let mut positions: Vec<usize> = (0..width).collect();
    for image in out.pixels.chunks_exact_mut(width) {
        for (i, p) in positions.iter_mut().enumerate() {
            *p = i;
        }
        // partial Fisher-Yates: the first `count` slots form the sample
        for i in 0..count {
            let j = i + rng.next_below((width - i) as u64) as usize;
            positions.swap(i, j);
            image[positions[i]] = 0;
        }
    }
    Ok(out)
}
