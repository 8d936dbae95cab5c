//! MNIST ingestion: IDX parsing, binarization and the ten-digit block sequence.
//!
//! The IDX files are not shipped; fetch them yourself (see the README).

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::patterns::{PatternSet, StateVector};
use crate::rng::substream;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const DEFAULT_THRESHOLD: u8 = 128;
pub const DEFAULT_BLOCKS: usize = 1000;
pub const N_DIGITS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub n_images: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, image after image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, k: usize) -> &[u8] {
        let d = self.pixels_per_image();
        &self.pixels[k * d..(k + 1) * d]
    }
}

/// Contents of an IDX file of either kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdxData {
    Images(IdxImages),
    Labels(Vec<u8>),
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], offset: usize) -> Result<()> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => return Err(Error::Truncated { expected: offset + buf.len(), found: offset + got }),
            k => got += k,
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, offset: usize) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b, offset)?;
    Ok(u32::from_be_bytes(b))
}

/// Parses an IDX stream, dispatching on the magic number.
pub fn read_idx<R: Read>(mut r: R) -> Result<IdxData> {
    let magic = read_u32(&mut r, 0)?;
    match magic {
        IMAGE_MAGIC => {
            let n = read_u32(&mut r, 4)? as usize;
            let rows = read_u32(&mut r, 8)? as usize;
            let cols = read_u32(&mut r, 12)? as usize;
            if rows == 0 || cols == 0 {
                return Err(Error::Format(format!("degenerate image size {rows}x{cols}")));
            }
            let mut pixels = vec![0u8; n * rows * cols];
            read_exact_or_truncated(&mut r, &mut pixels, 16)?;
            Ok(IdxData::Images(IdxImages { n_images: n, rows, cols, pixels }))
        }
        LABEL_MAGIC => {
            let n = read_u32(&mut r, 4)? as usize;
            let mut labels = vec![0u8; n];
            read_exact_or_truncated(&mut r, &mut labels, 8)?;
            if let Some(&bad) = labels.iter().find(|&&l| l as usize >= N_DIGITS) {
                return Err(Error::Format(format!("label {bad} is not a digit")));
            }
            Ok(IdxData::Labels(labels))
        }
        other => Err(Error::Format(format!("bad IDX magic number {other}"))),
    }
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxData> {
    read_idx(BufReader::new(File::open(path)?))
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    match load_idx(path)? {
        IdxData::Images(im) => Ok(im),
        IdxData::Labels(_) => Err(Error::Format(format!("expected magic {IMAGE_MAGIC}, found {LABEL_MAGIC}"))),
    }
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    match load_idx(path)? {
        IdxData::Labels(l) => Ok(l),
        IdxData::Images(_) => Err(Error::Format(format!("expected magic {LABEL_MAGIC}, found {IMAGE_MAGIC}"))),
    }
}

/// Pixel `>= threshold` becomes +1, anything darker -1.
pub fn binarize_image(pixels: &[u8], threshold: u8) -> StateVector {
    let bipolar: Vec<i8> = pixels.iter().map(|&p| if p >= threshold { 1 } else { -1 }).collect();
    StateVector::from_bipolar(&bipolar).expect("values are bipolar")
}

pub fn binarize(images: &IdxImages, threshold: u8) -> Vec<StateVector> {
    (0..images.n_images).map(|k| binarize_image(images.image(k), threshold)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinaryImageSequence {
    #[serde(skip)]
    pub images: Vec<StateVector>,
    pub labels: Vec<u8>,
    /// Index of each image in the source file.
    pub source_indices: Vec<usize>,
    pub n_blocks: usize,
    pub threshold: u8,
    pub seed: u64,
}

impl BinaryImageSequence {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn to_pattern_set(&self) -> Result<PatternSet> {
        PatternSet::from_states(&self.images)
    }
}

/// Builds `n_blocks` blocks of the digits 0..9 in order, sampling images
/// of each digit without replacement. Digit `d` shuffles with substream `[d]`.
pub fn build_digit_sequence(images: &IdxImages, labels: &[u8], n_blocks: usize, threshold: u8, seed: u64) -> Result<BinaryImageSequence> {
    if labels.len() != images.n_images {
        return Err(Error::DimensionMismatch { expected: images.n_images, got: labels.len() });
    }
    let mut by_digit: Vec<Vec<usize>> = vec![Vec::new(); N_DIGITS];
    for (k, &l) in labels.iter().enumerate() {
        by_digit[l as usize].push(k);
    }
    for (d, pool) in by_digit.iter_mut().enumerate() {
        if pool.len() < n_blocks {
            return Err(Error::InsufficientData(format!("digit {d} has {} images, need {n_blocks}", pool.len())));
        }
        pool.shuffle(&mut substream(seed, &[d as u64]));
    }
    let mut source_indices = Vec::with_capacity(n_blocks * N_DIGITS);
    for b in 0..n_blocks {
        for pool in &by_digit {
            source_indices.push(pool[b]);
        }
    }
    let images_out = source_indices.iter().map(|&k| binarize_image(images.image(k), threshold)).collect();
    let labels_out = source_indices.iter().map(|&k| labels[k]).collect();
    Ok(BinaryImageSequence { images: images_out, labels: labels_out, source_indices, n_blocks, threshold, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGE_MAGIC, n, rows, cols] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    #[test]
    fn parses_big_endian_header() {
        let bytes = idx_images(2, 2, 3, &[0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255]);
        let IdxData::Images(im) = read_idx(&bytes[..]).unwrap() else { panic!("not images") };
        assert_eq!((im.n_images, im.rows, im.cols), (2, 2, 3));
        assert_eq!(im.image(1), &[250, 251, 252, 253, 254, 255]);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut bytes = idx_images(1, 2, 2, &[0; 4]);
        bytes[3] = 0x04;
        assert!(matches!(read_idx(&bytes[..]), Err(Error::Format(_))));
        assert!(matches!(read_idx(&[][..]), Err(Error::Truncated { expected: 4, found: 0 })));
        let short = idx_images(2, 2, 2, &[0; 5]);
        assert!(matches!(read_idx(&short[..]), Err(Error::Truncated { expected: 24, found: 21 })));
    }

    #[test]
    fn threshold_is_inclusive() {
        let s = binarize_image(&[0, 127, 128, 255], DEFAULT_THRESHOLD);
        assert_eq!(s.to_bipolar(), vec![-1, -1, 1, 1]);
    }
}
