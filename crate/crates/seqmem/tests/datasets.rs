use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqmem::datasets::*;
use seqmem::patterns::{load_patterns, overlap, save_patterns};
use seqmem::Error;

const ROWS: usize = 6;
const COLS: usize = 7;

/// Each digit has a random prototype; images are the prototype with a few
/// pixels overwritten by noise.
fn synthetic(per_digit: usize, seed: u64) -> (IdxImages, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ROWS * COLS;
    let protos: Vec<Vec<u8>> = (0..N_DIGITS).map(|_| (0..d).map(|_| if rng.random::<bool>() { 255 } else { 0 }).collect()).collect();
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for k in 0..per_digit * N_DIGITS {
        // interleave labels so the file is not sorted by digit
        let digit = (k * 7) % N_DIGITS;
        for &p in &protos[digit] {
            pixels.push(if rng.random::<f64>() < 0.1 { rng.random() } else { p });
        }
        labels.push(digit as u8);
    }
    (IdxImages { n_images: labels.len(), rows: ROWS, cols: COLS, pixels }, labels)
}

fn write_idx(images: &IdxImages, labels: &[u8], dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let ip = dir.join("images-idx3-ubyte");
    let lp = dir.join("labels-idx1-ubyte");
    let mut f = std::fs::File::create(&ip).unwrap();
    for x in [IMAGE_MAGIC, images.n_images as u32, images.rows as u32, images.cols as u32] {
        f.write_all(&x.to_be_bytes()).unwrap();
    }
    f.write_all(&images.pixels).unwrap();
    let mut f = std::fs::File::create(&lp).unwrap();
    for x in [LABEL_MAGIC, labels.len() as u32] {
        f.write_all(&x.to_be_bytes()).unwrap();
    }
    f.write_all(labels).unwrap();
    (ip, lp)
}

#[test]
fn idx_files_round_trip() {
    let (images, labels) = synthetic(5, 1);
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = write_idx(&images, &labels, dir.path());
    assert_eq!(load_idx_images(&ip).unwrap(), images);
    assert_eq!(load_idx_labels(&lp).unwrap(), labels);
    // the wrong loader names the magic it found
    assert!(matches!(load_idx_labels(&ip), Err(Error::Format(_))));
    assert!(matches!(load_idx_images(dir.path().join("missing")), Err(Error::Io(_))));
}

#[test]
fn truncated_pixel_block_is_reported() {
    let (images, labels) = synthetic(2, 2);
    let dir = tempfile::tempdir().unwrap();
    let (ip, _) = write_idx(&images, &labels, dir.path());
    let bytes = std::fs::read(&ip).unwrap();
    let cut = &bytes[..bytes.len() - 5];
    match read_idx(cut) {
        Err(Error::Truncated { expected, found }) => {
            assert_eq!(expected, bytes.len());
            assert_eq!(found, bytes.len() - 5);
        }
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn digit_sequence_is_ordered_without_reuse() {
    let (images, labels) = synthetic(8, 3);
    let seq = build_digit_sequence(&images, &labels, 6, DEFAULT_THRESHOLD, 11).unwrap();
    assert_eq!(seq.len(), 60);
    for (k, &l) in seq.labels.iter().enumerate() {
        assert_eq!(l as usize, k % N_DIGITS);
        assert_eq!(labels[seq.source_indices[k]], l);
    }
    let unique: HashSet<usize> = seq.source_indices.iter().copied().collect();
    assert_eq!(unique.len(), 60);
    for (k, s) in seq.images.iter().enumerate() {
        assert_eq!(*s, binarize_image(images.image(seq.source_indices[k]), DEFAULT_THRESHOLD));
    }
    // deterministic in the seed, and the seed matters
    assert_eq!(build_digit_sequence(&images, &labels, 6, DEFAULT_THRESHOLD, 11).unwrap(), seq);
    assert_ne!(build_digit_sequence(&images, &labels, 6, DEFAULT_THRESHOLD, 12).unwrap().source_indices, seq.source_indices);
}

#[test]
fn too_many_blocks_is_insufficient_data() {
    let (images, labels) = synthetic(4, 4);
    assert!(matches!(build_digit_sequence(&images, &labels, 5, DEFAULT_THRESHOLD, 0), Err(Error::InsufficientData(_))));
    assert!(matches!(build_digit_sequence(&images, &labels[1..], 2, DEFAULT_THRESHOLD, 0), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn same_digit_images_overlap_more() {
    let (images, labels) = synthetic(6, 5);
    let seq = build_digit_sequence(&images, &labels, 6, DEFAULT_THRESHOLD, 1).unwrap();
    let ps = seq.to_pattern_set().unwrap();
    let (mut same, mut cross) = (Vec::new(), Vec::new());
    for a in 0..ps.n_patterns() {
        for b in (a + 1)..ps.n_patterns() {
            let m = overlap(&ps, a, &ps.pattern(b), None).unwrap();
            if a % N_DIGITS == b % N_DIGITS { same.push(m) } else { cross.push(m) }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&same) > 0.7);
    assert!(mean(&cross).abs() < 0.3);
}

#[test]
fn binarized_sequence_survives_pattern_files() {
    let (images, labels) = synthetic(3, 6);
    let seq = build_digit_sequence(&images, &labels, 3, 100, 2).unwrap();
    let ps = seq.to_pattern_set().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("digits.bin");
    save_patterns(&path, &ps).unwrap();
    let back = load_patterns(&path).unwrap();
    assert_eq!(back.n_neurons(), ROWS * COLS);
    for mu in 0..ps.n_patterns() {
        assert_eq!(back.pattern(mu), seq.images[mu]);
    }
}
