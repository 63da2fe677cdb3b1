//! MNIST ingestion from IDX files, one-hot targets and per-digit subsets.
//!
//! IDX headers are big-endian: a magic word (`0x00000803` for images,
//! `0x00000801` for labels), the item count, and for images the row and
//! column counts. Gzip-compressed files are recognised by their `1f 8b`
//! prefix and decompressed transparently.

use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::Sample;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const IMAGE_SIDE: usize = 28;
pub const PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const CLASSES: usize = 10;
/// Images held out from the end of the training file for validation.
pub const DEFAULT_VALIDATION_LEN: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub pixels: Vec<f64>,
    pub label: u8,
}

impl Sample for LabeledExample {
    fn input(&self) -> &[f64] {
        &self.pixels
    }

    fn label(&self) -> usize {
        self.label as usize
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetSplits {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
}

fn decompress(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| Error::format(0, format!("bad gzip stream: {e}")))?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(offset as u64, format!("truncated header: missing {what}")))
}

/// Parses an IDX image file into `[0, 1]`-scaled, row-major pixel vectors.
pub fn load_idx_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bytes = decompress(bytes)?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(
            0,
            format!("expected image magic {IMAGE_MAGIC:#010x}, found {magic:#010x}"),
        ));
    }
    let count = be_u32(&bytes, 4, "image count")? as usize;
    let rows = be_u32(&bytes, 8, "row count")? as usize;
    let cols = be_u32(&bytes, 12, "column count")? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::format(
            8,
            format!("expected {IMAGE_SIDE}x{IMAGE_SIDE} images, found {rows}x{cols}"),
        ));
    }
    let body = &bytes[16..];
    let need = count * PIXELS;
    if body.len() < need {
        return Err(Error::format(
            (16 + body.len()) as u64,
            format!(
                "truncated image data: {count} images need {need} bytes, found {}",
                body.len()
            ),
        ));
    }
    if body.len() > need {
        return Err(Error::format(
            (16 + need) as u64,
            "trailing bytes after image data",
        ));
    }
    Ok(body
        .chunks_exact(PIXELS)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect())
}

/// Parses an IDX label file; every label must be a digit.
pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let bytes = decompress(bytes)?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(
            0,
            format!("expected label magic {LABEL_MAGIC:#010x}, found {magic:#010x}"),
        ));
    }
    let count = be_u32(&bytes, 4, "label count")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::format(
            (8 + body.len()) as u64,
            format!(
                "truncated label data: expected {count} labels, found {}",
                body.len()
            ),
        ));
    }
    if body.len() > count {
        return Err(Error::format(
            (8 + count) as u64,
            "trailing bytes after label data",
        ));
    }
    if let Some(pos) = body.iter().position(|&l| l as usize >= CLASSES) {
        return Err(Error::format(
            (8 + pos) as u64,
            format!("label {} is not a digit", body[pos]),
        ));
    }
    Ok(body.to_vec())
}

/// Pairs images with labels; the counts must agree.
pub fn zip_examples(images: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Vec<LabeledExample>> {
    if images.len() != labels.len() {
        return Err(Error::data(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(pixels, label)| LabeledExample { pixels, label })
        .collect())
}

pub fn one_hot(label: usize) -> Result<[f64; CLASSES]> {
    if label >= CLASSES {
        return Err(Error::invalid(format!("label {label} is not a digit")));
    }
    let mut v = [0.0; CLASSES];
    v[label] = 1.0;
    Ok(v)
}

fn find_file(dir: &Path, stems: &[&str]) -> Result<PathBuf> {
    for stem in stems {
        for suffix in ["", ".gz"] {
            let p = dir.join(format!("{stem}{suffix}"));
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(Error::data(format!(
        "no `{}` (or .gz) in {}",
        stems[0],
        dir.display()
    )))
}

fn read_pair(dir: &Path, images: &[&str], labels: &[&str]) -> Result<Vec<LabeledExample>> {
    let img_path = find_file(dir, images)?;
    let lbl_path = find_file(dir, labels)?;
    let with_path = |p: &Path, e: Error| match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", p.display()),
        },
        other => other,
    };
    let imgs = load_idx_images(&std::fs::read(&img_path)?).map_err(|e| with_path(&img_path, e))?;
    let lbls = load_idx_labels(&std::fs::read(&lbl_path)?).map_err(|e| with_path(&lbl_path, e))?;
    zip_examples(imgs, lbls)
}

/// Loads the four standard MNIST files from `dir`. The last
/// `validation_len` training images become the validation split.
pub fn load_mnist_dir(dir: impl AsRef<Path>, validation_len: usize) -> Result<DatasetSplits> {
    let dir = dir.as_ref();
    let mut train = read_pair(
        dir,
        &["train-images-idx3-ubyte", "train-images.idx3-ubyte"],
        &["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"],
    )?;
    let test = read_pair(
        dir,
        &["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"],
        &["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"],
    )?;
    if validation_len == 0 || validation_len >= train.len() {
        return Err(Error::data(format!(
            "validation split of {validation_len} leaves no training data ({} images)",
            train.len()
        )));
    }
    let validation = train.split_off(train.len() - validation_len);
    Ok(DatasetSplits {
        train,
        test,
        validation,
    })
}

/// Indices into `examples` grouped by digit, in file order.
pub(crate) fn indices_by_digit(examples: &[LabeledExample]) -> [Vec<usize>; CLASSES] {
    let mut by: [Vec<usize>; CLASSES] = Default::default();
    for (i, e) in examples.iter().enumerate() {
        by[e.label as usize].push(i);
    }
    by
}

/// Per-digit candidate order: file order for seed 0, a seeded shuffle otherwise.
pub(crate) fn candidate_order(examples: &[LabeledExample], seed: u64) -> [Vec<usize>; CLASSES] {
    let mut by = indices_by_digit(examples);
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for list in by.iter_mut() {
            list.shuffle(&mut rng);
        }
    }
    by
}

/// Indices of `ipd` examples per digit, interleaved `0, 1, …, 9, 0, 1, …`.
pub fn select_ipd_indices(
    examples: &[LabeledExample],
    ipd: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if ipd == 0 {
        return Err(Error::invalid("images per digit must be >= 1"));
    }
    let by = candidate_order(examples, seed);
    for (digit, list) in by.iter().enumerate() {
        if list.len() < ipd {
            return Err(Error::data(format!(
                "digit {digit} has only {} examples, {ipd} requested",
                list.len()
            )));
        }
    }
    Ok((0..ipd)
        .flat_map(|k| by.iter().map(move |list| list[k]))
        .collect())
}

/// `ipd` examples of every digit, interleaved round-robin by digit.
pub fn select_ipd(
    examples: &[LabeledExample],
    ipd: usize,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    Ok(select_ipd_indices(examples, ipd, seed)?
        .into_iter()
        .map(|i| examples[i].clone())
        .collect())
}

/// Builds IDX byte streams; used by fixtures and tools that write small datasets.
pub fn encode_idx_images(images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * PIXELS);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    out.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), PIXELS, "IDX images must have {PIXELS} pixels");
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
