//! Dataset ingestion: IDX files (plain or gzip) and synthetic Gaussian
//! blobs for fast property tests.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::Tensor;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad magic number 0x{got:08x}, expected 0x{expected:08x}")]
    MagicMismatch {
        path: String,
        got: u32,
        expected: u32,
    },
    #[error("image file has {images} items but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: truncated file: needed {needed} more bytes for {what}")]
    TruncatedFile {
        path: String,
        needed: usize,
        what: &'static str,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Train/test tag carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Loaded dataset: `[n x d]` features in [0, 1] plus class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Vec<u8>,
    pub class_count: usize,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.images.shape()[1]
    }
}

struct IdxReader {
    path: String,
    inner: Box<dyn Read>,
}

impl IdxReader {
    /// Open an IDX file, transparently inflating gzip by magic-byte sniff.
    fn open(path: &Path) -> Result<Self, DataError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| DataError::Io {
            path: display.clone(),
            source: e,
        })?;
        let mut reader = BufReader::new(file);
        let mut head = [0u8; 2];
        let mut pre = 0;
        while pre < 2 {
            match reader.read(&mut head[pre..]) {
                Ok(0) => break,
                Ok(n) => pre += n,
                Err(e) => {
                    return Err(DataError::Io {
                        path: display,
                        source: e,
                    })
                }
            }
        }
        let sniffed: Box<dyn Read> = if head[..pre] == [0x1f, 0x8b] {
            Box::new(GzDecoder::new(ChainedHead {
                head,
                pre,
                pos: 0,
                rest: reader,
            }))
        } else {
            Box::new(ChainedHead {
                head,
                pre,
                pos: 0,
                rest: reader,
            })
        };
        Ok(IdxReader {
            path: display,
            inner: sniffed,
        })
    }

    fn read_exact(&mut self, buf: &mut [u8], what: &'static str) -> Result<(), DataError> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(DataError::TruncatedFile {
                        path: self.path.clone(),
                        needed: buf.len() - filled,
                        what,
                    })
                }
                Ok(n) => filled += n,
                Err(e) => {
                    return Err(DataError::Io {
                        path: self.path.clone(),
                        source: e,
                    })
                }
            }
        }
        Ok(())
    }

    fn read_u32(&mut self, what: &'static str) -> Result<u32, DataError> {
        let mut buf = [0u8; 4];
        self.read_exact(&mut buf, what)?;
        Ok(u32::from_be_bytes(buf))
    }
}

/// BufReader re-prefixed with the bytes consumed while sniffing.
struct ChainedHead {
    head: [u8; 2],
    pre: usize,
    pos: usize,
    rest: BufReader<File>,
}

impl Read for ChainedHead {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.pos < self.pre {
            let n = (self.pre - self.pos).min(buf.len());
            buf[..n].copy_from_slice(&self.head[self.pos..self.pos + n]);
            self.pos += n;
            return Ok(n);
        }
        self.rest.read(buf)
    }
}

/// Optional transforms applied at load time.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Zero-pad 28x28 images to 32x32 (2 pixels on every edge).
    pub pad_to_32: bool,
}

/// Load an IDX image/label pair. Pixels are scaled by 1/255 into [0, 1] and
/// flattened row-major to width rows*cols; counts are cross-checked between
/// the two files.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    split: Split,
) -> Result<Dataset, DataError> {
    load_idx_with(images_path, labels_path, split, LoadOptions::default())
}

/// As [`load_idx`] with explicit options.
pub fn load_idx_with(
    images_path: &Path,
    labels_path: &Path,
    split: Split,
    opts: LoadOptions,
) -> Result<Dataset, DataError> {
    let mut img = IdxReader::open(images_path)?;
    let magic = img.read_u32("image magic")?;
    if magic != IMAGES_MAGIC {
        return Err(DataError::MagicMismatch {
            path: img.path,
            got: magic,
            expected: IMAGES_MAGIC,
        });
    }
    let n = img.read_u32("image count")? as usize;
    let rows = img.read_u32("row count")? as usize;
    let cols = img.read_u32("column count")? as usize;
    let mut raw = vec![0u8; n * rows * cols];
    img.read_exact(&mut raw, "image pixels")?;

    let mut lbl = IdxReader::open(labels_path)?;
    let magic = lbl.read_u32("label magic")?;
    if magic != LABELS_MAGIC {
        return Err(DataError::MagicMismatch {
            path: lbl.path,
            got: magic,
            expected: LABELS_MAGIC,
        });
    }
    let n_labels = lbl.read_u32("label count")? as usize;
    if n_labels != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }
    let mut labels = vec![0u8; n_labels];
    lbl.read_exact(&mut labels, "label bytes")?;

    let (out_rows, out_cols, data) = if opts.pad_to_32 && rows == 28 && cols == 28 {
        let mut data = vec![0.0f64; n * 32 * 32];
        for i in 0..n {
            for r in 0..28 {
                for c in 0..28 {
                    data[i * 1024 + (r + 2) * 32 + (c + 2)] =
                        raw[i * 784 + r * 28 + c] as f64 / 255.0;
                }
            }
        }
        (32, 32, data)
    } else {
        (rows, cols, raw.iter().map(|&b| b as f64 / 255.0).collect())
    };

    let class_count = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    Ok(Dataset {
        images: Tensor::from_vec_unchecked(vec![n, out_rows * out_cols], data),
        labels,
        class_count,
        split,
    })
}

/// Standard file-name stems used by the common IDX dataset distributions.
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

fn resolve(dir: &Path, stem: &str) -> Result<std::path::PathBuf, DataError> {
    let plain = dir.join(stem);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(DataError::Io {
        path: plain.display().to_string(),
        source: std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "no such file (also tried .gz)",
        ),
    })
}

/// Load the four standard-named files (plain or .gz) from a directory.
pub fn load_idx_dir(dir: &Path, opts: LoadOptions) -> Result<(Dataset, Dataset), DataError> {
    let train = load_idx_with(
        &resolve(dir, TRAIN_IMAGES)?,
        &resolve(dir, TRAIN_LABELS)?,
        Split::Train,
        opts,
    )?;
    let test = load_idx_with(
        &resolve(dir, TEST_IMAGES)?,
        &resolve(dir, TEST_LABELS)?,
        Split::Test,
        opts,
    )?;
    Ok((train, test))
}

/// Write a dataset back to the IDX pair format, quantizing each pixel to
/// round(p * 255). Datasets whose pixels are k/255 (anything loaded from
/// IDX) round-trip bitwise.
pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: &Path) -> Result<(), DataError> {
    let n = ds.len();
    let d = ds.feature_dim();
    let io_err = |path: &Path, e: std::io::Error| DataError::Io {
        path: path.display().to_string(),
        source: e,
    };

    let mut img = File::create(images_path).map_err(|e| io_err(images_path, e))?;
    let mut header = Vec::with_capacity(16);
    header.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    header.extend_from_slice(&(n as u32).to_be_bytes());
    header.extend_from_slice(&1u32.to_be_bytes());
    header.extend_from_slice(&(d as u32).to_be_bytes());
    img.write_all(&header).map_err(|e| io_err(images_path, e))?;
    let bytes: Vec<u8> = ds
        .images
        .data()
        .iter()
        .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    img.write_all(&bytes).map_err(|e| io_err(images_path, e))?;

    let mut lbl = File::create(labels_path).map_err(|e| io_err(labels_path, e))?;
    let mut header = Vec::with_capacity(8);
    header.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    header.extend_from_slice(&(n as u32).to_be_bytes());
    lbl.write_all(&header).map_err(|e| io_err(labels_path, e))?;
    lbl.write_all(&ds.labels)
        .map_err(|e| io_err(labels_path, e))?;
    Ok(())
}

/// Seeded 2-D Gaussian clusters, one per class, centered on a circle of
/// radius `separation` and min-max normalized into [0, 1] per feature.
pub fn synth_blobs(n: usize, class_count: usize, separation: f64, seed: u64) -> Dataset {
    assert!(n > 0, "n must be positive");
    assert!(class_count > 0, "need at least one class");
    assert!(separation >= 0.0, "separation must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = (i % class_count) as u8;
        let angle = 2.0 * std::f64::consts::PI * class as f64 / class_count as f64;
        let (cy, cx) = angle.sin_cos();
        data.push(separation * cx + gaussian(&mut rng));
        data.push(separation * cy + gaussian(&mut rng));
        labels.push(class);
    }
    for dim in 0..2 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(data[i * 2 + dim]);
            hi = hi.max(data[i * 2 + dim]);
        }
        let range = hi - lo;
        for i in 0..n {
            let v = &mut data[i * 2 + dim];
            *v = if range > 0.0 { (*v - lo) / range } else { 0.5 };
        }
    }
    Dataset {
        images: Tensor::from_vec_unchecked(vec![n, 2], data),
        labels,
        class_count,
        split: Split::Train,
    }
}

// Box-Muller from two uniform draws; deterministic given the rng state.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Iterator of `(batch tensor, labels)` pairs covering every index exactly
/// once per pass, with an optional seeded Fisher-Yates shuffle. The final
/// partial batch is emitted.
pub fn batches<'a>(
    ds: &'a Dataset,
    batch_size: usize,
    seed: u64,
    shuffle: bool,
) -> impl Iterator<Item = (Tensor, Vec<u8>)> + 'a {
    assert!(batch_size > 0, "batch_size must be positive");
    let mut order: Vec<usize> = (0..ds.len()).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
    }
    let d = ds.feature_dim();
    (0..order.len().div_ceil(batch_size)).map(move |b| {
        let idx = &order[b * batch_size..((b + 1) * batch_size).min(order.len())];
        let mut data = Vec::with_capacity(idx.len() * d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(ds.images.row(i));
            labels.push(ds.labels[i]);
        }
        (Tensor::from_vec_unchecked(vec![idx.len(), d], data), labels)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, bytes: &[u8]) {
        File::create(path).unwrap().write_all(bytes).unwrap();
    }

    fn tiny_idx_pair(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        // two 2x2 images with known bytes: 0 and 255 checkerboard
        let img = dir.join("imgs");
        let lbl = dir.join("lbls");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 255, 255, 0, 255, 0, 0, 255]);
        write_raw(&img, &bytes);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 1]);
        write_raw(&lbl, &bytes);
        (img, lbl)
    }

    #[test]
    fn loads_hand_built_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = tiny_idx_pair(dir.path());
        let ds = load_idx(&img, &lbl, Split::Train).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_dim(), 4);
        assert_eq!(ds.class_count, 2);
        assert_eq!(ds.images.row(0), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.images.row(1), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ds.labels, vec![0, 1]);
    }

    #[test]
    fn error_paths_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = tiny_idx_pair(dir.path());

        // truncated labels: drop the final byte
        let cut = dir.path().join("lbls_cut");
        let bytes = std::fs::read(&lbl).unwrap();
        write_raw(&cut, &bytes[..bytes.len() - 1]);
        assert!(matches!(
            load_idx(&img, &cut, Split::Train),
            Err(DataError::TruncatedFile { .. })
        ));

        // wrong magic
        let bad = dir.path().join("bad_magic");
        let mut bytes = std::fs::read(&img).unwrap();
        bytes[3] = 0x99;
        write_raw(&bad, &bytes);
        assert!(matches!(
            load_idx(&bad, &lbl, Split::Train),
            Err(DataError::MagicMismatch { .. })
        ));

        // count mismatch: label header claims 3
        let wrong = dir.path().join("lbls_wrong_count");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&3u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 1, 0]);
        write_raw(&wrong, &bytes);
        assert!(matches!(
            load_idx(&img, &wrong, Split::Train),
            Err(DataError::CountMismatch {
                images: 2,
                labels: 3
            })
        ));
    }

    #[test]
    fn gzip_is_sniffed_transparently() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = tiny_idx_pair(dir.path());
        for src in [&img, &lbl] {
            let gz_path = src.with_extension("gz");
            let raw = std::fs::read(src).unwrap();
            let f = File::create(&gz_path).unwrap();
            let mut enc = flate2::write::GzEncoder::new(f, flate2::Compression::default());
            enc.write_all(&raw).unwrap();
            enc.finish().unwrap();
        }
        let ds = load_idx(
            &img.with_extension("gz"),
            &lbl.with_extension("gz"),
            Split::Test,
        )
        .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.images.row(0), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.split, Split::Test);
    }

    #[test]
    fn pad_to_32_zero_borders() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("imgs28");
        let lbl = dir.path().join("lbls28");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&[255u8; 784]);
        write_raw(&img, &bytes);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.push(5);
        write_raw(&lbl, &bytes);
        let ds = load_idx_with(&img, &lbl, Split::Train, LoadOptions { pad_to_32: true }).unwrap();
        assert_eq!(ds.feature_dim(), 1024);
        let row = ds.images.row(0);
        assert_eq!(row[0], 0.0);
        assert_eq!(row[2 * 32 + 2], 1.0);
        assert_eq!(row[1023], 0.0);
    }

    #[test]
    fn idx_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = tiny_idx_pair(dir.path());
        let ds = load_idx(&img, &lbl, Split::Train).unwrap();
        let img2 = dir.path().join("imgs2");
        let lbl2 = dir.path().join("lbls2");
        write_idx(&ds, &img2, &lbl2).unwrap();
        let ds2 = load_idx(&img2, &lbl2, Split::Train).unwrap();
        assert_eq!(ds.labels, ds2.labels);
        for (a, b) in ds.images.data().iter().zip(ds2.images.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn synth_blobs_deterministic_per_seed() {
        let a = synth_blobs(100, 3, 4.0, 11);
        let b = synth_blobs(100, 3, 4.0, 11);
        assert_eq!(a.labels, b.labels);
        for (x, y) in a.images.data().iter().zip(b.images.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let c = synth_blobs(100, 3, 4.0, 12);
        assert_ne!(a.images.data()[0], c.images.data()[0]);
        assert!(a.images.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn batch_sizes_and_order() {
        let ds = synth_blobs(10, 2, 1.0, 5);
        let sizes: Vec<usize> = batches(&ds, 4, 0, false)
            .map(|(t, _)| t.shape()[0])
            .collect();
        assert_eq!(sizes, vec![4, 4, 2]);

        // shuffle off preserves dataset order
        let (first, labels) = batches(&ds, 10, 0, false).next().unwrap();
        assert_eq!(first.data(), ds.images.data());
        assert_eq!(labels, ds.labels);

        // same seed, same order
        let a: Vec<Vec<u8>> = batches(&ds, 3, 9, true).map(|(_, l)| l).collect();
        let b: Vec<Vec<u8>> = batches(&ds, 3, 9, true).map(|(_, l)| l).collect();
        assert_eq!(a, b);
    }
}
