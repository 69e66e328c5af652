//! Dataset ingestion: IDX (MNIST / Fashion-MNIST), ISOLET CSV, seeded splits.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const ISOLET_FEATURES: usize = 617;
pub const ISOLET_CLASSES: usize = 26;

/// Feature vectors (row-major, `len * features` values) with class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    features: usize,
    classes: usize,
    values: Vec<f32>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        features: usize,
        classes: usize,
        values: Vec<f32>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if features == 0 {
            return Err(Error::ZeroDimension("feature count"));
        }
        if classes == 0 {
            return Err(Error::ZeroDimension("class count"));
        }
        if values.len() != labels.len() * features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * features,
                actual: values.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            name: name.into(),
            features,
            classes,
            values,
            labels,
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        &self.values[i * self.features..(i + 1) * self.features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f32], usize)> {
        self.values.chunks(self.features).zip(self.labels.iter().copied())
    }

    /// Samples in the given order (indices may repeat).
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        Self {
            name: self.name.clone(),
            features: self.features,
            classes: self.classes,
            values,
            labels,
        }
    }

    /// The first `n` samples (or all of them).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        self.select(&(0..n).collect::<Vec<_>>())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Seeded permutation, then the first `fraction` of samples go left.
pub fn shuffle_split(ds: &LabeledDataset, seed: u64, fraction: f64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction {fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng::prng(seed));
    let cut = (ds.len() as f64 * fraction).round() as usize;
    Ok((ds.select(&order[..cut]), ds.select(&order[cut..])))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    } else {
        file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(bytes)
}

struct IdxReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> IdxReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(Error::Truncated {
                path: self.path.to_path_buf(),
                needed: n,
                available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let actual = self.u32()?;
        if actual != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                actual,
            });
        }
        Ok(())
    }
}

/// Loads an IDX image/label pair; pixels are scaled to `[0, 1]` by `/255`.
/// Paths ending in `.gz` are decompressed transparently.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    classes: usize,
) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = read_file(images_path)?;
    let label_bytes = read_file(labels_path)?;

    let mut images = IdxReader {
        path: images_path,
        bytes: &image_bytes,
        pos: 0,
    };
    images.magic(IDX_IMAGES_MAGIC)?;
    let n_images = images.u32()? as usize;
    let rows = images.u32()? as usize;
    let cols = images.u32()? as usize;
    let features = rows * cols;
    let pixels = images.take(n_images * features)?;

    let mut labels = IdxReader {
        path: labels_path,
        bytes: &label_bytes,
        pos: 0,
    };
    labels.magic(IDX_LABELS_MAGIC)?;
    let n_labels = labels.u32()? as usize;
    if n_labels != n_images {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let raw_labels = labels.take(n_labels)?;

    let values = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    let labels = raw_labels.iter().map(|&l| l as usize).collect();
    let name = images_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    LabeledDataset::new(name, features, classes, values, labels)
}

/// Writes an IDX image/label pair from raw bytes; used for fixtures.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    pixels: &[u8],
    labels: &[u8],
) -> Result<()> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let mut img = Vec::with_capacity(16 + pixels.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    img.extend_from_slice(pixels);
    std::fs::write(images_path, img).map_err(|e| Error::io(images_path, e))?;

    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    std::fs::write(labels_path, lab).map_err(|e| Error::io(labels_path, e))
}

struct CsvRows {
    features: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
}

fn parse_isolet(path: &Path) -> Result<CsvRows> {
    let text = String::from_utf8(read_file(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ISOLET_FEATURES + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", ISOLET_FEATURES + 1, fields.len()),
            ));
        }
        for (i, field) in fields[..ISOLET_FEATURES].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("field {}: cannot parse {field:?}", i + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("field {}: non-finite value", i + 1)));
            }
            values.push(v);
        }
        // UCI files write labels as "1." .. "26.".
        let raw = fields[ISOLET_FEATURES];
        let label: f64 = raw
            .parse()
            .map_err(|_| parse_err(line_no, format!("cannot parse label {raw:?}")))?;
        if label.fract() != 0.0 || !(1.0..=ISOLET_CLASSES as f64).contains(&label) {
            return Err(parse_err(line_no, format!("label {raw} outside 1..={ISOLET_CLASSES}")));
        }
        labels.push(label as usize - 1);
    }
    Ok(CsvRows {
        features: ISOLET_FEATURES,
        values,
        labels,
    })
}

/// Loads the ISOLET train/test CSVs. Features are min-max scaled with the
/// training split's per-feature range; test values are clamped to `[0, 1]`.
pub fn load_isolet(
    train_csv: impl AsRef<Path>,
    test_csv: impl AsRef<Path>,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = parse_isolet(train_csv.as_ref())?;
    let test = parse_isolet(test_csv.as_ref())?;
    let f = train.features;
    let mut lo = vec![f64::INFINITY; f];
    let mut hi = vec![f64::NEG_INFINITY; f];
    for row in train.values.chunks(f) {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let scale = |rows: &[f64]| -> Vec<f32> {
        rows.chunks(f)
            .flat_map(|row| {
                row.iter().enumerate().map(|(j, &v)| {
                    let range = hi[j] - lo[j];
                    if range > 0.0 {
                        ((v - lo[j]) / range).clamp(0.0, 1.0) as f32
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    };
    let train_ds = LabeledDataset::new("isolet-train", f, ISOLET_CLASSES, scale(&train.values), train.labels)?;
    let test_ds = LabeledDataset::new("isolet-test", f, ISOLET_CLASSES, scale(&test.values), test.labels)?;
    Ok((train_ds, test_ds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    FashionMnist,
    Isolet,
}

impl DatasetKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "mnist" => Ok(Self::Mnist),
            "fmnist" | "fashion-mnist" | "fashion_mnist" => Ok(Self::FashionMnist),
            "isolet" => Ok(Self::Isolet),
            other => Err(Error::Config(format!("unknown dataset {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mnist => "mnist",
            Self::FashionMnist => "fmnist",
            Self::Isolet => "isolet",
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Self::Mnist | Self::FashionMnist => 10,
            Self::Isolet => ISOLET_CLASSES,
        }
    }

    /// Expected file names inside a dataset directory, train first.
    pub fn file_names(self) -> &'static [&'static str] {
        match self {
            Self::Mnist | Self::FashionMnist => &[
                "train-images-idx3-ubyte",
                "train-labels-idx1-ubyte",
                "t10k-images-idx3-ubyte",
                "t10k-labels-idx1-ubyte",
            ],
            Self::Isolet => &["isolet1+2+3+4.data", "isolet5.data"],
        }
    }
}

fn locate(dir: &Path, name: &str) -> PathBuf {
    let plain = dir.join(name);
    if plain.exists() {
        return plain;
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.exists() {
        gz
    } else {
        plain
    }
}

/// Loads the canonical train/test split of `kind` from `dir`.
pub fn load_dataset(kind: DatasetKind, dir: &Path) -> Result<(LabeledDataset, LabeledDataset)> {
    let files: Vec<PathBuf> = kind.file_names().iter().map(|n| locate(dir, n)).collect();
    match kind {
        DatasetKind::Mnist | DatasetKind::FashionMnist => {
            let mut train = load_idx(&files[0], &files[1], kind.classes())?;
            let mut test = load_idx(&files[2], &files[3], kind.classes())?;
            train.name = format!("{}-train", kind.name());
            test.name = format!("{}-test", kind.name());
            Ok((train, test))
        }
        DatasetKind::Isolet => load_isolet(&files[0], &files[1]),
    }
}
