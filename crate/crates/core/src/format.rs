//! Binary container for trained models and cached datasets.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MEMHD" | version u16 | kind u8 | payload length u64 | payload | crc32(payload) u32
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::LabeledDataset;
use crate::encoding::{EncoderKind, EncoderParams};
use crate::error::{Error, Result};
use crate::hv::{BinaryAm, ClassMap};
use crate::rng::PRNG_ID;

pub const MAGIC: &[u8; 5] = b"MEMHD";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 5 + 2 + 1 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PayloadKind {
    Model = 1,
    Dataset = 2,
}

impl PayloadKind {
    fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Self::Model),
            2 => Ok(Self::Dataset),
            other => Err(Error::Format(format!("unknown payload kind {other}"))),
        }
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn opt_f64(&mut self, v: Option<f64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.f64(x);
            }
            None => self.u8(0),
        }
    }

    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("payload ends early at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("size field overflows".into()))
    }

    /// A count of items that must each occupy at least `item_bytes`.
    fn count(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(item_bytes) > self.buf.len() - self.pos {
            return Err(Error::Format(format!("count {n} exceeds remaining payload")));
        }
        Ok(n)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn opt_f64(&mut self) -> Result<Option<f64>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.f64()?)),
            other => Err(Error::Format(format!("bad option tag {other}"))),
        }
    }

    fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("string is not UTF-8".into()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing payload bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn seal(kind: PayloadKind, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind as u8);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out
}

fn unseal(bytes: &[u8], expected: PayloadKind) -> Result<&[u8]> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..5] != MAGIC {
        return Err(Error::Format("missing MEMHD magic".into()));
    }
    let version = u16::from_le_bytes([bytes[5], bytes[6]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let kind = PayloadKind::from_code(bytes[7])?;
    if kind != expected {
        return Err(Error::Format(format!("expected a {expected:?} file, found {kind:?}")));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if len != (bytes.len() - HEADER_LEN - 4) as u64 {
        return Err(Error::Format(format!(
            "payload length {len} disagrees with file size {}",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(payload)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// How a model was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub learning_rate: f64,
    pub epochs: usize,
    pub ratio: f64,
    pub dataset: String,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub encoder: EncoderParams,
    pub am: BinaryAm,
    pub meta: TrainingMeta,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        let e = &self.encoder;
        w.u8(e.kind.code());
        w.u64(e.seed);
        w.usize(e.features);
        w.usize(e.dim);
        w.usize(e.levels);
        w.u8(PRNG_ID);

        let map = self.am.class_map();
        w.usize(self.am.dim());
        w.usize(map.classes());
        w.usize(map.len());
        for &label in map.labels() {
            w.u32(label as u32);
        }
        for &word in self.am.packed_words() {
            w.u64(word);
        }

        let m = &self.meta;
        w.f64(m.learning_rate);
        w.usize(m.epochs);
        w.f64(m.ratio);
        w.str(&m.dataset);
        w.opt_f64(m.train_accuracy);
        w.opt_f64(m.test_accuracy);
        seal(PayloadKind::Model, &w.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(unseal(bytes, PayloadKind::Model)?);
        let encoder = EncoderParams {
            kind: EncoderKind::from_code(r.u8()?)?,
            seed: r.u64()?,
            features: r.usize()?,
            dim: r.usize()?,
            levels: r.usize()?,
        };
        let prng = r.u8()?;
        if prng != PRNG_ID {
            return Err(Error::Format(format!("model was built with unknown generator {prng}")));
        }

        let dim = r.usize()?;
        if dim == 0 || dim != encoder.dim {
            return Err(Error::Format(format!(
                "memory dimension {dim} does not match encoder dimension {}",
                encoder.dim
            )));
        }
        let classes = r.usize()?;
        let cols = r.count(4)?;
        let labels = (0..cols)
            .map(|_| r.u32().map(|l| l as usize))
            .collect::<Result<Vec<_>>>()?;
        let n_words = cols
            .checked_mul(dim.div_ceil(64))
            .ok_or_else(|| Error::Format("memory size overflows".into()))?;
        if n_words.saturating_mul(8) > bytes.len() {
            return Err(Error::Format("memory larger than file".into()));
        }
        let words = (0..n_words).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let map = ClassMap::new(labels, classes).map_err(|e| Error::Format(e.to_string()))?;
        let am = BinaryAm::from_packed(dim, words, map)?;

        let meta = TrainingMeta {
            learning_rate: r.f64()?,
            epochs: r.usize()?,
            ratio: r.f64()?,
            dataset: r.str()?,
            train_accuracy: r.opt_f64()?,
            test_accuracy: r.opt_f64()?,
        };
        r.finish()?;
        let model = Self { encoder, am, meta };
        // Pad bits are masked on load; a file that set them is not canonical.
        if model.to_bytes() != bytes {
            return Err(Error::Format("non-canonical model encoding".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

pub fn dataset_to_bytes(ds: &LabeledDataset) -> Vec<u8> {
    let mut w = Writer::default();
    w.str(&ds.name);
    w.usize(ds.features());
    w.usize(ds.classes());
    w.usize(ds.len());
    for &v in ds.values() {
        w.u32(v.to_bits());
    }
    for &l in ds.labels() {
        w.u32(l as u32);
    }
    seal(PayloadKind::Dataset, &w.0)
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<LabeledDataset> {
    let mut r = Reader::new(unseal(bytes, PayloadKind::Dataset)?);
    let name = r.str()?;
    let features = r.usize()?;
    let classes = r.usize()?;
    let n = r.count(4)?;
    let total = n
        .checked_mul(features)
        .filter(|t| t.saturating_mul(4) <= bytes.len())
        .ok_or_else(|| Error::Format("dataset larger than file".into()))?;
    let values = (0..total)
        .map(|_| r.u32().map(f32::from_bits))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..n)
        .map(|_| r.u32().map(|l| l as usize))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    LabeledDataset::new(name, features, classes, values, labels)
}

/// `<cache>/<dataset>/<split>.bin`
pub fn cache_path(cache: &Path, dataset: &str, split: &str) -> PathBuf {
    cache.join(dataset).join(format!("{split}.bin"))
}

pub fn save_dataset(path: &Path, ds: &LabeledDataset) -> Result<()> {
    write_file(path, &dataset_to_bytes(ds))
}

pub fn load_dataset_cache(path: &Path) -> Result<LabeledDataset> {
    dataset_from_bytes(&read_file(path)?)
}
