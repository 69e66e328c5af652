//! Flat `key = value` configuration files and their merge with flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use memhd_core::data::DatasetKind;
use memhd_core::training::{NormalizeMode, RefreshCadence, ThresholdMode};

use crate::error::{CliError, Result};

pub const DATA_DIR_ENV: &str = "MEMHD_DATA_DIR";
pub const CACHE_DIR_ENV: &str = "MEMHD_CACHE_DIR";

pub const KEYS: &[&str] = &[
    "dataset",
    "data-dir",
    "cache-dir",
    "dim",
    "cols",
    "ratio",
    "alloc-batch",
    "max-kmeans-iters",
    "lr",
    "epochs",
    "seed",
    "normalize",
    "refresh",
    "threshold",
    "init",
    "train-limit",
    "test-limit",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::Config(format!("{}:{}: {msg}", origin.display(), n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Cluster,
    Random,
}

impl FromStr for InitKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(Self::Cluster),
            "random" => Ok(Self::Random),
            other => Err(CliError::Config(format!(
                "unknown init `{other}`, expected cluster or random"
            ))),
        }
    }
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cluster => "cluster",
            Self::Random => "random",
        }
    }
}

/// Fully resolved pipeline settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dataset: DatasetKind,
    pub data_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub dim: usize,
    pub cols: usize,
    pub ratio: f64,
    pub alloc_batch: usize,
    pub max_kmeans_iters: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub normalize: NormalizeMode,
    pub refresh: RefreshCadence,
    pub threshold: ThresholdMode,
    pub init: InitKind,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
}

/// Values given on the command line; `None` falls back to the config file,
/// then to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub dataset: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub dim: Option<usize>,
    pub cols: Option<usize>,
    pub ratio: Option<f64>,
    pub alloc_batch: Option<usize>,
    pub max_kmeans_iters: Option<usize>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub normalize: Option<String>,
    pub refresh: Option<String>,
    pub threshold: Option<String>,
    pub init: Option<String>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("invalid value `{raw}` for `{key}`")))
}

struct Layered<'a> {
    file: &'a ConfigFile,
}

impl Layered<'_> {
    fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map(|raw| parse_value(key, raw)).transpose(),
        }
    }

    fn string(&self, key: &str, flag: &Option<String>) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).map(str::to_string))
    }
}

/// Learning rate used when neither flag nor file sets one.
pub fn default_lr(kind: DatasetKind) -> f64 {
    match kind {
        DatasetKind::Mnist | DatasetKind::FashionMnist => 0.01,
        DatasetKind::Isolet => 0.004,
    }
}

impl Overrides {
    pub fn resolve(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let l = Layered { file: &file };
        let dataset_name = l.string("dataset", &self.dataset).unwrap_or_else(|| "mnist".into());
        let dataset = DatasetKind::parse(&dataset_name)?;
        let data_dir = match l.pick::<PathBuf>("data-dir", self.data_dir.clone())? {
            Some(dir) => dir,
            None => std::env::var_os(DATA_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("data"))
                .join(dataset.name()),
        };
        let cache_dir = l
            .pick::<PathBuf>("cache-dir", self.cache_dir.clone())?
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from));
        let settings = Settings {
            dataset,
            data_dir,
            cache_dir,
            dim: l.pick("dim", self.dim)?.unwrap_or(128),
            cols: l.pick("cols", self.cols)?.unwrap_or(128),
            ratio: l.pick("ratio", self.ratio)?.unwrap_or(0.9),
            alloc_batch: l.pick("alloc-batch", self.alloc_batch)?.unwrap_or(1),
            max_kmeans_iters: l.pick("max-kmeans-iters", self.max_kmeans_iters)?.unwrap_or(100),
            lr: l.pick("lr", self.lr)?.unwrap_or_else(|| default_lr(dataset)),
            epochs: l.pick("epochs", self.epochs)?.unwrap_or(100),
            seed: l.pick("seed", self.seed)?.unwrap_or(42),
            normalize: match l.string("normalize", &self.normalize) {
                Some(s) => NormalizeMode::parse(&s)?,
                None => NormalizeMode::default(),
            },
            refresh: match l.string("refresh", &self.refresh) {
                Some(s) => RefreshCadence::parse(&s)?,
                None => RefreshCadence::default(),
            },
            threshold: match l.string("threshold", &self.threshold) {
                Some(s) => ThresholdMode::parse(&s)?,
                None => ThresholdMode::default(),
            },
            init: match l.string("init", &self.init) {
                Some(s) => s.parse()?,
                None => InitKind::Cluster,
            },
            train_limit: l.pick("train-limit", self.train_limit)?,
            test_limit: l.pick("test-limit", self.test_limit)?,
        };
        settings.validate()?;
        Ok(settings)
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("cols", self.cols),
            ("alloc-batch", self.alloc_batch),
            ("max-kmeans-iters", self.max_kmeans_iters),
        ];
        if let Some((key, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(CliError::Config(format!("`{key}` must be at least 1")));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(CliError::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(CliError::Config(format!("ratio {} must lie in (0, 1]", self.ratio)));
        }
        Ok(())
    }
}

/// Comma-separated list, e.g. `64,128,256`.
pub fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    let items = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("`{key}` needs at least one value")));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let f = ConfigFile::parse("# preset\ndataset = isolet\n\nlr=0.02 # trailing\n", Path::new("p")).unwrap();
        assert_eq!(f.get("dataset"), Some("isolet"));
        assert_eq!(f.get("lr"), Some("0.02"));
        assert_eq!(f.get("dim"), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("dim 128", Path::new("p")).is_err());
        assert!(ConfigFile::parse("colour = red", Path::new("p")).is_err());
        assert!(ConfigFile::parse("dim = 1\ndim = 2", Path::new("p")).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "dataset = isolet\ndim = 512\nepochs = 3\n").unwrap();
        let o = Overrides {
            config: Some(path),
            dim: Some(64),
            data_dir: Some("somewhere".into()),
            ..Overrides::default()
        };
        let s = o.resolve().unwrap();
        assert_eq!(s.dim, 64);
        assert_eq!(s.epochs, 3);
        assert_eq!(s.dataset, DatasetKind::Isolet);
        assert_eq!(s.lr, default_lr(DatasetKind::Isolet));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let o = Overrides {
            ratio: Some(1.5),
            data_dir: Some("x".into()),
            ..Overrides::default()
        };
        assert_eq!(o.resolve().unwrap_err().exit_code(), crate::error::EXIT_CONFIG);
        assert!(parse_list::<usize>("dims", "64,x").is_err());
        assert_eq!(parse_list::<usize>("dims", "64, 128").unwrap(), vec![64, 128]);
    }
}
