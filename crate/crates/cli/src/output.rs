//! File plumbing shared by the commands.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use lenp::blackbox::Forest;
use lenp::data::{Dataset, DatasetFile};
use lenp::neural::EntropyLenModel;
use lenp::Predictor;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{CliError, CliResult};

pub const TRAIN_FILE: &str = "train.json";
pub const VAL_FILE: &str = "val.json";
pub const TEST_FILE: &str = "test.json";
pub const VOCAB_FILE: &str = "vocab.json";
pub const MODEL_FILE: &str = "model.json";
pub const FOREST_FILE: &str = "forest.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializing plain data cannot fail");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json_string(value))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn require(path: PathBuf) -> CliResult<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::usage(format!("{} does not exist", path.display())))
    }
}

pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// The three encoded splits written by `ingest`.
pub fn load_splits(dir: &Path) -> CliResult<Splits> {
    let load = |name: &str| -> CliResult<Dataset> { Ok(DatasetFile::load(require(dir.join(name))?)?) };
    Ok(Splits { train: load(TRAIN_FILE)?, val: load(VAL_FILE)?, test: load(TEST_FILE)? })
}

pub struct ModelDir {
    pub model: EntropyLenModel,
    /// Present for black-box runs.
    pub forest: Option<Forest>,
}

impl ModelDir {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let model = EntropyLenModel::load(require(dir.join(MODEL_FILE))?)?;
        let forest_path = dir.join(FOREST_FILE);
        let forest = if forest_path.is_file() { Some(Forest::load(&forest_path)?) } else { None };
        Ok(Self { model, forest })
    }

    /// The model whose decisions are explained.
    pub fn oracle(&self) -> &dyn Predictor {
        match &self.forest {
            Some(f) => f,
            None => &self.model,
        }
    }
}

pub fn class_index(ds: &Dataset, name: &str) -> CliResult<usize> {
    ds.class_index(name).map_err(|_| {
        CliError::usage(format!("unknown class {name:?}; known classes: {}", ds.class_names.join(", ")))
    })
}
