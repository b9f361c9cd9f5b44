//! Model files.
//!
//! A model file is a single UTF-8 JSON object:
//!
//! ```text
//! {
//!   "format": "lmkad-model",
//!   "version": 1,
//!   "model": { "family": "ocsvm" | "mkad" | "lmkad", ... }
//! }
//! ```
//!
//! Matrices are stored as ndarray's serde form `{"v": 1, "dim": [rows, cols],
//! "data": [...]}` in row-major order. Support-vector rows are stored after
//! normalization; the `normalizer` object (`means`, `stddevs`) maps raw inputs
//! into that space. Floats are written with shortest round-trip formatting, so
//! a loaded model reproduces the saved one bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TrainedModel;

pub const FORMAT_TAG: &str = "lmkad-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

pub fn to_json(model: &TrainedModel) -> Result<String> {
    let file = ModelFile {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn from_json(text: &str) -> Result<TrainedModel> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let header: Header = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if header.format != FORMAT_TAG {
        return Err(Error::ModelFormat(format!("unknown format tag {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {}", header.version)));
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(file.model)
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    fs::write(path, to_json(model)? + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}
