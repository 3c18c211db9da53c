//! JSON and CSV file helpers with path-carrying errors.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolicity::BadSetProfile;
use crate::space::{MetricSpace, SimilaritySpace};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same value.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn read_space(path: &Path) -> Result<SimilaritySpace> {
    let space: SimilaritySpace = read_json(path)?;
    space.validate()?;
    Ok(space)
}

pub fn read_metric(path: &Path) -> Result<MetricSpace> {
    let metric: MetricSpace = read_json(path)?;
    metric.validate()?;
    Ok(metric)
}

/// `t,measure` rows of the breakpoints of a bad-set profile.
pub fn profile_csv(profile: &BadSetProfile) -> String {
    let mut out = String::from("t,measure\n");
    for (t, m) in profile.rows() {
        out.push_str(&format!("{t},{m}\n"));
    }
    out
}
