//! Optional TOML file supplying defaults for command-line flags.
//!
//! ```toml
//! threads = 4
//! model = ["truncb:16s:k=6", "dpp:16s:diag=8"]
//! bench = "sobel"
//! seed = 1
//! component_policy = ["tuned/tune.json"]
//!
//! [wide]
//! approx = "mdlo"
//! shift = "paper-fidelity"
//! lo = "exact:16u"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use opswap::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub model: Vec<String>,
    pub table: Option<PathBuf>,
    pub objective: Option<String>,
    pub policy: Option<String>,
    pub oracle: Option<bool>,
    pub variant: Option<String>,
    pub bench: Option<String>,
    pub seed: Option<u64>,
    pub split: Option<String>,
    pub trace: Option<PathBuf>,
    pub parts: Option<String>,
    pub range: Option<String>,
    pub samples: Option<u64>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub component_policy: Vec<PathBuf>,
    pub no_component: Option<bool>,
    #[serde(default)]
    pub wide: WideSection,
}

/// Wide multiplier settings: approximated parts, shift mode and per-part
/// model specs overriding the command's `--model`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WideSection {
    pub approx: Option<String>,
    pub shift: Option<String>,
    pub hi: Option<String>,
    pub md1: Option<String>,
    pub md2: Option<String>,
    pub lo: Option<String>,
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(existing(path)?)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format {
            offset: e.span().map_or(0, |s| s.start as u64),
            msg: format!("config: {}", e.message()),
        })
    }
}

/// Fails with a not-found error naming `path` unless it exists.
pub fn existing(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )))
    }
}
